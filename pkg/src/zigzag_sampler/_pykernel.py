"""Pure numpy event loop, the fallback backend.

Draw-for-draw identical to the compiled kernel: velocity refreshes consume d
standard normals then one standard exponential, every proposal round consumes
d standard exponentials, every thinning test one uniform.  Arithmetic in the
decision path uses the same IEEE expressions, so for a common PCG64 stream
the two backends produce the same event sequence up to rounding of the norm
reductions (numpy reduces pairwise, C sequentially).

This backend accepts any PotentialOracle, also ones without a compiled
kernel spec.  It is slow per event and exists for generality, cross-checking
and as the no-toolchain fallback; ensembles at scale want the extension.
"""

from __future__ import annotations

import math

import numpy as np

from .core import ENVELOPE_SLACK, _clock_times
from .errors import (DegenerateVelocityError, MaxEventsExceededError,
                     ThinningViolationError)

_NAN = float("nan")


def run(p, x, L, T, rate, record, max_events, rng, trace=None):
    """Advance (x, v) to time T.  x is modified in place and returned.

    Returns (t, x, v, stats_dict, events_array).  events_array is an
    (n_events, 5) float array of rows (t, kind_code, j, ratio, |x|) with
    kind codes 0=refresh 1=proposed 2=accepted 3=terminal, or None when
    record is false.  `trace(t, x, v, kind)` is a debug hook invoked after
    every event with live arrays (copy before storing).
    """
    d = x.shape[0]
    events = [] if record else None

    t = 0.0
    last_refresh = 0.0
    gap_sq = 0.0
    n_loops = n_proposed = n_accepted = 0
    speed_exceed = align_exceed = 0
    partial_evals = 0

    # initial condition: fresh velocity plus its refresh clock
    v = rng.standard_normal(d)
    e = rng.standard_exponential()
    t_refr = e / rate if rate > 0.0 else math.inf
    terminal = t_refr >= T - t
    if terminal:
        t_refr = T - t
    n_refresh = 1

    xnorm = math.sqrt(float(np.add.reduce(x * x)))
    vnorm = math.sqrt(float(np.add.reduce(v * v)))
    init_potential = p._value(x)
    sup_u = init_potential
    sup_x = xnorm
    if record:
        events.append((0.0, 0.0, -1.0, _NAN, xnorm))
    if trace is not None:
        trace(0.0, x, v, "refresh")

    speed_limit = 2.0 * math.sqrt(d)
    align_limit = math.sqrt(d / (rate * T)) if rate > 0.0 and T > 0.0 else math.inf

    while t < T:
        if n_loops >= max_events:
            raise MaxEventsExceededError(max_events, t)
        n_loops += 1

        E = rng.standard_exponential(d)
        tau = _clock_times(E, np.abs(v), xnorm, vnorm, L)
        j = int(np.argmin(tau))
        tau_j = float(tau[j])

        if tau_j < t_refr:
            # bounce proposal; envelope uses the pre-move |x|
            envelope = L * abs(float(v[j])) * (xnorm + tau_j * vnorm)
            t = t + tau_j
            x += v * tau_j
            xnorm = math.sqrt(float(np.add.reduce(x * x)))
            n_proposed += 1
            bounce_rate = float(v[j]) * p._partial(x, j)
            partial_evals += 1
            if bounce_rate < 0.0:
                bounce_rate = 0.0
            if bounce_rate > envelope * (1.0 + ENVELOPE_SLACK):
                raise ThinningViolationError(j, bounce_rate, envelope, t)
            ratio = bounce_rate / envelope
            alpha = rng.random()
            accepted = alpha < ratio
            if accepted:
                v[j] = -v[j]
                n_accepted += 1
            t_refr -= tau_j
            u = p._value(x)
            if u > sup_u:
                sup_u = u
            if xnorm > sup_x:
                sup_x = xnorm
            if record:
                events.append((t, 2.0 if accepted else 1.0, float(j),
                               min(ratio, 1.0), xnorm))
            if trace is not None:
                trace(t, x, v, "accepted" if accepted else "proposed")
        else:
            # refresh clock wins (or the run ends)
            if math.isinf(tau_j) and math.isinf(t_refr):
                raise DegenerateVelocityError(t)
            dt = t_refr
            x += v * dt
            xnorm = math.sqrt(float(np.add.reduce(x * x)))
            u = p._value(x)
            if u > sup_u:
                sup_u = u
            if xnorm > sup_x:
                sup_x = xnorm
            if terminal:
                # the truncated clock fires exactly at T; assigning t avoids
                # a rounding residue t != T spawning a spurious extra refresh
                t = T
                gap = T - last_refresh
                gap_sq += gap * gap
                if record:
                    events.append((T, 3.0, -1.0, _NAN, xnorm))
                if trace is not None:
                    trace(T, x, v, "terminal")
                break
            t = t + dt
            gap = t - last_refresh
            gap_sq += gap * gap
            last_refresh = t
            v = rng.standard_normal(d)
            e = rng.standard_exponential()
            t_refr = e / rate if rate > 0.0 else math.inf
            terminal = t_refr >= T - t
            if terminal:
                t_refr = T - t
            n_refresh += 1
            vnorm = math.sqrt(float(np.add.reduce(v * v)))
            # refresh-condition probes: instrumentation only, uncounted
            if vnorm > speed_limit:
                speed_exceed += 1
            g = p._gradient(x)
            gnorm = math.sqrt(float(np.add.reduce(g * g)))
            if abs(float(np.add.reduce(v * g))) > align_limit * gnorm:
                align_exceed += 1
            if record:
                events.append((t, 0.0, -1.0, _NAN, xnorm))
            if trace is not None:
                trace(t, x, v, "refresh")
    else:
        # loop guard failed without a terminal event: T = 0, or a bounce
        # rounded t past T by an ulp; either way the run ends here
        gap = T - last_refresh
        gap_sq += gap * gap
        if record:
            events.append((T, 3.0, -1.0, _NAN, xnorm))
        if trace is not None:
            trace(T, x, v, "terminal")

    stats = {
        "n_refresh": n_refresh,
        "n_loops": n_loops,
        "n_proposed": n_proposed,
        "n_accepted": n_accepted,
        "sup_potential": sup_u,
        "sup_position_norm": sup_x,
        "init_potential": init_potential,
        "sum_sq_refresh_gaps": gap_sq,
        "refresh_speed_exceed": speed_exceed,
        "refresh_align_exceed": align_exceed,
    }
    ev = np.array(events, dtype=np.float64).reshape(-1, 5) if record else None
    return t, x, v, stats, ev
