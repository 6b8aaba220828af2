# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# cython: language_level=3
"""Compiled event loop.

This is the hot path: one proposal round draws d exponential clock budgets,
inverts each clock, advances the position, and runs at most one thinning
test.  The loop mirrors _pykernel.run draw for draw (same PCG64 stream
consumption, same IEEE expressions; the extension is compiled with
-ffp-contract=off so no fused multiply-adds sneak in).  Only the norm and
potential-value reductions may differ from numpy in the last ulp, because
numpy sums pairwise and this loop sums sequentially.

Potential families are inlined by an integer kind switch:
  0: isotropic quadratic, params = [precision]
  1: diagonal quadratic,  params = per-coordinate precisions
  2: softened quadratic,  params = [a, b], U = sum a x^2/2 + b log cosh x
"""

from libc.math cimport INFINITY, NAN, exp, fabs, log1p, sqrt, tanh
from libc.stdlib cimport free, malloc, realloc
from libc.string cimport memcpy

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (
    random_standard_exponential,
    random_standard_normal,
    random_standard_uniform,
)

import numpy as np

from .errors import (
    DegenerateVelocityError,
    MaxEventsExceededError,
    ThinningViolationError,
)

cdef double LN2 = 0.6931471805599453094172321214581766
# keep in sync with core.ENVELOPE_SLACK
cdef double SLACK = 1e-9

cdef int KIND_ISOTROPIC = 0
cdef int KIND_DIAGONAL = 1
cdef int KIND_SOFTENED = 2

# status codes out of the nogil loop
cdef int ST_OK = 0
cdef int ST_VIOLATION = 1
cdef int ST_MAX_EVENTS = 2
cdef int ST_DEGENERATE = 3
cdef int ST_OOM = 4


cdef inline double log_cosh(double u) noexcept nogil:
    cdef double a = fabs(u)
    return a + log1p(exp(-2.0 * a)) - LN2


cdef inline double pot_value(int kind, const double* prm, const double* x,
                             Py_ssize_t d) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t k
    if kind == KIND_ISOTROPIC:
        for k in range(d):
            s += x[k] * x[k]
        return 0.5 * prm[0] * s
    if kind == KIND_DIAGONAL:
        for k in range(d):
            s += prm[k] * (x[k] * x[k])
        return 0.5 * s
    for k in range(d):
        s += 0.5 * prm[0] * (x[k] * x[k]) + prm[1] * log_cosh(x[k])
    return s


cdef inline double pot_partial(int kind, const double* prm, const double* x,
                               Py_ssize_t j) noexcept nogil:
    if kind == KIND_ISOTROPIC:
        return prm[0] * x[j]
    if kind == KIND_DIAGONAL:
        return prm[j] * x[j]
    return prm[0] * x[j] + prm[1] * tanh(x[j])


cdef struct EventBuf:
    double* data
    size_t n_rows
    size_t cap_rows


cdef inline int buf_push(EventBuf* b, double t, double kind, double j,
                         double ratio, double xnorm) noexcept nogil:
    cdef size_t new_cap
    cdef double* grown
    if b.n_rows == b.cap_rows:
        new_cap = 1024 if b.cap_rows == 0 else b.cap_rows * 2
        grown = <double*> realloc(b.data, new_cap * 5 * sizeof(double))
        if grown == NULL:
            return -1
        b.data = grown
        b.cap_rows = new_cap
    cdef size_t base = b.n_rows * 5
    b.data[base] = t
    b.data[base + 1] = kind
    b.data[base + 2] = j
    b.data[base + 3] = ratio
    b.data[base + 4] = xnorm
    b.n_rows += 1
    return 0


cdef struct LoopStats:
    long n_refresh
    long n_loops
    long n_proposed
    long n_accepted
    long speed_exceed
    long align_exceed
    double sup_u
    double sup_x
    double init_u
    double gap_sq
    double t
    # violation context
    long bad_j
    double bad_rate
    double bad_envelope


cdef int _loop(bitgen_t* rng, int kind, const double* prm, double* x, double* v,
               Py_ssize_t d, double L, double T, double rate,
               bint record, long max_events, EventBuf* buf,
               LoopStats* st) noexcept nogil:
    cdef double t = 0.0
    cdef double last_refresh = 0.0
    cdef double gap_sq = 0.0
    cdef double e, t_refr, xnorm, vnorm, s, u
    cdef double Ei, absvi, A, B, tau, min_tau
    cdef double envelope, bounce_rate, ratio, alpha, dt, gap
    cdef double gk, gn2, vdotg
    cdef bint terminal, accepted, finished = 0
    cdef Py_ssize_t i, k, j
    cdef double speed_limit = 2.0 * sqrt(<double> d)
    cdef double align_limit
    if rate > 0.0 and T > 0.0:
        align_limit = sqrt((<double> d) / (rate * T))
    else:
        align_limit = INFINITY

    # initial condition: fresh velocity plus its refresh clock
    for k in range(d):
        v[k] = random_standard_normal(rng)
    e = random_standard_exponential(rng)
    t_refr = e / rate if rate > 0.0 else INFINITY
    terminal = t_refr >= T - t
    if terminal:
        t_refr = T - t
    st.n_refresh = 1

    s = 0.0
    for k in range(d):
        s += x[k] * x[k]
    xnorm = sqrt(s)
    s = 0.0
    for k in range(d):
        s += v[k] * v[k]
    vnorm = sqrt(s)
    st.init_u = pot_value(kind, prm, x, d)
    st.sup_u = st.init_u
    st.sup_x = xnorm
    if record and buf_push(buf, 0.0, 0.0, -1.0, NAN, xnorm) < 0:
        return ST_OOM

    while t < T:
        if st.n_loops >= max_events:
            st.t = t
            return ST_MAX_EVENTS
        st.n_loops += 1

        min_tau = INFINITY
        j = -1
        for i in range(d):
            Ei = random_standard_exponential(rng)
            absvi = fabs(v[i])
            A = (L * absvi) * xnorm
            B = absvi * vnorm
            if A == 0.0 and B == 0.0:
                tau = INFINITY
            else:
                tau = (2.0 * Ei) / (A + sqrt(A * A + (2.0 * B) * Ei))
            if tau < min_tau:
                min_tau = tau
                j = i

        if min_tau < t_refr:
            # bounce proposal; envelope uses the pre-move |x|
            envelope = (L * fabs(v[j])) * (xnorm + min_tau * vnorm)
            t = t + min_tau
            for k in range(d):
                x[k] = x[k] + v[k] * min_tau
            s = 0.0
            for k in range(d):
                s += x[k] * x[k]
            xnorm = sqrt(s)
            st.n_proposed += 1
            bounce_rate = v[j] * pot_partial(kind, prm, x, j)
            if bounce_rate < 0.0:
                bounce_rate = 0.0
            if bounce_rate > envelope * (1.0 + SLACK):
                st.t = t
                st.bad_j = j
                st.bad_rate = bounce_rate
                st.bad_envelope = envelope
                return ST_VIOLATION
            ratio = bounce_rate / envelope
            alpha = random_standard_uniform(rng)
            accepted = alpha < ratio
            if accepted:
                v[j] = -v[j]
                st.n_accepted += 1
            t_refr = t_refr - min_tau
            u = pot_value(kind, prm, x, d)
            if u > st.sup_u:
                st.sup_u = u
            if xnorm > st.sup_x:
                st.sup_x = xnorm
            if record and buf_push(buf, t, 2.0 if accepted else 1.0, <double> j,
                                   ratio if ratio < 1.0 else 1.0, xnorm) < 0:
                return ST_OOM
        else:
            # refresh clock wins (or the run ends)
            if min_tau == INFINITY and t_refr == INFINITY:
                st.t = t
                return ST_DEGENERATE
            dt = t_refr
            for k in range(d):
                x[k] = x[k] + v[k] * dt
            s = 0.0
            for k in range(d):
                s += x[k] * x[k]
            xnorm = sqrt(s)
            u = pot_value(kind, prm, x, d)
            if u > st.sup_u:
                st.sup_u = u
            if xnorm > st.sup_x:
                st.sup_x = xnorm
            if terminal:
                # the truncated clock fires exactly at T; assigning t avoids a
                # rounding residue t != T spawning a spurious extra refresh
                t = T
                gap = T - last_refresh
                gap_sq += gap * gap
                finished = 1
                if record and buf_push(buf, T, 3.0, -1.0, NAN, xnorm) < 0:
                    return ST_OOM
                break
            t = t + dt
            gap = t - last_refresh
            gap_sq += gap * gap
            last_refresh = t
            for k in range(d):
                v[k] = random_standard_normal(rng)
            e = random_standard_exponential(rng)
            t_refr = e / rate if rate > 0.0 else INFINITY
            terminal = t_refr >= T - t
            if terminal:
                t_refr = T - t
            st.n_refresh += 1
            s = 0.0
            for k in range(d):
                s += v[k] * v[k]
            vnorm = sqrt(s)
            # refresh-condition probes: instrumentation only, uncounted
            if vnorm > speed_limit:
                st.speed_exceed += 1
            gn2 = 0.0
            vdotg = 0.0
            for k in range(d):
                gk = pot_partial(kind, prm, x, k)
                gn2 += gk * gk
                vdotg += v[k] * gk
            if fabs(vdotg) > align_limit * sqrt(gn2):
                st.align_exceed += 1
            if record and buf_push(buf, t, 0.0, -1.0, NAN, xnorm) < 0:
                return ST_OOM

    if not finished:
        # loop guard failed without a terminal event: T = 0, or a bounce
        # rounded t past T by an ulp; either way the run ends here
        gap = T - last_refresh
        gap_sq += gap * gap
        if record and buf_push(buf, T, 3.0, -1.0, NAN, xnorm) < 0:
            return ST_OOM

    st.t = T
    st.gap_sq = gap_sq
    return ST_OK


def run(bit_generator, int kind, double[::1] params, double[::1] x,
        double[::1] v_out, double L, double T, double rate,
        bint record, long max_events):
    """Advance (x, v_out) to time T on the stream of `bit_generator`.

    x is modified in place; v_out receives the final velocity.  Returns
    (t, stats_dict, events_array or None) with the same layout as
    _pykernel.run produces.
    """
    cdef bitgen_t* rng
    cdef Py_ssize_t d = x.shape[0]
    cdef EventBuf buf
    cdef LoopStats st
    cdef int status
    cdef double[:, ::1] ev_view
    if v_out.shape[0] != d:
        raise ValueError("v_out must have the same length as x")
    if kind == KIND_DIAGONAL and params.shape[0] != d:
        raise ValueError("diagonal kernel needs one precision per coordinate")
    if (kind == KIND_ISOTROPIC and params.shape[0] < 1) or \
            (kind == KIND_SOFTENED and params.shape[0] < 2):
        raise ValueError("parameter vector too short for potential kind")
    if kind not in (KIND_ISOTROPIC, KIND_DIAGONAL, KIND_SOFTENED):
        raise ValueError(f"unknown potential kind code {kind}")

    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("expected a numpy BitGenerator")
    rng = <bitgen_t*> PyCapsule_GetPointer(capsule, "BitGenerator")

    buf.data = NULL
    buf.n_rows = 0
    buf.cap_rows = 0
    st.n_refresh = 0
    st.n_loops = 0
    st.n_proposed = 0
    st.n_accepted = 0
    st.speed_exceed = 0
    st.align_exceed = 0
    st.sup_u = 0.0
    st.sup_x = 0.0
    st.init_u = 0.0
    st.gap_sq = 0.0
    st.t = 0.0
    st.bad_j = -1
    st.bad_rate = 0.0
    st.bad_envelope = 0.0

    try:
        with bit_generator.lock:
            with nogil:
                status = _loop(rng, kind, &params[0], &x[0], &v_out[0], d, L, T,
                               rate, record, max_events, &buf, &st)

        if status == ST_VIOLATION:
            raise ThinningViolationError(st.bad_j, st.bad_rate, st.bad_envelope, st.t)
        if status == ST_MAX_EVENTS:
            raise MaxEventsExceededError(max_events, st.t)
        if status == ST_DEGENERATE:
            raise DegenerateVelocityError(st.t)
        if status == ST_OOM:
            raise MemoryError("event log buffer allocation failed")

        stats = {
            "n_refresh": st.n_refresh,
            "n_loops": st.n_loops,
            "n_proposed": st.n_proposed,
            "n_accepted": st.n_accepted,
            "sup_potential": st.sup_u,
            "sup_position_norm": st.sup_x,
            "init_potential": st.init_u,
            "sum_sq_refresh_gaps": st.gap_sq,
            "refresh_speed_exceed": st.speed_exceed,
            "refresh_align_exceed": st.align_exceed,
        }
        events = None
        if record:
            events = np.empty((buf.n_rows, 5), dtype=np.float64)
            if buf.n_rows > 0:
                ev_view = events
                memcpy(&ev_view[0, 0], buf.data, buf.n_rows * 5 * sizeof(double))
        return st.t, stats, events
    finally:
        if buf.data != NULL:
            free(buf.data)
