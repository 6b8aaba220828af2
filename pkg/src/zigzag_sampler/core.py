"""Event-driven zigzag trajectories with exact Poisson thinning.

The continuous-time state is (x, v) with x in R^d moving linearly, dx/dt = v,
and v in {velocity space} changed only at random event times.  Coordinate j
of the velocity flips sign at rate (v_j dU/dx_j(x))_+ and the whole velocity
is redrawn N(0, I) at an independent exponential refresh clock.  Between
events nothing is integrated numerically: the bounce times are simulated
exactly by inverting per-coordinate clocks with survival

    P(tau_i >= s) = exp( -s * L |v_i| |x|  -  s^2/2 * |v_i| |v| ),

which dominates the true rate along the stretch x + s v whenever the
potential has curvature at most L and its minimum at the origin.  The
winning coordinate is then accepted with probability

    (v_j dU/dx_j(x_new))_+  /  ( L |v_j| (|x| + tau_j |v|) )

evaluated from a single partial derivative (|x| is the pre-move norm; the
envelope is never tightened after the fact).  The accept ratio can reach 1
but never exceed it for honestly declared curvature, so a ratio above 1 is
treated as a hard error, not noise.

Two interchangeable backends execute the loop: a compiled Cython kernel and
a pure numpy fallback.  Both consume the same PCG64 stream in the same
order, so they follow the same trajectory up to float rounding.  Every
trajectory gets its own stream, spawned from the master seed as
SeedSequence(seed).spawn(n)[k]; results are byte-reproducible regardless of
how many worker threads run the ensemble.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .errors import (ConfigError, DegenerateVelocityError, MaxEventsExceededError,
                     SamplerError, ThinningViolationError)
from .potentials import PotentialOracle

logger = logging.getLogger(__name__)

try:
    from . import _kernel as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

# Relative slack for the envelope check.  The inequality rate <= envelope is
# exact in real arithmetic but attainable with equality (d=1, velocity
# aligned with position), where rounding can land the rate a few ulps high.
# Genuine under-declared curvature overshoots by O(1) factors.
ENVELOPE_SLACK = 1e-9

EVENT_REFRESH = "refresh"
EVENT_PROPOSED = "proposed_bounce"
EVENT_ACCEPTED = "accepted_bounce"
EVENT_TERMINAL = "terminal"
_KIND_NAMES = (EVENT_REFRESH, EVENT_PROPOSED, EVENT_ACCEPTED, EVENT_TERMINAL)


@dataclass
class SamplerConfig:
    """Run parameters for a single trajectory or an ensemble.

    refresh_rate=None means sqrt(L) of the potential, the rate the mixing
    analysis is tuned for.  0 disables refreshment entirely (legal, logged,
    outside the analyzed regime).  max_events caps proposal rounds as a
    runaway guard; hitting it is an error.
    """

    terminal_time: float
    refresh_rate: Optional[float] = None
    seed: Optional[int] = None
    record_events: bool = False
    max_events: int = 100_000_000
    backend: str = "auto"

    def validated(self) -> "SamplerConfig":
        if not (math.isfinite(self.terminal_time) and self.terminal_time >= 0.0):
            raise ConfigError(f"terminal_time must be finite and >= 0, "
                              f"got {self.terminal_time}")
        if self.refresh_rate is not None:
            if not (math.isfinite(self.refresh_rate) and self.refresh_rate >= 0.0):
                raise ConfigError(f"refresh_rate must be finite and >= 0 (or None), "
                                  f"got {self.refresh_rate}")
        if int(self.max_events) < 1:
            raise ConfigError(f"max_events must be >= 1, got {self.max_events}")
        if self.backend not in ("auto", "compiled", "python"):
            raise ConfigError(f"backend must be auto|compiled|python, got {self.backend!r}")
        return self

    def resolve_rate(self, p: PotentialOracle) -> float:
        if self.refresh_rate is None:
            return math.sqrt(p.L)
        if self.refresh_rate == 0.0:
            logger.warning("refresh_rate=0: no velocity refreshment; this regime "
                           "has no mixing guarantee")
        return float(self.refresh_rate)


@dataclass
class ZigzagState:
    position: np.ndarray
    velocity: np.ndarray
    time: float


@dataclass
class RunStats:
    """Per-trajectory instrumentation.

    n_refresh counts velocity draws including the initial one, so
    n_refresh - 1 is Poisson(rate * T) distributed.  n_partial_evals equals
    n_proposed by construction (one derivative per thinning test); both are
    kept so the accounting is auditable.  n_loops counts proposal rounds
    (each draws dim clocks, hence n_clock_draws).  sum_sq_refresh_gaps is
    the sum of squared inter-refresh durations including the final
    truncated stretch.  refresh_speed_exceed / refresh_align_exceed count
    non-initial refreshes whose fresh velocity lands outside |v| <= 2 sqrt(d)
    or |v.grad U| <= sqrt(d / (rate T)) |grad U|; these feed the failure-rate
    diagnostics and cost nothing on the sampling path.
    """

    n_refresh: int
    n_proposed: int
    n_accepted: int
    n_partial_evals: int
    n_loops: int
    n_clock_draws: int
    sup_potential: float
    sup_position_norm: float
    init_potential: float
    sum_sq_refresh_gaps: float
    refresh_speed_exceed: int
    refresh_align_exceed: int

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class EventRecord:
    time: float
    kind: str
    coordinate: Optional[int]
    thinning_ratio: Optional[float]
    position_norm: float


@dataclass
class InitialDistribution:
    """Position law at t=0.  The velocity is always drawn fresh N(0, I)."""

    kind: str                                # point | gaussian | target | samples
    point: Optional[np.ndarray] = None
    mean: float | np.ndarray = 0.0
    cov_scale: float = 1.0
    samples: Optional[np.ndarray] = None

    @staticmethod
    def at_point(x) -> "InitialDistribution":
        return InitialDistribution(kind="point", point=np.asarray(x, dtype=np.float64))

    @staticmethod
    def at_origin(dim: int) -> "InitialDistribution":
        return InitialDistribution.at_point(np.zeros(dim))

    @staticmethod
    def gaussian(mean=0.0, cov_scale: float = 1.0) -> "InitialDistribution":
        if not (cov_scale >= 0.0 and math.isfinite(cov_scale)):
            raise ConfigError(f"cov_scale must be finite and >= 0, got {cov_scale}")
        return InitialDistribution(kind="gaussian", mean=mean, cov_scale=float(cov_scale))

    @staticmethod
    def target() -> "InitialDistribution":
        return InitialDistribution(kind="target")

    @staticmethod
    def from_samples(X) -> "InitialDistribution":
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ConfigError("initial samples must be a 2-d array (n, dim)")
        return InitialDistribution(kind="samples", samples=X)


def draw_initial(init: InitialDistribution, p: PotentialOracle,
                 rng: np.random.Generator, index: int = 0) -> np.ndarray:
    """One position draw from the initial law, on the trajectory's own stream."""
    d = p.dim
    if init.kind == "point":
        x = np.asarray(init.point, dtype=np.float64)
        if x.shape != (d,):
            raise ConfigError(f"point init has shape {x.shape}, potential dim is {d}")
        return x.copy()
    if init.kind == "gaussian":
        mean = np.broadcast_to(np.asarray(init.mean, dtype=np.float64), (d,))
        return mean + math.sqrt(init.cov_scale) * rng.standard_normal(d)
    if init.kind == "target":
        std = p.stationary_gaussian_std()
        if std is None:
            raise ConfigError(f"potential family {p.kind!r} has no exactly sampleable "
                              "target; 'target' init needs a Gaussian family")
        return std * rng.standard_normal(d)
    if init.kind == "samples":
        if init.samples is None or init.samples.shape[1] != d:
            raise ConfigError("samples init does not match potential dim")
        if index >= init.samples.shape[0]:
            raise ConfigError(f"samples init has {init.samples.shape[0]} rows, "
                              f"trajectory index {index} requested")
        return init.samples[index].astype(np.float64, copy=True)
    raise ConfigError(f"unknown initial distribution kind {init.kind!r}")


def initial_from_manifest(spec: dict, dim: int) -> InitialDistribution:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("init spec must be an object with a 'kind' key")
    kind = spec["kind"]
    if kind == "point":
        x = spec.get("x", 0.0)
        if np.isscalar(x):
            return InitialDistribution.at_point(np.full(dim, float(x)))
        return InitialDistribution.at_point(x)
    if kind == "gaussian":
        return InitialDistribution.gaussian(mean=spec.get("mean", 0.0),
                                            cov_scale=spec.get("cov_scale", 1.0))
    if kind == "target":
        return InitialDistribution.target()
    if kind == "samples":
        path = spec.get("path")
        if path is None:
            raise ConfigError("samples init needs a 'path' to a CSV of draws")
        X = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return InitialDistribution.from_samples(X)
    raise ConfigError(f"unknown init kind {kind!r}")


# ---------------------------------------------------------------------------
# single-event operations (also the building blocks of the python backend)
# ---------------------------------------------------------------------------

def invert_clock(a: float, b: float, e: float) -> float:
    """First arrival of the clock with hazard a + b*s, i.e. solve
    a*tau + b*tau^2/2 = e for the exponential budget e.

    The closed form (-a + sqrt(a^2 + 2 b e)) / b is rewritten as
    2e / (a + sqrt(a^2 + 2 b e)), which avoids the cancellation blow-up
    when a^2 >> 2 b e.  The degenerate hazards get their own exact
    branches (e/a and sqrt(2e/b)), and the discriminant goes through
    hypot so that a*a and 2*b*e can under- or overflow without losing
    the answer.
    """
    if not (a >= 0.0 and b >= 0.0 and e >= 0.0):
        raise ValueError(f"invert_clock needs a, b, e >= 0, got a={a}, b={b}, e={e}")
    if b == 0.0:
        return e / a if a > 0.0 else math.inf
    if a == 0.0:
        return math.sqrt(2.0 * e) / math.sqrt(b)
    return 2.0 * e / (a + math.hypot(a, math.sqrt(b) * math.sqrt(2.0 * e)))


def sample_clock(a: float, b: float, rng: np.random.Generator) -> float:
    """Draw tau with survival exp(-a s - b s^2 / 2)."""
    return invert_clock(a, b, rng.standard_exponential())


def clock_hazard_integral(a: float, b: float, s: float) -> float:
    """Integrated hazard a*s + b*s^2/2; exp(-this) is the survival at s."""
    return a * s + 0.5 * b * s * s


def _clock_times(E: np.ndarray, absv: np.ndarray, xnorm: float, vnorm: float,
                 L: float) -> np.ndarray:
    # element-for-element the same IEEE operations as the compiled loop
    A = (L * absv) * xnorm
    B = absv * vnorm
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = (2.0 * E) / (A + np.sqrt(A * A + (2.0 * B) * E))
    dead = (A == 0.0) & (B == 0.0)
    if dead.any():
        tau = np.where(dead, np.inf, tau)
    return tau


def propose_next_bounce(state: ZigzagState, p: PotentialOracle,
                        rng: np.random.Generator):
    """Draw the d competing bounce clocks and return (j, tau_j, envelope_j).

    j is the argmin coordinate (lowest index on ties), tau_j its arrival
    time, and envelope_j = L |v_j| (|x| + tau_j |v|) the rate bound used by
    the thinning test.  |x| is the norm at the current state: the envelope
    is computed before the move it covers.
    """
    x, v = state.position, state.velocity
    xnorm = math.sqrt(float(np.add.reduce(x * x)))
    vnorm = math.sqrt(float(np.add.reduce(v * v)))
    E = rng.standard_exponential(p.dim)
    tau = _clock_times(E, np.abs(v), xnorm, vnorm, p.L)
    j = int(np.argmin(tau))
    tau_j = float(tau[j])
    if math.isinf(tau_j):
        raise DegenerateVelocityError(state.time)
    envelope = p.L * abs(float(v[j])) * (xnorm + tau_j * vnorm)
    return j, tau_j, envelope


def thinning_accept(state: ZigzagState, j: int, envelope: float,
                    p: PotentialOracle, rng: np.random.Generator):
    """Thinning test at the post-move state: accept the bounce of coordinate
    j with probability rate/envelope, flipping v_j in place on acceptance.

    Costs exactly one partial-derivative evaluation.  Returns
    (accepted, ratio).  Raises ThinningViolationError if the true rate
    exceeds the envelope beyond rounding slack.
    """
    if not envelope > 0.0:
        raise ConfigError(f"envelope must be positive, got {envelope}")
    rate = float(state.velocity[j]) * p.partial(state.position, j)
    if rate < 0.0:
        rate = 0.0
    if rate > envelope * (1.0 + ENVELOPE_SLACK):
        raise ThinningViolationError(j, rate, envelope, state.time)
    ratio = rate / envelope
    accepted = bool(rng.random() < ratio)
    if accepted:
        state.velocity[j] = -state.velocity[j]
    return accepted, ratio


# ---------------------------------------------------------------------------
# trajectory driver
# ---------------------------------------------------------------------------

def available_backends() -> tuple:
    return ("compiled", "python") if _compiled is not None else ("python",)


def resolve_backend(requested: str, p: PotentialOracle) -> str:
    """Pick the executing backend.  'auto' prefers the compiled kernel when
    it is built and the potential family has a kernel implementation."""
    if requested == "python":
        return "python"
    has_kernel = _compiled is not None and p.kernel_spec() is not None
    if requested == "compiled":
        if _compiled is None:
            raise ConfigError("compiled backend requested but the extension is not built")
        if p.kernel_spec() is None:
            raise ConfigError(f"potential family {p.kind!r} has no compiled kernel")
        return "compiled"
    if requested == "auto":
        return "compiled" if has_kernel else "python"
    raise ConfigError(f"unknown backend {requested!r}")


def run_trajectory(p: PotentialOracle, cfg: SamplerConfig, init_x,
                   rng: np.random.Generator, _backend: Optional[str] = None):
    """Run one trajectory to t = terminal_time.

    Returns (state, stats, events) where events is an EventRecord list when
    cfg.record_events else None.  init_x is the starting position; the
    starting velocity is drawn from rng (the initial condition is the
    product law position x N(0, I)), so passing the same rng state
    reproduces the run bit for bit on a given backend.
    """
    cfg = cfg.validated()
    backend = _backend or resolve_backend(cfg.backend, p)
    x = np.array(init_x, dtype=np.float64, copy=True, order="C")
    if x.shape != (p.dim,):
        raise ConfigError(f"init_x has shape {x.shape}, potential dim is {p.dim}")
    rate = cfg.resolve_rate(p)
    T = float(cfg.terminal_time)

    if backend == "compiled":
        kind, params = p.kernel_spec()
        v = np.empty(p.dim)
        t, raw, ev = _compiled.run(rng.bit_generator, int(kind),
                                   np.ascontiguousarray(params, dtype=np.float64),
                                   x, v, p.L, T, rate,
                                   bool(cfg.record_events), int(cfg.max_events))
    else:
        from . import _pykernel
        t, x, v, raw, ev = _pykernel.run(p, x, p.L, T, rate,
                                         bool(cfg.record_events),
                                         int(cfg.max_events), rng)

    stats = RunStats(
        n_refresh=int(raw["n_refresh"]),
        n_proposed=int(raw["n_proposed"]),
        n_accepted=int(raw["n_accepted"]),
        n_partial_evals=int(raw["n_proposed"]),
        n_loops=int(raw["n_loops"]),
        n_clock_draws=int(raw["n_loops"]) * p.dim,
        sup_potential=float(raw["sup_potential"]),
        sup_position_norm=float(raw["sup_position_norm"]),
        init_potential=float(raw["init_potential"]),
        sum_sq_refresh_gaps=float(raw["sum_sq_refresh_gaps"]),
        refresh_speed_exceed=int(raw["refresh_speed_exceed"]),
        refresh_align_exceed=int(raw["refresh_align_exceed"]),
    )
    p.add_evals(stats.n_partial_evals)
    events = to_event_records(ev) if cfg.record_events else None
    return ZigzagState(position=x, velocity=v, time=float(t)), stats, events


def to_event_records(ev: np.ndarray) -> List[EventRecord]:
    out = []
    for t, code, j, ratio, xnorm in ev:
        code = int(code)
        bounce = code in (1, 2)
        out.append(EventRecord(
            time=float(t),
            kind=_KIND_NAMES[code],
            coordinate=int(j) if bounce else None,
            thinning_ratio=float(ratio) if bounce else None,
            position_norm=float(xnorm),
        ))
    return out


def write_events_jsonl(events: Iterable[EventRecord], path) -> None:
    with open(path, "w") as fh:
        for e in events:
            fh.write(json.dumps({"t": e.time, "kind": e.kind, "j": e.coordinate,
                                 "ratio": e.thinning_ratio, "xnorm": e.position_norm}))
            fh.write("\n")


def read_events_jsonl(path) -> List[EventRecord]:
    out = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            out.append(EventRecord(time=d["t"], kind=d["kind"], coordinate=d["j"],
                                   thinning_ratio=d["ratio"], position_norm=d["xnorm"]))
    return out


@dataclass
class SampleResult:
    positions: np.ndarray             # (n, d) final positions
    velocities: np.ndarray            # (n, d) final velocities
    stats: List[RunStats]
    backend: str
    potential_evals: int              # summed over per-trajectory oracles
    events: Optional[list] = field(default=None, repr=False)

    def totals(self) -> dict:
        keys = ("n_refresh", "n_proposed", "n_accepted", "n_partial_evals",
                "n_loops", "n_clock_draws")
        out = {k: int(sum(getattr(s, k) for s in self.stats)) for k in keys}
        out["n_trajectories"] = len(self.stats)
        out["max_sup_potential"] = max((s.sup_potential for s in self.stats), default=0.0)
        out["max_sup_position_norm"] = max((s.sup_position_norm for s in self.stats),
                                           default=0.0)
        out["potential_evals"] = self.potential_evals
        return out

    def stats_arrays(self) -> dict:
        fields = list(RunStats.__dataclass_fields__)
        return {k: np.array([getattr(s, k) for s in self.stats]) for k in fields}


def trajectory_seeds(seed, n: int) -> list:
    """The per-trajectory seed material: SeedSequence(seed).spawn(n).
    Trajectory k always gets child k, whatever the parallelism degree."""
    root = np.random.SeedSequence(seed) if seed is not None else np.random.SeedSequence()
    return root.spawn(n)


def sample(p: PotentialOracle, cfg: SamplerConfig, init: InitialDistribution,
           n_samples: int, *, jobs: int = 1, events_dir=None,
           keep_events: bool = False) -> SampleResult:
    """Run n_samples independent trajectories and collect final states.

    Each trajectory k draws everything (initial position, velocities, clocks,
    acceptances) from its own PCG64 stream seeded by child k of the master
    SeedSequence, so outputs are identical for any `jobs`.  Worker threads
    share memory; the compiled kernel drops the GIL for the event loop.
    """
    cfg = cfg.validated()
    if n_samples < 1:
        raise ConfigError(f"n_samples must be >= 1, got {n_samples}")
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")
    backend = resolve_backend(cfg.backend, p)
    if init.kind == "samples" and init.samples.shape[0] < n_samples:
        raise ConfigError(f"init provides {init.samples.shape[0]} draws "
                          f"for {n_samples} trajectories")
    children = trajectory_seeds(cfg.seed, n_samples)
    d = p.dim
    positions = np.empty((n_samples, d))
    velocities = np.empty((n_samples, d))
    stats: List[Optional[RunStats]] = [None] * n_samples
    eval_counts = [0] * n_samples
    kept = [None] * n_samples if keep_events else None
    if events_dir is not None:
        events_dir = Path(events_dir)
        events_dir.mkdir(parents=True, exist_ok=True)

    def run_one(k: int):
        rng = np.random.Generator(np.random.PCG64(children[k]))
        x0 = draw_initial(init, p, rng, index=k)
        pk = p.fresh()
        state, st, events = run_trajectory(pk, cfg, x0, rng, _backend=backend)
        positions[k] = state.position
        velocities[k] = state.velocity
        stats[k] = st
        eval_counts[k] = pk.eval_count
        if events is not None:
            if events_dir is not None:
                write_events_jsonl(events, events_dir / f"events_{k:06d}.jsonl")
            if kept is not None:
                kept[k] = events

    if jobs == 1:
        for k in range(n_samples):
            run_one(k)
    else:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            list(ex.map(run_one, range(n_samples)))

    return SampleResult(positions=positions, velocities=velocities,
                        stats=stats, backend=backend,
                        potential_evals=int(sum(eval_counts)), events=kept)
