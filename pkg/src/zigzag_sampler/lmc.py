"""Unadjusted Langevin warm starts and the Langevin-to-zigzag pipeline.

The zigzag run length depends on the chi-square divergence of its initial
law from the target, which for a cold start grows linearly in the dimension.
A short unadjusted Langevin phase,

    X_{n+1} = X_n - h grad U(X_n) + sqrt(2 h) xi_n,      xi_n ~ N(0, I_d),

started from N(0, 1/(2L) I_d), buys a dimension-free divergence bound at a
cost of N full gradients, after which the zigzag phase needs only
T ~ d^{1/5} up to logs.  `lmc_warmstart_schedule` builds the (N, h) pair
realising that trade-off; `hybrid_sample` runs the whole pipeline with one
stream per trajectory so results are reproducible for any worker count.

The Langevin phase is biased (its stationary law is not the target); it is
never used as a sampler here, only as an initialiser.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np

from .analytics import hybrid_terminal_time
from .core import (RunStats, SampleResult, SamplerConfig, resolve_backend,
                   run_trajectory, trajectory_seeds, write_events_jsonl)
from .errors import ConfigError
from .potentials import PotentialOracle

logger = logging.getLogger(__name__)

__all__ = [
    "HybridResult",
    "LmcSchedule",
    "draw_warmstart_position",
    "hybrid_sample",
    "lmc_step",
    "lmc_warmstart_schedule",
    "run_lmc_chain",
    "run_lmc_ensemble",
]


@dataclass(frozen=True)
class LmcSchedule:
    """Number of Langevin steps, their step size, and the isotropic variance
    of the starting Gaussian."""

    n_steps: int
    step_size: float
    init_cov_scale: float

    def validated(self) -> "LmcSchedule":
        if int(self.n_steps) < 1:
            raise ConfigError(f"n_steps must be >= 1, got {self.n_steps}")
        if not (math.isfinite(self.step_size) and self.step_size > 0.0):
            raise ConfigError(f"step_size must be positive, got {self.step_size}")
        if not (math.isfinite(self.init_cov_scale) and self.init_cov_scale > 0.0):
            raise ConfigError(
                f"init_cov_scale must be positive, got {self.init_cov_scale}")
        return self

    def as_dict(self) -> dict:
        return {"n_steps": self.n_steps, "step_size": self.step_size,
                "init_cov_scale": self.init_cov_scale}

    @staticmethod
    def from_dict(spec: dict) -> "LmcSchedule":
        try:
            return LmcSchedule(n_steps=int(spec["n_steps"]),
                               step_size=float(spec["step_size"]),
                               init_cov_scale=float(spec["init_cov_scale"])).validated()
        except KeyError as missing:
            raise ConfigError(f"LMC schedule spec is missing {missing}") from None


def lmc_warmstart_schedule(dim: int, m: float, L: float) -> LmcSchedule:
    """The (N, h) schedule for the warm-start phase:

        N = ceil(d^{4/5} kappa^{16/5}),
        h = (4/5) d^{-4/5} kappa^{-16/5} m^{-1} log(d/kappa),

    with starting law N(0, 1/(2L) I_d).  Requires d > kappa so the log is
    positive.  The analysis behind the schedule additionally needs
    h <= m/(4 L^2); that holds automatically in its parameter regime, and
    outside it we keep the formula and log a notice rather than refuse,
    since the regime boundary involves an unknown universal constant.
    """
    d = int(dim)
    if d < 2 or d != dim:
        raise ConfigError(f"dim must be an integer >= 2, got {dim}")
    if not (math.isfinite(m) and math.isfinite(L) and 0.0 < m <= L):
        raise ConfigError(f"need 0 < m <= L, got m={m}, L={L}")
    kappa = L / m
    if d <= kappa:
        raise ConfigError(
            f"warm-start schedule needs dim > kappa (log(dim/kappa) > 0), "
            f"got dim={d}, kappa={kappa:.6g}")
    poly = d**0.8 * kappa**3.2
    n_steps = math.ceil(poly)
    h = 0.8 / (poly * m) * math.log(d / kappa)
    if h > m / (4.0 * L * L):
        logger.warning(
            "warm-start step size h=%.6g exceeds m/(4 L^2)=%.6g; the (N, h) "
            "schedule is outside its analysed regime for dim=%d, kappa=%.3g",
            h, m / (4.0 * L * L), d, kappa)
    return LmcSchedule(n_steps=n_steps, step_size=h,
                       init_cov_scale=1.0 / (2.0 * L)).validated()


def draw_warmstart_position(schedule: LmcSchedule, dim: int,
                            rng: np.random.Generator) -> np.ndarray:
    """One draw from the starting law N(0, init_cov_scale * I_d)."""
    return math.sqrt(schedule.init_cov_scale) * rng.standard_normal(dim)


def lmc_step(x: np.ndarray, p: PotentialOracle, step_size: float,
             rng: np.random.Generator) -> np.ndarray:
    """One unadjusted Langevin step; costs one full gradient (d partials)."""
    if not step_size > 0.0:
        raise ConfigError(f"step_size must be positive, got {step_size}")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (p.dim,):
        raise ConfigError(f"x has shape {x.shape}, potential dim is {p.dim}")
    return (x - step_size * p.gradient(x)
            + math.sqrt(2.0 * step_size) * rng.standard_normal(p.dim))


def run_lmc_chain(p: PotentialOracle, x0, n_steps: int, step_size: float,
                  rng: np.random.Generator) -> np.ndarray:
    """n_steps Langevin steps from x0; returns the final position."""
    x = np.array(x0, dtype=np.float64, copy=True)
    for _ in range(int(n_steps)):
        x = lmc_step(x, p, step_size, rng)
    return x


def run_lmc_ensemble(p: PotentialOracle, x0s, n_steps: int, step_size: float,
                     rng: np.random.Generator,
                     callback: Optional[Callable[[int, np.ndarray], None]] = None,
                     ) -> np.ndarray:
    """Vectorised Langevin evolution of an (n, d) ensemble on one stream.

    The noise is drawn as a single (n, d) block per step, so this does not
    reproduce per-chain streams; it exists for distribution-level studies
    (step-by-step covariance tracking and the like) where only the ensemble
    law matters.  `callback(step, X)` observes the ensemble after each step;
    the array it is handed is the live buffer, not a copy.
    """
    if not step_size > 0.0:
        raise ConfigError(f"step_size must be positive, got {step_size}")
    X = np.array(x0s, dtype=np.float64, copy=True, ndmin=2)
    if X.ndim != 2 or X.shape[1] != p.dim:
        raise ConfigError(f"x0s must be (n, {p.dim}), got {X.shape}")
    root = math.sqrt(2.0 * step_size)
    for step in range(int(n_steps)):
        X -= step_size * p.gradient_batch(X)
        X += root * rng.standard_normal(X.shape)
        if callback is not None:
            callback(step + 1, X)
    return X


@dataclass
class HybridResult:
    """Output of the Langevin-to-zigzag pipeline with the cost split kept
    explicit: the warm start pays exactly n_steps * d partial-derivative
    equivalents per trajectory, the zigzag phase pays one partial per
    proposed bounce."""

    result: SampleResult
    schedule: LmcSchedule
    terminal_time: float
    lmc_positions: np.ndarray          # (n, d) positions entering the zigzag phase
    lmc_evals: int

    def cost_split(self) -> dict:
        zigzag = int(sum(s.n_partial_evals for s in self.result.stats))
        return {
            "lmc_evals": int(self.lmc_evals),
            "zigzag_evals": zigzag,
            "total_evals": int(self.result.potential_evals),
        }


def hybrid_sample(p: PotentialOracle, epsilon: float, n_samples: int, *,
                  safety_factor: float = 1.0, seed=None,
                  schedule: Optional[LmcSchedule] = None,
                  refresh_rate: Optional[float] = None,
                  backend: str = "auto", record_events: bool = False,
                  max_events: int = 100_000_000, jobs: int = 1,
                  events_dir=None, keep_events: bool = False) -> HybridResult:
    """Warm start with Langevin steps, then run zigzag trajectories.

    Each trajectory k owns PCG64 stream k (child k of the master seed) and
    draws its starting point, all Langevin noise, and the whole zigzag run
    from it, in that order; outputs are byte-identical for any `jobs`.  The
    zigzag phase begins from the Langevin endpoint with a fresh N(0, I)
    velocity.  With schedule=None the warm-start schedule is built from the
    potential's (dim, m, L); the run length is always the hybrid time rule
    at the requested epsilon.
    """
    if n_samples < 1:
        raise ConfigError(f"n_samples must be >= 1, got {n_samples}")
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")
    sched = (schedule or lmc_warmstart_schedule(p.dim, p.m, p.L)).validated()
    T = hybrid_terminal_time(p.dim, p.m, p.L, epsilon, safety_factor)
    cfg = SamplerConfig(terminal_time=T, refresh_rate=refresh_rate, seed=seed,
                        record_events=record_events, max_events=max_events,
                        backend=backend).validated()
    resolved = resolve_backend(cfg.backend, p)
    children = trajectory_seeds(seed, n_samples)
    d = p.dim
    positions = np.empty((n_samples, d))
    velocities = np.empty((n_samples, d))
    warm = np.empty((n_samples, d))
    stats: List[Optional[RunStats]] = [None] * n_samples
    eval_counts = [0] * n_samples
    kept = [None] * n_samples if keep_events else None
    if events_dir is not None:
        events_dir = Path(events_dir)
        events_dir.mkdir(parents=True, exist_ok=True)

    def run_one(k: int):
        rng = np.random.Generator(np.random.PCG64(children[k]))
        pk = p.fresh()
        x0 = draw_warmstart_position(sched, d, rng)
        xw = run_lmc_chain(pk, x0, sched.n_steps, sched.step_size, rng)
        warm[k] = xw
        state, st, events = run_trajectory(pk, cfg, xw, rng, _backend=resolved)
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

    result = SampleResult(positions=positions, velocities=velocities,
                          stats=stats, backend=resolved,
                          potential_evals=int(sum(eval_counts)), events=kept)
    return HybridResult(result=result, schedule=sched, terminal_time=T,
                        lmc_positions=warm,
                        lmc_evals=n_samples * sched.n_steps * d)
