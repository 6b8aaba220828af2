"""Closed-form quantities surrounding the zigzag run: refresh-gap moments,
Gaussian chi-square divergences, gradient tail thresholds, proposal budgets,
and the terminal-time rules.

Everything in this module is analytic and deterministic.  The simulation
side lives in `core`; the diagnostics harness compares ensemble measurements
against the numbers computed here.  Conventions match the sampler: the
refresh clock has rate sqrt(L) unless stated otherwise, kappa = L/m is the
condition number, and the warm-start quality is measured by the chi-square
divergence of the initial law from the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .errors import ConfigError, InfiniteDivergenceError

__all__ = [
    "GapMoments",
    "GradientTailBound",
    "SimplexGapIntegrals",
    "TimeBudget",
    "choose_terminal_time",
    "conditional_gap_moment",
    "gaussian_chi_square",
    "gradient_tail_threshold",
    "hybrid_terminal_time",
    "log_gaussian_chi_square_plus1",
    "proposal_budget_scale",
    "refresh_gap_moments",
    "simplex_gap_integrals",
]


def _require_curvature(m: float, L: float) -> None:
    if not (math.isfinite(m) and math.isfinite(L) and 0.0 < m <= L):
        raise ConfigError(f"need 0 < m <= L, got m={m}, L={L}")


def _require_positive(**kwargs) -> None:
    for name, value in kwargs.items():
        if not (math.isfinite(value) and value > 0.0):
            raise ConfigError(f"{name} must be positive and finite, got {value}")


# ---------------------------------------------------------------------------
# moments of the squared-refresh-gap statistic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GapMoments:
    """Moments of Xi = sum of squared inter-refresh gaps on [0, T]."""

    mean: float
    second_moment: float
    variance: float
    variance_bound: float           # 8 T / L^{3/2}, valid once sqrt(L) T is large
    tail_probability_bound: float   # P(Xi >= 4 T / sqrt(L)) <= 2 / (sqrt(L) T)
    scaled_time: float              # s = sqrt(L) T, the refresh clock's own unit


# Below this scaled time the closed forms cancel to O(s^2) (mean factor),
# O(s^4) (second moment) and O(s^5) (variance) out of O(1) terms; switch to
# the power series, truncated where the next term is < 1e-12 relative.
_GAP_SERIES_CUTOFF = 0.05


def refresh_gap_moments(L: float, T: float) -> GapMoments:
    """Exact moments of Xi under the Poisson(sqrt(L)) refresh clock.

    Xi sums the squared durations between consecutive velocity refreshes on
    [0, T], the final truncated stretch included.  With s = sqrt(L) T:

        E Xi    = (2/L) (s - 1 + e^{-s})
        E Xi^2  = (4/L^2) (s^2 - 6 + 2 e^{-s} (s^2 + 3s + 3))

    so E Xi <= 2T/sqrt(L) always, and E Xi -> T^2 as s -> 0 (no refresh, one
    gap of length T).  Also returns the two bounds the diagnostics harness
    tests against: variance <= 8 T / L^{3/2} and the tail failure
    probability 2/(sqrt(L) T); both are reported as-is, never clamped.
    """
    _require_positive(L=L, T=T)
    s = math.sqrt(L) * T
    if s >= _GAP_SERIES_CUTOFF:
        # expm1 keeps the O(s^2) remainder of s - 1 + e^{-s} exact here
        mean = (2.0 / L) * (s + math.expm1(-s))
        g = s * s - 6.0 + 2.0 * math.exp(-s) * ((s + 3.0) * s + 3.0)
        second = (4.0 / (L * L)) * g
        variance = second - mean * mean
    else:
        # (s + e^{-s} - 1)/s^2 = 1/2 - s/6 + s^2/24 - ...; the direct form
        # loses ulp(s)/s^2 relative accuracy as s -> 0
        q = 0.5 + s * (-1.0 / 6.0 + s * (1.0 / 24.0 + s * (-1.0 / 120.0
                    + s * (1.0 / 720.0 + s * (-1.0 / 5040.0 + s / 40320.0)))))
        mean = (2.0 / L) * s * s * q
        # g = s^4/4 - 2 s^5/15 + s^6/24 - s^7/105 + s^8/576 + O(s^9)
        g = s**4 * (0.25 + s * (-2.0 / 15.0 + s * (1.0 / 24.0
                    + s * (-1.0 / 105.0 + s / 576.0))))
        second = (4.0 / (L * L)) * g
        # the variance cancels once more: (4/L^2)(s^5/30 - s^6/36 + ...)
        w = s**5 * (1.0 / 30.0 + s * (-1.0 / 36.0
                    + s * (4.0 / 315.0 - s / 240.0)))
        variance = (4.0 / (L * L)) * w
    return GapMoments(
        mean=mean,
        second_moment=second,
        variance=variance,
        variance_bound=8.0 * T / L**1.5,
        tail_probability_bound=2.0 / s,
        scaled_time=s,
    )


def conditional_gap_moment(n_refresh: int, T: float) -> float:
    """E(Xi | exactly n refreshes on [0, T]) = 2 T^2 / (n + 2).

    Conditioned on the count, refresh times are uniform order statistics, so
    the n+1 gaps are a scaled flat Dirichlet; the expectation follows from
    E(gap^2) = 2 T^2 / ((n+1)(n+2)).
    """
    n = int(n_refresh)
    if n < 0 or n != n_refresh:
        raise ConfigError(f"n_refresh must be a nonnegative integer, got {n_refresh}")
    if not (math.isfinite(T) and T >= 0.0):
        raise ConfigError(f"T must be finite and >= 0, got {T}")
    return 2.0 * T * T / (n + 2.0)


class SimplexGapIntegrals(NamedTuple):
    """Unnormalised integrals over the ordered event simplex
    0 < t_1 < ... < t_n < T: `first` integrates sum(gap_k^2), `second`
    integrates (sum(gap_k^2))^2.  Dividing by the simplex volume T^n / n!
    gives the conditional moments of Xi."""

    first: float
    second: float


def simplex_gap_integrals(n_refresh: int, T: float) -> SimplexGapIntegrals:
    """Closed forms 2(n+1)/(n+2)! T^{n+2} and 4(n+1)(n+6)/(n+4)! T^{n+4}.

    Factorials go through lgamma so counts in the hundreds (n is typically
    ~ sqrt(L) T in scaling studies) neither overflow nor lose the exponent.
    """
    n = int(n_refresh)
    if n < 0 or n != n_refresh:
        raise ConfigError(f"n_refresh must be a nonnegative integer, got {n_refresh}")
    _require_positive(T=T)
    log_t = math.log(T)
    first = math.exp(math.log(2.0 * (n + 1)) + (n + 2) * log_t - math.lgamma(n + 3))
    second = math.exp(math.log(4.0 * (n + 1) * (n + 6.0)) + (n + 4) * log_t
                      - math.lgamma(n + 5))
    return SimplexGapIntegrals(first=first, second=second)


# ---------------------------------------------------------------------------
# Gaussian chi-square divergence
# ---------------------------------------------------------------------------

def log_gaussian_chi_square_plus1(var_init: float, var_target: float,
                                  dim: int) -> float:
    """log(1 + chi-square) between centred isotropic Gaussians.

    For N(0, var_init I_d) measured against N(0, var_target I_d) the
    divergence integral has the per-coordinate closed form

        1 + chi2 = ( var_target / sqrt(var_init (2 var_target - var_init)) )^d,

    finite iff var_init < 2 var_target.  The log form is exact for the large
    d where the divergence itself overflows.
    """
    d = int(dim)
    if d < 1 or d != dim:
        raise ConfigError(f"dim must be a positive integer, got {dim}")
    _require_positive(var_init=var_init, var_target=var_target)
    if var_init >= 2.0 * var_target:
        raise InfiniteDivergenceError(var_init, var_target)
    return d * (math.log(var_target)
                - 0.5 * (math.log(var_init) + math.log(2.0 * var_target - var_init)))


def gaussian_chi_square(var_init: float, var_target: float, dim: int) -> float:
    """Chi-square divergence of N(0, var_init I_d) from N(0, var_target I_d).

    Raises InfiniteDivergenceError when var_init >= 2 var_target (the
    integral diverges); returns math.inf when the divergence is finite in
    principle but exceeds float range.
    """
    log_plus1 = log_gaussian_chi_square_plus1(var_init, var_target, dim)
    if log_plus1 > 709.0:
        return math.inf
    # expm1 keeps full precision near var_init == var_target where chi2 ~ 0
    return math.expm1(log_plus1)


# ---------------------------------------------------------------------------
# gradient tails and proposal budgets
# ---------------------------------------------------------------------------

class GradientTailBound(NamedTuple):
    """Per-coordinate gradient tail: under the target, each |dU/dx_i|
    exceeds `threshold` with probability at most `probability_bound`."""

    threshold: float
    probability_bound: float


def gradient_tail_threshold(L: float, dim: int, c: float) -> GradientTailBound:
    """Threshold 2 sqrt(L) + 2 c sqrt(L) log d with failure bound 3 d^{-c}."""
    d = int(dim)
    if d < 1 or d != dim:
        raise ConfigError(f"dim must be a positive integer, got {dim}")
    _require_positive(L=L, c=c)
    root_l = math.sqrt(L)
    threshold = 2.0 * root_l + 2.0 * c * root_l * math.log(d)
    return GradientTailBound(threshold=threshold, probability_bound=3.0 * d**(-c))


def proposal_budget_scale(dim: int, m: float, L: float, T: float) -> float:
    """The scale A = d^{3/2} L^{5/4} m^{-1/2} T^{1/2}.

    A*T predicts the proposed-bounce count of a run of length T up to a
    universal constant; the diagnostics harness fits that constant
    empirically and tests the d- and T-exponents.
    """
    d = int(dim)
    if d < 1 or d != dim:
        raise ConfigError(f"dim must be a positive integer, got {dim}")
    _require_curvature(m, L)
    _require_positive(T=T)
    return d**1.5 * L**1.25 * m**-0.5 * T**0.5


# ---------------------------------------------------------------------------
# terminal-time rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimeBudget:
    """Terminal time for a target chi-square accuracy, with the warm-start
    feasibility flags evaluated when the dimension is known.

    terminal_time = safety_factor * (sqrt(L)/m) * (log(1/epsilon)
                    + log(chi2_init) + log(safety_factor)), and the flags
    test log(chi2_init) <= d/(8 K kappa log d) (initial law warm enough)
    and log(epsilon) >= -d/(8 K kappa log d) (accuracy not below the floor
    the run length can purchase).  Flags are None when dim was not given.
    """

    terminal_time: float
    epsilon: float
    chi2_init: float
    safety_factor: float
    dim: Optional[int] = None
    warm_start_ok: Optional[bool] = None
    epsilon_floor_ok: Optional[bool] = None

    def as_dict(self) -> dict:
        return {
            "terminal_time": self.terminal_time,
            "epsilon": self.epsilon,
            "chi2_init": self.chi2_init,
            "safety_factor": self.safety_factor,
            "dim": self.dim,
            "warm_start_ok": self.warm_start_ok,
            "epsilon_floor_ok": self.epsilon_floor_ok,
        }


def choose_terminal_time(m: float, L: float, epsilon: float, chi2_init: float,
                         safety_factor: float = 1.0,
                         dim: Optional[int] = None) -> TimeBudget:
    """Terminal time K (sqrt(L)/m) (log(1/eps) + log(chi2_init) + log K).

    K is `safety_factor`, the stand-in for the universal constant of the
    mixing bound; it defaults to 1 and scales the whole budget.  Nothing is
    clamped: a nonpositive bracket is a configuration error (the caller
    must lower epsilon or raise chi2_init), because silently flooring the
    time would mask the misconfiguration.
    """
    _require_curvature(m, L)
    _require_positive(epsilon=epsilon, chi2_init=chi2_init,
                      safety_factor=safety_factor)
    bracket = (math.log(safety_factor) + math.log(chi2_init)
               - math.log(epsilon))
    if bracket <= 0.0:
        raise ConfigError(
            f"time-budget bracket log(1/epsilon) + log(chi2_init) + "
            f"log(safety_factor) = {bracket:.6g} must be positive; "
            "lower epsilon or raise chi2_init")
    T = safety_factor * (math.sqrt(L) / m) * bracket

    warm_ok = floor_ok = None
    if dim is not None:
        d = int(dim)
        if d < 2 or d != dim:
            raise ConfigError(f"warm-start flags need integer dim >= 2, got {dim}")
        kappa = L / m
        # compare in log space: exp(d / (8 K kappa log d)) overflows fast
        budget_exponent = d / (8.0 * safety_factor * kappa * math.log(d))
        warm_ok = math.log(chi2_init) <= budget_exponent
        floor_ok = math.log(epsilon) >= -budget_exponent
    return TimeBudget(terminal_time=T, epsilon=epsilon, chi2_init=chi2_init,
                      safety_factor=safety_factor, dim=dim,
                      warm_start_ok=warm_ok, epsilon_floor_ok=floor_ok)


def hybrid_terminal_time(dim: int, m: float, L: float, epsilon: float,
                         safety_factor: float = 1.0) -> float:
    """Zigzag run length for the Langevin-warm-started pipeline.

    T = K (sqrt(L)/m) (log(1/eps) + d^{1/5} kappa^{4/5} log^2(d/kappa)
        + log K): instead of a chi-square argument, the middle term budgets
    for the divergence the Langevin phase is guaranteed to reach.  Needs
    d/kappa > 1 so the log factor is positive.
    """
    d = int(dim)
    if d < 2 or d != dim:
        raise ConfigError(f"dim must be an integer >= 2, got {dim}")
    _require_curvature(m, L)
    _require_positive(epsilon=epsilon, safety_factor=safety_factor)
    kappa = L / m
    if d <= kappa:
        raise ConfigError(
            f"hybrid schedule needs dim > kappa (log(dim/kappa) > 0), "
            f"got dim={d}, kappa={kappa:.6g}")
    lg = math.log(d / kappa)
    bracket = (-math.log(epsilon) + d**0.2 * kappa**0.8 * lg * lg
               + math.log(safety_factor))
    if bracket <= 0.0:
        raise ConfigError(
            f"hybrid time bracket = {bracket:.6g} must be positive; "
            "lower epsilon or raise safety_factor")
    return safety_factor * (math.sqrt(L) / m) * bracket
