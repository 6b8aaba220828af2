"""Strongly log-concave potential families with certified curvature bounds.

Every potential U here is smooth, attains its minimum at the origin with
U(0) = 0, and carries declared constants 0 < m <= L such that

    m * I  <=  hess U(x)  <=  L * I        for all x.

The declared L drives the Poisson clock envelopes inside the sampler: the
bounce rate for coordinate j is dominated by L*|v_j|*(|x| + t*|v|) along a
linear stretch of trajectory, which is what makes thinning exact.  A
potential constructed with an L below the true curvature therefore produces
envelope violations downstream; the sampler detects those and aborts with
``ThinningViolationError`` rather than silently sampling the wrong law.

Evaluation accounting
---------------------
``eval_count`` is the complexity meter used throughout: +1 per partial
derivative, +dim per full gradient.  Plain values U(x) are never counted
(they do not appear in the sampling loop's decision path; the sampler only
tracks them for instrumentation).  Counters are per-instance; ``fresh()``
returns a zero-counter copy sharing parameters, so concurrent trajectories
each own their meter while the parameters stay read-only.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError

logger = logging.getLogger(__name__)

_LN2 = math.log(2.0)


def _as_point(x, dim: int) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (dim,):
        raise ConfigError(f"expected a point of shape ({dim},), got {x.shape}")
    return x


class PotentialOracle:
    """Interface shared by the potential families.

    Subclasses implement the uncounted hooks ``_value``, ``_partial``,
    ``_gradient`` (and optionally ``_gradient_batch``); the public methods
    add the evaluation accounting on top.
    """

    kind = "abstract"

    def __init__(self, dim: int, m: float, L: float):
        if not isinstance(dim, (int, np.integer)) or dim < 1:
            raise ConfigError(f"dim must be a positive integer, got {dim!r}")
        if not (0.0 < m <= L) or not math.isfinite(L):
            raise ConfigError(
                f"curvature bounds must satisfy 0 < m <= L < inf, got m={m}, L={L}")
        if m > 1.0 or L < 1.0:
            # Outside the usual normalization m <= 1 <= L.  Legal, but worth a
            # trace when reading confusing condition numbers off a run.
            logger.info("potential declared with m=%g, L=%g (m <= 1 <= L does not hold)",
                        m, L)
        self.dim = int(dim)
        self.m = float(m)
        self.L = float(L)
        self.eval_count = 0

    # -- counted evaluation interface ------------------------------------

    def value(self, x) -> float:
        """Potential value U(x).  Not counted."""
        return self._value(_as_point(x, self.dim))

    def partial(self, x, i: int) -> float:
        """Partial derivative dU/dx_i.  Counts one evaluation."""
        if not 0 <= i < self.dim:
            raise IndexError(f"coordinate {i} out of range for dim {self.dim}")
        self.eval_count += 1
        return self._partial(_as_point(x, self.dim), i)

    def gradient(self, x) -> np.ndarray:
        """Full gradient of U.  Counts dim evaluations."""
        self.eval_count += self.dim
        return self._gradient(_as_point(x, self.dim))

    def gradient_batch(self, X) -> np.ndarray:
        """Gradients for rows of X, shape (n, dim).  Counts n*dim evaluations."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise ConfigError(f"expected batch of shape (n, {self.dim}), got {X.shape}")
        self.eval_count += X.shape[0] * self.dim
        return self._gradient_batch(X)

    def add_evals(self, n: int) -> None:
        """Fold in evaluations performed on this oracle's behalf elsewhere
        (the compiled kernel evaluates partials internally and reports back)."""
        self.eval_count += int(n)

    def fresh(self) -> "PotentialOracle":
        """Copy with a zeroed counter; parameters are shared read-only."""
        raise NotImplementedError

    # -- uncounted hooks ---------------------------------------------------

    def _value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def _partial(self, x: np.ndarray, i: int) -> float:
        raise NotImplementedError

    def _gradient(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _gradient_batch(self, X: np.ndarray) -> np.ndarray:
        return np.apply_along_axis(self._gradient, 1, X)

    # -- optional capabilities --------------------------------------------

    def kernel_spec(self):
        """(kind_code, parameter vector) for the compiled kernel, or None if
        this potential only runs on the pure-Python backend."""
        return None

    def stationary_gaussian_std(self) -> Optional[np.ndarray]:
        """Per-coordinate standard deviations of exp(-U)/Z if that target is
        Gaussian (so exact draws are available), else None."""
        return None

    def __repr__(self):
        return (f"{type(self).__name__}(dim={self.dim}, m={self.m}, L={self.L}, "
                f"eval_count={self.eval_count})")


class IsotropicGaussian(PotentialOracle):
    """U(x) = precision * |x|^2 / 2, the N(0, (1/precision) I) target."""

    kind = "isotropic"

    def __init__(self, dim: int, precision: float = 1.0):
        if not (precision > 0.0 and math.isfinite(precision)):
            raise ConfigError(f"precision must be positive and finite, got {precision}")
        super().__init__(dim, m=precision, L=precision)
        self.precision = float(precision)

    def fresh(self) -> "IsotropicGaussian":
        return IsotropicGaussian(self.dim, self.precision)

    def _value(self, x):
        return 0.5 * self.precision * float(x @ x)

    def _partial(self, x, i):
        return self.precision * float(x[i])

    def _gradient(self, x):
        return self.precision * x

    def _gradient_batch(self, X):
        return self.precision * X

    def kernel_spec(self):
        return 0, np.array([self.precision])

    def stationary_gaussian_std(self):
        return np.full(self.dim, 1.0 / math.sqrt(self.precision))


class DiagonalGaussian(PotentialOracle):
    """U(x) = sum_i a_i x_i^2 / 2 with per-coordinate precisions a_i > 0.

    Curvature bounds default to the true ones, m = min(a), L = max(a).
    `declared_m` / `declared_L` override them; that exists for fault
    injection (an envelope built from a too-small L must trip the sampler's
    thinning-violation abort) and is not something a normal run wants.
    """

    kind = "diagonal"

    def __init__(self, precisions, declared_m: Optional[float] = None,
                 declared_L: Optional[float] = None):
        a = np.ascontiguousarray(precisions, dtype=np.float64)
        if a.ndim != 1 or a.size < 1:
            raise ConfigError("precisions must be a non-empty 1-d array")
        if not (np.all(a > 0.0) and np.all(np.isfinite(a))):
            raise ConfigError("precisions must be positive and finite")
        m = float(a.min()) if declared_m is None else float(declared_m)
        L = float(a.max()) if declared_L is None else float(declared_L)
        if declared_m is not None or declared_L is not None:
            logger.warning("diagonal potential with overridden curvature bounds "
                           "m=%g, L=%g (true range [%g, %g])", m, L, a.min(), a.max())
        super().__init__(a.size, m=m, L=L)
        self.precisions = a
        self._declared = (declared_m, declared_L)

    def fresh(self) -> "DiagonalGaussian":
        return DiagonalGaussian(self.precisions, *self._declared)

    def _value(self, x):
        return 0.5 * float(self.precisions @ (x * x))

    def _partial(self, x, i):
        return float(self.precisions[i]) * float(x[i])

    def _gradient(self, x):
        return self.precisions * x

    def _gradient_batch(self, X):
        return self.precisions * X

    def kernel_spec(self):
        return 1, self.precisions

    def stationary_gaussian_std(self):
        return 1.0 / np.sqrt(self.precisions)


def log_cosh(u):
    """log(cosh(u)), stable for large |u|: |u| + log1p(exp(-2|u|)) - log 2."""
    a = np.abs(u)
    return a + np.log1p(np.exp(-2.0 * a)) - _LN2


class SoftenedQuadratic(PotentialOracle):
    """U(x) = sum_i [ a x_i^2 / 2 + b log(cosh(x_i)) ].

    The smoothing term s = log cosh is even and analytic with s(0) = s'(0) = 0
    and s'' = sech^2 in (0, 1], so the Hessian is diagonal with entries
    a + b sech^2(x_i): L = a + b is attained at the origin and m = a is the
    infimum (approached as |x| grows).  Unlike the Gaussian families the true
    bounce rate here is strictly inside the envelope almost everywhere, which
    makes this family the honest stress test of the thinning path.
    """

    kind = "softened"

    def __init__(self, dim: int, a: float = 1.0, b: float = 1.0):
        if not (a > 0.0 and math.isfinite(a)):
            raise ConfigError(f"a must be positive and finite, got {a}")
        if not (b >= 0.0 and math.isfinite(b)):
            raise ConfigError(f"b must be nonnegative and finite, got {b}")
        super().__init__(dim, m=a, L=a + b)
        self.a = float(a)
        self.b = float(b)

    def fresh(self) -> "SoftenedQuadratic":
        return SoftenedQuadratic(self.dim, self.a, self.b)

    def _value(self, x):
        return float(0.5 * self.a * (x @ x) + self.b * log_cosh(x).sum())

    def _partial(self, x, i):
        xi = float(x[i])
        # math.tanh matches the libm call in the compiled kernel bit for bit
        return self.a * xi + self.b * math.tanh(xi)

    def _gradient(self, x):
        return self.a * x + self.b * np.tanh(x)

    def _gradient_batch(self, X):
        return self.a * X + self.b * np.tanh(X)

    def kernel_spec(self):
        return 2, np.array([self.a, self.b])


_FAMILIES = {
    "isotropic": IsotropicGaussian,
    "diagonal": DiagonalGaussian,
    "softened": SoftenedQuadratic,
}


def from_manifest(spec: dict) -> PotentialOracle:
    """Build a potential from its manifest form.

    Expected shape: {"potential": "isotropic"|"diagonal"|"softened",
    "dim": d, "params": {...}} with family-specific params:

    - isotropic: {"precision": m}
    - diagonal:  {"precisions": [a_1, ..., a_d]} plus optional
      declared_m / declared_L overrides
    - softened:  {"a": ..., "b": ...}
    """
    if not isinstance(spec, dict):
        raise ConfigError(f"potential spec must be an object, got {type(spec).__name__}")
    try:
        family = spec["potential"]
        dim = spec["dim"]
    except KeyError as missing:
        raise ConfigError(f"potential spec is missing key {missing}") from None
    params = spec.get("params", {})
    if family not in _FAMILIES:
        raise ConfigError(f"unknown potential family {family!r}; "
                          f"expected one of {sorted(_FAMILIES)}")
    if not isinstance(params, dict):
        raise ConfigError("potential params must be an object")
    try:
        if family == "isotropic":
            return IsotropicGaussian(dim, **params)
        if family == "softened":
            return SoftenedQuadratic(dim, **params)
        p = DiagonalGaussian(**params)
    except TypeError as exc:
        raise ConfigError(f"bad params for {family!r} potential: {exc}") from None
    if p.dim != dim:
        raise ConfigError(f"diagonal potential has {p.dim} precisions but dim={dim}")
    return p


@dataclass
class CurvatureReport:
    """Probe summary from verify_curvature_bounds."""
    min_curvature: float
    max_curvature: float
    declared_m: float
    declared_L: float
    n_probes: int
    passed: bool


def verify_curvature_bounds(p: PotentialOracle, n_probes: int = 200,
                            seed: int = 0, rel_tol: float = 1e-4) -> CurvatureReport:
    """Empirically probe m <= u' hess U(x) u <= L by second differences.

    Probes random points with random unit directions, plus the coordinate
    axes at a few points (the extreme eigendirections of the families here
    are axis-aligned, so random directions alone undershoot max curvature in
    low dimension).  Tolerance is relative to the declared bounds.
    """
    rng = np.random.default_rng(seed)
    d = p.dim
    scale = max(1.0, 1.0 / math.sqrt(p.m))
    h = 1e-3
    lo, hi = math.inf, -math.inf
    probes = 0

    def second_diff(x, u):
        return (p._value(x + h * u) - 2.0 * p._value(x) + p._value(x - h * u)) / (h * h)

    points = [np.zeros(d)] + [rng.normal(scale=scale, size=d) for _ in range(max(1, n_probes // 4))]
    for k, x in enumerate(points):
        dirs = []
        if k < 4:
            dirs.extend(np.eye(d))
        n_rand = max(1, n_probes // max(1, len(points)))
        for _ in range(n_rand):
            u = rng.normal(size=d)
            dirs.append(u / np.linalg.norm(u))
        for u in dirs:
            c = second_diff(x, u)
            lo = min(lo, c)
            hi = max(hi, c)
            probes += 1

    slack_lo = p.m * (1.0 - rel_tol) - 1e-7
    slack_hi = p.L * (1.0 + rel_tol) + 1e-7
    return CurvatureReport(
        min_curvature=lo, max_curvature=hi,
        declared_m=p.m, declared_L=p.L, n_probes=probes,
        passed=bool(slack_lo <= lo and hi <= slack_hi),
    )


def segment_value_max(p: PotentialOracle, x, v, dt: float, n_grid: int = 257) -> float:
    """Max of U along the stretch {x + t v : t in [0, dt]} on a dense grid.

    For convex U the max sits at an endpoint; the sampler relies on that and
    only tracks event endpoints.  This brute-force version exists as the
    debug cross-check of that shortcut.
    """
    x = _as_point(x, p.dim)
    v = _as_point(v, p.dim)
    ts = np.linspace(0.0, dt, n_grid)
    return max(p._value(x + t * v) for t in ts)
