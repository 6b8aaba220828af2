"""Shared numerical oracles for the test suite."""

import numpy as np
from numpy.polynomial.legendre import leggauss


def simplex_quadrature(n_times: int, T: float, f, nodes: int = 12) -> float:
    """Integrate f(t_1, ..., t_n) over the ordered simplex
    0 < t_1 < ... < t_n < T by nested Gauss-Legendre quadrature.

    The integrands used here are polynomials (gap sums of degree 2 or 4),
    and each nesting level raises the polynomial degree by one, so modest
    node counts are exact up to rounding; nodes=12 covers total degree 23.
    """
    x, w = leggauss(nodes)
    ts = [0.0] * (n_times + 1)

    def rec(k: int, lo: float) -> float:
        if k > n_times:
            return f(ts[1:])
        half = 0.5 * (T - lo)
        mid = 0.5 * (T + lo)
        total = 0.0
        for xi, wi in zip(x, w):
            ts[k] = mid + half * xi
            total += wi * rec(k + 1, ts[k])
        return total * half

    return rec(1, 0.0)


def gap_square_sum(times, T: float) -> float:
    """sum of squared gaps of 0 <= t_1 <= ... <= t_n <= T, brackets included."""
    pts = np.concatenate(([0.0], np.asarray(times, float), [T]))
    gaps = np.diff(pts)
    return float(gaps @ gaps)


def quad_first_moment(n: int, T: float, nodes: int = 12) -> float:
    """Quadrature oracle for the unnormalised first gap-square integral."""
    return simplex_quadrature(n, T, lambda ts: gap_square_sum(ts, T), nodes)


def quad_second_moment(n: int, T: float, nodes: int = 12) -> float:
    """Quadrature oracle for the unnormalised squared gap-square integral."""
    return simplex_quadrature(n, T, lambda ts: gap_square_sum(ts, T) ** 2, nodes)
