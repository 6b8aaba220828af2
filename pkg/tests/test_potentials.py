"""Potential families: values, derivatives, curvature bounds, accounting."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zigzag_sampler import (ConfigError, DiagonalGaussian, IsotropicGaussian,
                            SoftenedQuadratic, verify_curvature_bounds)
from zigzag_sampler.potentials import from_manifest, log_cosh, segment_value_max


class TestIsotropic:
    def test_exact_values(self):
        p = IsotropicGaussian(3, precision=2.0)
        x = np.array([1.0, -2.0, 0.5])
        assert p.value(x) == pytest.approx(0.5 * 2.0 * (1 + 4 + 0.25))
        assert p.partial(x, 1) == pytest.approx(-4.0)
        np.testing.assert_allclose(p.gradient(x), 2.0 * x)

    def test_curvature_equals_precision(self):
        p = IsotropicGaussian(4, precision=3.5)
        assert p.m == p.L == 3.5

    def test_target_std(self):
        p = IsotropicGaussian(5, precision=4.0)
        np.testing.assert_allclose(p.stationary_gaussian_std(), 0.5)

    def test_rejects_bad_precision(self):
        with pytest.raises(ConfigError):
            IsotropicGaussian(2, precision=0.0)
        with pytest.raises(ConfigError):
            IsotropicGaussian(0, precision=1.0)


class TestDiagonal:
    def test_true_bounds_by_default(self):
        p = DiagonalGaussian([1.0, 4.0, 2.0])
        assert p.m == 1.0 and p.L == 4.0
        assert p.dim == 3

    def test_declared_override_is_kept(self):
        p = DiagonalGaussian([1.0, 4.0], declared_L=2.0)
        assert p.L == 2.0  # fault-injection hook: envelope will be too small

    def test_values(self):
        p = DiagonalGaussian([1.0, 4.0])
        x = np.array([2.0, 1.0])
        assert p.value(x) == pytest.approx(0.5 * (4.0 + 4.0))
        np.testing.assert_allclose(p.gradient(x), [2.0, 4.0])
        np.testing.assert_allclose(p.stationary_gaussian_std(), [1.0, 0.5])

    def test_rejects_nonpositive(self):
        with pytest.raises(ConfigError):
            DiagonalGaussian([1.0, -1.0])


class TestSoftened:
    def test_curvature_bounds(self):
        p = SoftenedQuadratic(2, a=0.5, b=1.5)
        assert p.m == 0.5 and p.L == 2.0

    def test_value_and_gradient(self):
        p = SoftenedQuadratic(2, a=1.0, b=2.0)
        x = np.array([0.3, -1.2])
        expected = 0.5 * (0.09 + 1.44) + 2.0 * (math.log(math.cosh(0.3))
                                                + math.log(math.cosh(1.2)))
        assert p.value(x) == pytest.approx(expected, rel=1e-14)
        np.testing.assert_allclose(p.gradient(x), x + 2.0 * np.tanh(x))

    def test_minimum_at_origin(self):
        p = SoftenedQuadratic(3, a=1.0, b=1.0)
        assert p.value(np.zeros(3)) == 0.0
        np.testing.assert_allclose(p.gradient(np.zeros(3)), 0.0)

    def test_log_cosh_stable_at_large_argument(self):
        # naive log(cosh(800)) overflows; the identity form must not
        u = np.array([800.0, -800.0, 0.0])
        got = log_cosh(u)
        assert got[0] == pytest.approx(800.0 - math.log(2.0), rel=1e-15)
        assert got[1] == got[0]
        assert got[2] == 0.0

    def test_partial_matches_gradient(self):
        p = SoftenedQuadratic(4, a=1.0, b=3.0)
        x = np.array([0.1, -2.0, 5.0, 0.0])
        g = p.gradient(x)
        for i in range(4):
            assert p.partial(x, i) == pytest.approx(g[i], rel=1e-15)


class TestEvalAccounting:
    def test_counts(self):
        p = IsotropicGaussian(3)
        x = np.zeros(3)
        p.value(x)                 # not counted
        assert p.eval_count == 0
        p.partial(x, 0)
        assert p.eval_count == 1
        p.gradient(x)
        assert p.eval_count == 4
        p.gradient_batch(np.zeros((5, 3)))
        assert p.eval_count == 19
        p.add_evals(7)
        assert p.eval_count == 26

    def test_fresh_resets_counter(self):
        p = SoftenedQuadratic(2, a=1.0, b=1.0)
        p.gradient(np.zeros(2))
        q = p.fresh()
        assert q.eval_count == 0 and p.eval_count == 2
        assert (q.a, q.b, q.dim) == (p.a, p.b, p.dim)


class TestFromManifest:
    def test_all_families(self):
        p = from_manifest({"potential": "isotropic", "dim": 4,
                           "params": {"precision": 2.0}})
        assert isinstance(p, IsotropicGaussian) and p.dim == 4
        p = from_manifest({"potential": "diagonal", "dim": 2,
                           "params": {"precisions": [1.0, 3.0]}})
        assert isinstance(p, DiagonalGaussian) and p.L == 3.0
        p = from_manifest({"potential": "softened", "dim": 3,
                           "params": {"a": 1.0, "b": 0.5}})
        assert isinstance(p, SoftenedQuadratic) and p.L == 1.5

    def test_rejections(self):
        with pytest.raises(ConfigError):
            from_manifest({"potential": "unknown", "dim": 2, "params": {}})
        with pytest.raises(ConfigError):
            from_manifest({"dim": 2, "params": {}})
        with pytest.raises(ConfigError):
            from_manifest({"potential": "isotropic", "dim": 2,
                           "params": {"bogus": 1}})
        with pytest.raises(ConfigError):
            # declared dim disagrees with the precision vector
            from_manifest({"potential": "diagonal", "dim": 5,
                           "params": {"precisions": [1.0, 2.0]}})


class TestCurvatureProbes:
    @pytest.mark.parametrize("p", [
        IsotropicGaussian(3, precision=2.0),
        DiagonalGaussian([0.5, 1.0, 4.0]),
        SoftenedQuadratic(3, a=1.0, b=2.0),
    ], ids=["isotropic", "diagonal", "softened"])
    def test_declared_bounds_hold(self, p):
        rep = verify_curvature_bounds(p, n_probes=200, seed=1)
        assert rep.passed, (rep.min_curvature, rep.max_curvature)
        assert rep.min_curvature >= p.m * (1 - 1e-3)
        assert rep.max_curvature <= p.L * (1 + 1e-3)

    def test_underdeclared_l_is_caught(self):
        p = DiagonalGaussian([1.0, 9.0], declared_L=2.0)
        rep = verify_curvature_bounds(p, n_probes=100, seed=0)
        assert not rep.passed
        assert rep.max_curvature > 2.0

    def test_softened_attains_l_at_origin(self):
        p = SoftenedQuadratic(2, a=1.0, b=3.0)
        rep = verify_curvature_bounds(p, n_probes=200, seed=2)
        # L = a + b is attained at x = 0, which the probe list includes
        assert rep.max_curvature == pytest.approx(4.0, rel=1e-4)


class TestSegmentValueMax:
    def test_convex_max_at_endpoint(self):
        p = SoftenedQuadratic(2, a=1.0, b=1.0)
        x = np.array([1.0, -0.5])
        v = np.array([-1.0, 1.0])
        dt = 3.0
        brute = segment_value_max(p, x, v, dt, n_grid=2001)
        endpoint = max(p.value(x), p.value(x + dt * v))
        assert brute <= endpoint * (1 + 1e-12) + 1e-12


@given(a=st.floats(0.1, 5.0), b=st.floats(0.0, 5.0),
       u=st.floats(-30.0, 30.0))
@settings(max_examples=200, deadline=None)
def test_softened_gradient_is_between_curvature_lines(a, b, u):
    """m*x <= U'(x) <= L*x for x >= 0 (and mirrored), per coordinate."""
    p = SoftenedQuadratic(1, a=a, b=b)
    g = p.partial(np.array([u]), 0)
    lo, hi = sorted((p.m * u, p.L * u))
    assert lo - 1e-9 <= g <= hi + 1e-9
