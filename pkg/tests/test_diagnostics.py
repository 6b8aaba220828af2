"""Diagnostic checks: the refresh-gap simulator against the closed-form
moments, each check's pass/fail mechanics on constructed inputs, the named
dispatch used by the CLI, and the report writers."""

import json
import math

import numpy as np
import pytest

from zigzag_sampler import (
    CheckReport,
    ConfigError,
    DiagonalGaussian,
    InitialDistribution,
    IsotropicGaussian,
    RunStats,
    SamplerConfig,
    SoftenedQuadratic,
    check_event_scaling,
    check_gradient_concentration,
    check_refresh_gap_tail,
    check_stationarity,
    check_sup_potential,
    check_warm_start,
    run_named_checks,
    simulate_refresh_gaps,
    write_reports_csv,
    write_reports_json,
)
from zigzag_sampler.analytics import refresh_gap_moments
from zigzag_sampler.diagnostics import CHECK_RUNNERS


def make_stats(**kw) -> RunStats:
    base = dict(
        n_refresh=3, n_proposed=10, n_accepted=4, n_partial_evals=10,
        n_loops=10, n_clock_draws=40, sup_potential=1.0,
        sup_position_norm=0.0, init_potential=0.5, sum_sq_refresh_gaps=0.0,
        refresh_speed_exceed=0, refresh_align_exceed=0,
    )
    base.update(kw)
    return RunStats(**base)


class TestSimulateRefreshGaps:
    def test_zero_rate_is_deterministic_square(self):
        xi = simulate_refresh_gaps(50, 0.0, 3.0, np.random.default_rng(0))
        np.testing.assert_array_equal(xi, np.full(50, 9.0))

    def test_law_matches_closed_forms(self):
        rng = np.random.default_rng(42)
        n = 40_000
        xi = simulate_refresh_gaps(n, 1.0, 10.0, rng)
        mom = refresh_gap_moments(1.0, 10.0)
        se_mean = xi.std(ddof=1) / math.sqrt(n)
        assert abs(xi.mean() - mom.mean) < 4.0 * se_mean
        sq = xi**2
        se_second = sq.std(ddof=1) / math.sqrt(n)
        assert abs(sq.mean() - mom.second_moment) < 4.0 * se_second
        assert np.all(xi > 0.0) and np.all(xi <= 100.0 + 1e-12)

    def test_seeded_reproducibility(self):
        a = simulate_refresh_gaps(500, 2.0, 5.0, np.random.default_rng(7))
        b = simulate_refresh_gaps(500, 2.0, 5.0, np.random.default_rng(7))
        np.testing.assert_array_equal(a, b)

    def test_validation(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ConfigError):
            simulate_refresh_gaps(0, 1.0, 1.0, rng)
        with pytest.raises(ConfigError):
            simulate_refresh_gaps(10, -1.0, 1.0, rng)


class TestWarmStart:
    def test_point_mass_at_origin_passes(self):
        p = IsotropicGaussian(8)
        rep = check_warm_start(InitialDistribution.at_origin(8), p, 1000)
        assert rep.passed and rep.statistic == 0.0
        assert rep.observed["chi2_init"] is None
        assert "not evaluable" in rep.notes

    def test_target_init_has_zero_divergence(self):
        p = IsotropicGaussian(8)
        rep = check_warm_start(
            InitialDistribution.target(), p, 4000, rng=np.random.default_rng(1)
        )
        assert rep.passed
        assert rep.observed["chi2_init"] == 0.0
        assert rep.targets["warm_start_ok"] is True

    def test_overspread_gaussian_fails_both_ways(self):
        # cov 4 against unit target: chi-square diverges and eta ~ 0.9.
        p = IsotropicGaussian(8)
        rep = check_warm_start(
            InitialDistribution.gaussian(cov_scale=4.0), p, 4000,
            rng=np.random.default_rng(2),
        )
        assert not rep.passed
        assert rep.observed["chi2_init"] == math.inf
        assert rep.targets["warm_start_ok"] is False

    def test_concentrated_but_cold_start_fails_divergence_only(self):
        # Tiny covariance keeps eta at 0 while the divergence budget
        # d / (8 kappa log d) is blown at small dimension.
        p = IsotropicGaussian(10)
        rep = check_warm_start(
            InitialDistribution.gaussian(cov_scale=0.05), p, 4000,
            rng=np.random.default_rng(3),
        )
        assert rep.statistic == 0.0
        assert rep.targets["warm_start_ok"] is False
        assert not rep.passed

    def test_non_gaussian_target_skips_divergence(self):
        p = SoftenedQuadratic(6, 1.0, 1.0)
        rep = check_warm_start(
            InitialDistribution.gaussian(cov_scale=0.1), p, 2000,
            rng=np.random.default_rng(4),
        )
        assert rep.passed
        assert rep.targets["warm_start_ok"] is None
        assert "no closed-form divergence" in rep.notes

    def test_dim_one_budget_is_undefined(self):
        p = IsotropicGaussian(1)
        rep = check_warm_start(
            InitialDistribution.target(), p, 2000, rng=np.random.default_rng(5)
        )
        assert rep.passed
        assert "dim 1" in rep.notes

    def test_samples_init(self):
        p = IsotropicGaussian(4)
        X = np.zeros((100, 4))
        rep = check_warm_start(InitialDistribution.from_samples(X), p, 1000)
        assert rep.passed and rep.n_samples == 100
        with pytest.raises(ConfigError):
            check_warm_start(
                InitialDistribution.from_samples(np.zeros((0, 4))), p, 10
            )
        with pytest.raises(ConfigError):
            check_warm_start(InitialDistribution.at_origin(4), p, 0)


class TestSupPotential:
    def test_flat_constants_pass(self):
        T = 10.0
        ens = {
            d: [make_stats(sup_potential=0.9 * T * d) for _ in range(5)]
            for d in (8, 16, 32, 64)
        }
        rep = check_sup_potential(ens, 1.0, 1.0, T)
        assert rep.passed
        assert rep.statistic == pytest.approx(0.0, abs=1e-12)
        consts = rep.observed["empirical_constant_by_dim"]
        assert all(v == pytest.approx(0.9, rel=1e-12) for v in consts.values())
        assert rep.observed["failure_freq_sup_potential"] == 0.0

    def test_growing_constant_fails(self):
        T = 10.0
        ens = {
            d: [make_stats(sup_potential=T * d**1.4)] for d in (8, 16, 32, 64)
        }
        rep = check_sup_potential(ens, 1.0, 1.0, T)
        assert not rep.passed
        assert rep.statistic == pytest.approx(0.4, abs=0.02)

    def test_induced_norm_violation_fails(self):
        T = 10.0
        ens = {
            d: [make_stats(sup_potential=0.5 * T * d)] for d in (8, 16, 32, 64)
        }
        # |X| must stay within sqrt(2 sup_U / m); plant one 10% breach
        bad = make_stats(
            sup_potential=0.5 * T * 8,
            sup_position_norm=1.1 * math.sqrt(2.0 * 0.5 * T * 8),
        )
        ens[8].append(bad)
        rep = check_sup_potential(ens, 1.0, 1.0, T)
        assert not rep.passed
        assert rep.observed["max_norm_to_induced_bound_ratio"] == pytest.approx(
            1.1, rel=1e-12
        )

    def test_failure_frequencies_are_counted(self):
        T = 10.0
        ens = {
            8: [
                make_stats(sup_potential=1.5 * T * 8, n_refresh=5,
                           refresh_speed_exceed=1),
                make_stats(sum_sq_refresh_gaps=4.0 * T, n_refresh=5,
                           refresh_align_exceed=2),
            ],
            64: [make_stats(n_refresh=3)],
        }
        rep = check_sup_potential(ens, 1.0, 1.0, T)
        obs = rep.observed
        assert obs["failure_freq_sup_potential"] == pytest.approx(1.0 / 3.0)
        assert obs["failure_freq_gap_sum"] == pytest.approx(1.0 / 3.0)
        # 10 non-initial refreshes in total: 4 + 4 + 2
        assert obs["failure_freq_refresh_speed"] == pytest.approx(0.1)
        assert obs["failure_freq_refresh_alignment"] == pytest.approx(0.2)

    def test_validation(self):
        with pytest.raises(ConfigError):
            check_sup_potential({8: [make_stats()]}, 1.0, 1.0, 10.0)
        with pytest.raises(ConfigError):
            check_sup_potential({8: [make_stats()], 16: []}, 1.0, 1.0, 10.0)


class TestRefreshGapTail:
    def test_requires_long_horizon(self):
        with pytest.raises(ConfigError):
            check_refresh_gap_tail(100, 1.0, 5.0, np.random.default_rng(0))

    def test_passes_at_scaled_time_fifty(self):
        rep = check_refresh_gap_tail(30_000, 1.0, 50.0, np.random.default_rng(11))
        assert rep.passed
        assert rep.target == pytest.approx(2.0 / 50.0, rel=1e-12)
        mom = refresh_gap_moments(1.0, 50.0)
        assert rep.targets["exact_mean"] == pytest.approx(mom.mean, rel=1e-15)
        assert rep.statistic <= rep.target + 3.0 * rep.standard_error


class TestGradientConcentration:
    def test_isotropic_passes_with_zero_exceedances(self):
        p = IsotropicGaussian(10)
        rep = check_gradient_concentration(p, 50_000, 1.0, np.random.default_rng(0))
        assert rep.passed
        # true tail mass 2*Phi(-6.605) ~ 2e-11: no draw should cross
        assert rep.statistic == 0.0
        assert rep.target == pytest.approx(0.3, rel=1e-12)
        assert p.eval_count == 0

    def test_diagonal_uses_true_curvature_bound(self):
        p = DiagonalGaussian(np.array([1.0, 1.0, 1.0, 4.0]))
        rep = check_gradient_concentration(p, 20_000, 1.0, np.random.default_rng(1))
        assert rep.passed
        assert rep.observed["threshold"] == pytest.approx(
            2.0 * 2.0 + 2.0 * 2.0 * math.log(4.0), rel=1e-12
        )

    def test_validation(self):
        with pytest.raises(ConfigError):
            check_gradient_concentration(
                SoftenedQuadratic(4, 1.0, 1.0), 100, 1.0, np.random.default_rng(0)
            )
        with pytest.raises(ConfigError):
            check_gradient_concentration(
                IsotropicGaussian(4), 0, 1.0, np.random.default_rng(0)
            )


class TestEventScaling:
    def test_grid_validation(self):
        with pytest.raises(ConfigError):
            check_event_scaling((8, 16, 32), 1.0, 1.0, 10.0)
        with pytest.raises(ConfigError):
            check_event_scaling((8, 16, 24, 32), 1.0, 1.0, 10.0)
        with pytest.raises(ConfigError):
            check_event_scaling((8, 16, 32, 64), 1.0, 1.0, 10.0, n_runs=1)
        with pytest.raises(ConfigError):
            check_event_scaling(
                (8, 16, 32, 64), 1.0, 1.0, 10.0, n_runs=4, t_grid=(5.0,)
            )

    def test_dimension_slope_on_isotropic(self):
        rep = check_event_scaling((8, 16, 32, 64), 1.0, 1.0, 6.0, n_runs=6, seed=7)
        assert rep.observed["accounting_ok"]
        assert 1.3 < rep.observed["d_slope"] < 1.7
        assert rep.passed == (1.35 <= rep.observed["d_slope"] <= 1.65)
        assert -0.9 < rep.observed["accept_ratio_exponent"] < -0.2
        consts = list(rep.observed["budget_constant_by_dim"].values())
        assert max(consts) / min(consts) < 1.6
        assert rep.observed["t_slope"] is None

    def test_time_grid_path(self):
        rep = check_event_scaling(
            (8, 16, 32, 64), 1.0, 1.0, 5.0, n_runs=4, seed=3,
            t_grid=(3.0, 6.0), t_dim=8,
        )
        obs = rep.observed
        assert isinstance(obs["t_slope"], float)
        assert len(obs["mean_proposed_by_time"]) == 2
        expected = (
            1.35 <= obs["d_slope"] <= 1.65
            and 1.3 <= obs["t_slope"] <= 1.7
            and obs["accounting_ok"]
        )
        assert rep.passed == expected


class TestStationarity:
    def test_requires_gaussian_target_and_sample_size(self):
        cfg = SamplerConfig(terminal_time=5.0, seed=0)
        with pytest.raises(ConfigError):
            check_stationarity(SoftenedQuadratic(4, 1.0, 1.0), cfg, 500)
        with pytest.raises(ConfigError):
            check_stationarity(IsotropicGaussian(4), cfg, 99)

    def test_isotropic_ensemble_stays_stationary(self):
        p = IsotropicGaussian(6)
        cfg = SamplerConfig(terminal_time=8.0, seed=2024)
        rep = check_stationarity(p, cfg, 1500, jobs=2)
        assert rep.passed
        assert rep.statistic <= 3.0
        assert all(pv >= 0.01 for pv in rep.observed["ks_pvalues"].values())
        assert rep.observed["n_cov_pairs"] == 15

    def test_diagonal_target_and_explicit_ks_coords(self):
        p = DiagonalGaussian(np.array([0.5, 1.0, 2.0, 4.0]))
        cfg = SamplerConfig(terminal_time=10.0, seed=11)
        rep = check_stationarity(p, cfg, 1200, ks_coords=[0, 3])
        assert rep.passed
        assert set(rep.observed["ks_pvalues"]) == {0, 3}


class TestNamedDispatch:
    def test_all_expands_to_every_runner(self, monkeypatch):
        ran = []

        def stub_for(name):
            def stub(p, cfg, init, params, jobs):
                ran.append(name)
                return CheckReport(name=name, passed=True, statistic=0.0,
                                   target=1.0, n_samples=1)
            return stub

        for name in list(CHECK_RUNNERS):
            monkeypatch.setitem(CHECK_RUNNERS, name, stub_for(name))
        reports = run_named_checks(
            ["all"], IsotropicGaussian(4),
            SamplerConfig(terminal_time=1.0, seed=0),
            InitialDistribution.target(),
        )
        assert ran == list(CHECK_RUNNERS)
        assert [r.name for r in reports] == list(CHECK_RUNNERS)

    def test_unknown_and_empty_names_rejected(self):
        p = IsotropicGaussian(4)
        cfg = SamplerConfig(terminal_time=1.0, seed=0)
        init = InitialDistribution.target()
        with pytest.raises(ConfigError, match="unknown check"):
            run_named_checks(["warm_start", "nope"], p, cfg, init)
        with pytest.raises(ConfigError):
            run_named_checks([], p, cfg, init)

    def test_params_route_to_the_named_check(self):
        p = IsotropicGaussian(6)
        cfg = SamplerConfig(terminal_time=2.0, seed=5)
        reports = run_named_checks(
            ["warm_start", "gradient_concentration"], p, cfg,
            InitialDistribution.target(),
            check_params={
                "warm_start": {"n_draws": 500, "seed": 3},
                "gradient_concentration": {"n_draws": 2000, "c": 1.0},
            },
        )
        assert [r.name for r in reports] == ["warm_start", "gradient_concentration"]
        assert reports[0].n_samples == 500
        assert reports[1].n_samples == 2000


class TestReportWriters:
    @staticmethod
    def _reports():
        good = CheckReport(
            name="alpha", passed=True, statistic=0.125, target=3.0,
            n_samples=10, standard_error=0.01,
            observed={"x": np.float64(1.5), "arr": np.arange(3),
                      "by_dim": {8: 0.5}},
            targets={"band": 3.0},
        )
        bad = CheckReport(name="beta", passed=False, statistic=1.0 / 3.0,
                          target=0.15, n_samples=4)
        return [good, bad]

    def test_csv_format_exact(self, tmp_path):
        path = tmp_path / "reports.csv"
        write_reports_csv(self._reports(), path)
        assert path.read_text() == (
            "check,statistic,target,pass\n"
            "alpha,0.125,3,true\n"
            "beta,0.3333333333,0.15,false\n"
        )

    def test_json_round_trip_and_jsonified_numpy(self, tmp_path):
        path = tmp_path / "reports.json"
        write_reports_json(self._reports(), path)
        loaded = json.loads(path.read_text())
        assert [r["name"] for r in loaded] == ["alpha", "beta"]
        assert loaded[0]["observed"]["arr"] == [0, 1, 2]
        assert loaded[0]["observed"]["x"] == 1.5
        assert loaded[0]["passed"] is True and loaded[1]["passed"] is False

    def test_as_dict_is_json_serialisable(self):
        for rep in self._reports():
            json.dumps(rep.as_dict())
