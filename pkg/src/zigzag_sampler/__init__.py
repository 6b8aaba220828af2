"""Zigzag sampler for strongly log-concave targets.

Simulates the zigzag process exactly by Poisson thinning against
curvature-based envelopes, with full event accounting, a Langevin warm-start
pipeline, closed-form rate analytics, and an empirical diagnostics harness.
"""

from .analytics import (
    GapMoments,
    TimeBudget,
    choose_terminal_time,
    conditional_gap_moment,
    gaussian_chi_square,
    gradient_tail_threshold,
    hybrid_terminal_time,
    log_gaussian_chi_square_plus1,
    proposal_budget_scale,
    refresh_gap_moments,
    simplex_gap_integrals,
)
from .core import (
    EVENT_ACCEPTED,
    EVENT_PROPOSED,
    EVENT_REFRESH,
    EVENT_TERMINAL,
    EventRecord,
    InitialDistribution,
    RunStats,
    SampleResult,
    SamplerConfig,
    ZigzagState,
    available_backends,
    draw_initial,
    invert_clock,
    propose_next_bounce,
    read_events_jsonl,
    resolve_backend,
    run_trajectory,
    sample,
    sample_clock,
    thinning_accept,
    write_events_jsonl,
)
from .diagnostics import (
    CheckReport,
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
from .errors import (
    ConfigError,
    DegenerateVelocityError,
    InfiniteDivergenceError,
    MaxEventsExceededError,
    SamplerError,
    ThinningViolationError,
)
from .lmc import (
    HybridResult,
    LmcSchedule,
    draw_warmstart_position,
    hybrid_sample,
    lmc_step,
    lmc_warmstart_schedule,
    run_lmc_chain,
    run_lmc_ensemble,
)
from .manifest import Manifest, load_manifest, manifest_from_dict
from .potentials import (
    CurvatureReport,
    DiagonalGaussian,
    IsotropicGaussian,
    PotentialOracle,
    SoftenedQuadratic,
    from_manifest,
    segment_value_max,
    verify_curvature_bounds,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
