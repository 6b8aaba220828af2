"""Command-line front end.

Subcommands: sample (run an ensemble, write samples + stats), hybrid (the
Langevin-warm-started pipeline), scan-dim / scan-time (event-count scaling
measurements), verify (named diagnostics checks with pass/fail exit),
analytics (closed-form quantities for a manifest, as JSON), and inspect-log
(summarise an event log).

Contract: exit 0 on success / all checks passing, 1 on runtime or check
failure, 2 on usage or configuration errors.  All randomness flows from the
manifest seed (--seed overrides it); outputs are byte-identical across
reruns and across --jobs settings, with timestamps and wall-clock isolated
in meta.json.  The environment variable PDMP_ZIGZAG_LOG sets log verbosity
(DEBUG, INFO, WARNING, ERROR, or a numeric level).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import re
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (choose_terminal_time, gaussian_chi_square,
                        gradient_tail_threshold, hybrid_terminal_time,
                        proposal_budget_scale, refresh_gap_moments)
from .core import InitialDistribution, SamplerConfig, read_events_jsonl, sample
from .diagnostics import (CHECK_RUNNERS, run_named_checks, write_reports_csv,
                          write_reports_json)
from .errors import ConfigError, SamplerError
from .lmc import LmcSchedule, hybrid_sample, lmc_warmstart_schedule
from .manifest import Manifest, load_manifest

logger = logging.getLogger(__name__)

_CUSTOM_WARMSTART = re.compile(
    r"^custom\(\s*(\d+)\s*,\s*([0-9.eE+-]+)\s*\)$")


def _configure_logging() -> None:
    raw = os.environ.get("PDMP_ZIGZAG_LOG", "WARNING")
    level = getattr(logging, raw.upper(), None)
    if level is None:
        try:
            level = int(raw)
        except ValueError:
            level = logging.WARNING
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def _write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_samples_csv(X: np.ndarray, path) -> None:
    header = ",".join(f"x{i + 1}" for i in range(X.shape[1]))
    np.savetxt(path, X, fmt="%.17g", delimiter=",", header=header, comments="")


def _meta(started: float, argv) -> dict:
    return {
        "started_utc": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "finished_utc": datetime.now(timezone.utc).isoformat(),
        "wall_time_s": time.time() - started,
        "versions": {"package": __version__, "numpy": np.__version__,
                     "python": sys.version.split()[0]},
        "argv": list(argv),
    }


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _need_manifest(args) -> Manifest:
    if not args.manifest:
        raise ConfigError("this command needs --manifest PATH")
    return load_manifest(args.manifest)


def _stats_payload(man: Manifest, cfg: SamplerConfig, res) -> dict:
    return {
        "schema": 1,
        "manifest": man.as_dict(),
        "effective_seed": cfg.seed,
        "backend": res.backend,
        "totals": res.totals(),
        "per_trajectory": [s.as_dict() for s in res.stats],
    }


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_sample(args, argv) -> int:
    started = time.time()
    man = _need_manifest(args)
    p = man.potential_oracle()
    cfg = man.sampler_config(seed_override=args.seed)
    init = man.initial(p.dim)
    out = _out_dir(args)
    res = sample(p, cfg, init, man.n_trajectories, jobs=args.jobs,
                 events_dir=out if cfg.record_events else None)
    _write_samples_csv(res.positions, out / "samples.csv")
    _write_json(_stats_payload(man, cfg, res), out / "stats.json")
    _write_json(_meta(started, argv), out / "meta.json")
    logger.info("wrote %d samples to %s", man.n_trajectories, out)
    return 0


def _parse_warmstart(text: str, L: float):
    """'corollary' -> None (auto), 'none' -> 'none', 'custom(N,h)' -> schedule."""
    if text == "corollary":
        return None
    if text == "none":
        return "none"
    match = _CUSTOM_WARMSTART.match(text)
    if match:
        return LmcSchedule(n_steps=int(match.group(1)),
                           step_size=float(match.group(2)),
                           init_cov_scale=1.0 / (2.0 * L)).validated()
    raise ConfigError(f"--warmstart must be corollary, none, or custom(N,h); "
                      f"got {text!r}")


def cmd_hybrid(args, argv) -> int:
    started = time.time()
    man = _need_manifest(args)
    p = man.potential_oracle()
    out = _out_dir(args)
    seed = man.seed if args.seed is None else args.seed
    epsilon = man.epsilon if args.epsilon is None else args.epsilon
    record = bool(man.sampler.get("record_events", False))
    backend = str(man.sampler.get("backend", "auto"))
    refresh = man.sampler.get("refresh_rate")
    refresh = None if refresh is None else float(refresh)

    if args.warmstart is not None:
        schedule = _parse_warmstart(args.warmstart, p.L)
    elif man.warmstart.get("kind") == "none":
        schedule = "none"
    else:
        schedule = man.warmstart_schedule()   # None = corollary rule

    if schedule == "none":
        # zigzag only, from the warm-start Gaussian, over the hybrid horizon
        T = hybrid_terminal_time(p.dim, p.m, p.L, epsilon, man.safety_factor)
        cfg = SamplerConfig(terminal_time=T, refresh_rate=refresh, seed=seed,
                            record_events=record, backend=backend)
        init = InitialDistribution.gaussian(cov_scale=1.0 / (2.0 * p.L))
        res = sample(p, cfg, init, man.n_trajectories, jobs=args.jobs,
                     events_dir=out if record else None)
        payload = _stats_payload(man, cfg, res)
        payload["hybrid"] = {"terminal_time": T, "epsilon": epsilon,
                             "schedule": None, "warmstart": "none",
                             "cost_split": {"lmc_evals": 0,
                                            "zigzag_evals": res.totals()["n_partial_evals"],
                                            "total_evals": res.potential_evals}}
        positions = res.positions
    else:
        hres = hybrid_sample(p, epsilon, man.n_trajectories,
                             safety_factor=man.safety_factor, seed=seed,
                             schedule=schedule, refresh_rate=refresh,
                             backend=backend, record_events=record,
                             jobs=args.jobs, events_dir=out if record else None)
        cfg = SamplerConfig(terminal_time=hres.terminal_time,
                            refresh_rate=refresh, seed=seed,
                            record_events=record, backend=backend)
        payload = _stats_payload(man, cfg, hres.result)
        payload["hybrid"] = {"terminal_time": hres.terminal_time,
                             "epsilon": epsilon,
                             "schedule": hres.schedule.as_dict(),
                             "warmstart": "custom" if schedule else "corollary",
                             "cost_split": hres.cost_split()}
        positions = hres.result.positions

    _write_samples_csv(positions, out / "samples.csv")
    _write_json(payload, out / "stats.json")
    _write_json(_meta(started, argv), out / "meta.json")
    return 0


def _parse_grid(text: str, cast):
    try:
        values = [cast(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"bad grid {text!r}") from None
    if not values:
        raise ConfigError(f"empty grid {text!r}")
    return values


def _loglog_slope(xs, ys) -> float:
    return float(np.polyfit(np.log(np.asarray(xs, float)),
                            np.log(np.asarray(ys, float)), 1)[0])


def _scan_ensembles(man: Manifest, dims, times, n_runs, seed, jobs, backend):
    """Measurement rows for scan-dim / scan-time: one sample() ensemble per
    grid point, same family re-dimensioned, target (or origin) start."""
    from .diagnostics import _scaled_family
    p0 = man.potential_oracle()
    grid = [(d, t) for d in dims for t in times]
    seeds = np.random.SeedSequence(seed).generate_state(len(grid))
    rows = []
    for i, (d, T) in enumerate(grid):
        p = _scaled_family(p0.m, p0.L, d)
        init = (InitialDistribution.target()
                if p.stationary_gaussian_std() is not None
                else InitialDistribution.at_origin(d))
        cfg = SamplerConfig(terminal_time=float(T), seed=int(seeds[i]),
                            backend=backend)
        res = sample(p, cfg, init, n_runs, jobs=jobs)
        tot = res.totals()
        rows.append({
            "dim": d, "terminal_time": float(T), "n_runs": n_runs,
            "mean_proposed": tot["n_proposed"] / n_runs,
            "mean_accepted": tot["n_accepted"] / n_runs,
            "accept_ratio": tot["n_accepted"] / max(tot["n_proposed"], 1),
            "mean_refresh": tot["n_refresh"] / n_runs,
            "budget_constant": tot["n_proposed"] / n_runs
            / (proposal_budget_scale(d, p0.m, p0.L, float(T)) * float(T)),
        })
    return rows


def _write_scan(rows, fit, out: Path, stem: str, started, argv) -> None:
    _write_json({"schema": 1, "rows": rows, "fit": fit}, out / f"{stem}.json")
    cols = ["dim", "terminal_time", "n_runs", "mean_proposed", "mean_accepted",
            "accept_ratio", "mean_refresh", "budget_constant"]
    with open(out / f"{stem}.csv", "w") as fh:
        fh.write(",".join(cols) + "\n")
        for r in rows:
            fh.write(",".join(f"{r[c]:.10g}" for c in cols) + "\n")
    _write_json(_meta(started, argv), out / "meta.json")


def cmd_scan_dim(args, argv) -> int:
    started = time.time()
    man = _need_manifest(args)
    dims = _parse_grid(args.dims, int)
    T = float(args.time if args.time is not None
              else man.sampler.get("terminal_time", 10.0))
    seed = man.seed if args.seed is None else args.seed
    rows = _scan_ensembles(man, dims, [T], int(args.runs), seed, args.jobs,
                           str(man.sampler.get("backend", "auto")))
    fit = {"d_slope": _loglog_slope([r["dim"] for r in rows],
                                    [r["mean_proposed"] for r in rows]),
           "accept_ratio_exponent": _loglog_slope(
               [r["dim"] for r in rows], [r["accept_ratio"] for r in rows]),
           "theory_d_slope": 1.5}
    _write_scan(rows, fit, _out_dir(args), "scan_dim", started, argv)
    print(json.dumps(fit, indent=2, sort_keys=True))
    return 0


def cmd_scan_time(args, argv) -> int:
    started = time.time()
    man = _need_manifest(args)
    times = _parse_grid(args.times, float)
    seed = man.seed if args.seed is None else args.seed
    rows = _scan_ensembles(man, [int(args.dim)], times, int(args.runs), seed,
                           args.jobs, str(man.sampler.get("backend", "auto")))
    fit = {"t_slope": _loglog_slope([r["terminal_time"] for r in rows],
                                    [r["mean_proposed"] for r in rows]),
           "theory_t_slope": 1.5}
    _write_scan(rows, fit, _out_dir(args), "scan_time", started, argv)
    print(json.dumps(fit, indent=2, sort_keys=True))
    return 0


def cmd_verify(args, argv) -> int:
    started = time.time()
    man = _need_manifest(args)
    if args.checks:
        names = [n.strip() for n in args.checks.split(",") if n.strip()]
    else:
        names = man.check_names()
    if not names:
        raise ConfigError("no checks requested: pass --checks NAME[,NAME...] "
                          f"or list them in the manifest; available: "
                          f"{sorted(CHECK_RUNNERS)} or 'all'")
    p = man.potential_oracle()
    cfg = man.sampler_config(seed_override=args.seed)
    init = man.initial(p.dim)
    reports = run_named_checks(names, p, cfg, init,
                               check_params=man.check_params(), jobs=args.jobs)
    out = _out_dir(args)
    write_reports_json(reports, out / "reports.json")
    write_reports_csv(reports, out / "reports.csv")
    _write_json(_meta(started, argv), out / "meta.json")
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: "
              f"statistic={r.statistic:.6g} target={r.target:.6g}")
    return 0 if all(r.passed for r in reports) else 1


def cmd_analytics(args, argv) -> int:
    man = _need_manifest(args)
    p = man.potential_oracle()
    kappa = p.L / p.m
    out: dict = {
        "potential": {"family": p.kind, "dim": p.dim, "m": p.m, "L": p.L,
                      "kappa": kappa},
        "gradient_tail": {},
    }
    for c in (0.5, 1.0):
        tb = gradient_tail_threshold(p.L, p.dim, c)
        out["gradient_tail"][str(c)] = {"threshold": tb.threshold,
                                        "bound": tb.probability_bound}
    T = man.sampler.get("terminal_time")
    if T is not None:
        mom = refresh_gap_moments(p.L, float(T))
        out["refresh_gap_moments"] = {
            "mean": mom.mean, "second_moment": mom.second_moment,
            "variance": mom.variance, "variance_bound": mom.variance_bound,
            "tail_probability_bound": mom.tail_probability_bound,
            "scaled_time": mom.scaled_time}
        out["proposal_budget"] = {
            "scale": proposal_budget_scale(p.dim, p.m, p.L, float(T)),
            "predicted_events": proposal_budget_scale(p.dim, p.m, p.L,
                                                      float(T)) * float(T)}
    std = p.stationary_gaussian_std()
    chi2 = None
    if std is not None and np.all(std == std[0]) \
            and man.init.get("kind") == "gaussian" \
            and np.all(np.asarray(man.init.get("mean", 0.0)) == 0.0):
        try:
            chi2 = gaussian_chi_square(float(man.init.get("cov_scale", 1.0)),
                                       float(std[0]) ** 2, p.dim)
            out["chi_square_init"] = chi2
        except ConfigError:
            pass
    try:
        budget = choose_terminal_time(
            p.m, p.L, man.epsilon,
            chi2 if chi2 not in (None, 0.0) and math.isfinite(chi2) else math.e,
            man.safety_factor, dim=p.dim if p.dim >= 2 else None)
        out["time_budget"] = budget.as_dict()
    except ConfigError as exc:
        out["time_budget"] = {"error": str(exc)}
    try:
        out["hybrid_terminal_time"] = hybrid_terminal_time(
            p.dim, p.m, p.L, man.epsilon, man.safety_factor)
        out["warmstart_schedule"] = lmc_warmstart_schedule(
            p.dim, p.m, p.L).as_dict()
    except ConfigError as exc:
        out["hybrid"] = {"error": str(exc)}
    text = json.dumps(out, indent=2, sort_keys=True)
    print(text)
    if args.out:
        _write_json(out, _out_dir(args) / "analytics.json")
    return 0


def cmd_inspect_log(args, argv) -> int:
    path = Path(args.log)
    if not path.exists():
        raise ConfigError(f"event log {path} not found")
    try:
        events = read_events_jsonl(path)
    except (json.JSONDecodeError, KeyError) as exc:
        raise SamplerError(f"malformed event log {path}: {exc}") from None
    kinds: dict = {}
    for e in events:
        kinds[e.kind] = kinds.get(e.kind, 0) + 1
    times = [e.time for e in events]
    ratios = [e.thinning_ratio for e in events if e.thinning_ratio is not None]
    summary = {
        "path": str(path),
        "n_events": len(events),
        "by_kind": kinds,
        "t_first": times[0] if times else None,
        "t_last": times[-1] if times else None,
        "time_monotone": bool(all(a <= b for a, b in zip(times, times[1:]))),
        "mean_thinning_ratio": float(np.mean(ratios)) if ratios else None,
        "max_thinning_ratio": float(np.max(ratios)) if ratios else None,
        "final_position_norm": events[-1].position_norm if events else None,
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    if args.head:
        for e in events[:args.head]:
            print(json.dumps({"t": e.time, "kind": e.kind, "j": e.coordinate,
                              "ratio": e.thinning_ratio,
                              "xnorm": e.position_norm}))
    return 0


# ---------------------------------------------------------------------------
# parser / entry point
# ---------------------------------------------------------------------------

def _add_common(sp) -> None:
    sp.add_argument("--manifest", help="path to the experiment manifest (JSON)")
    sp.add_argument("--seed", type=int, default=None,
                    help="master seed; overrides the manifest seed")
    sp.add_argument("--out", default=None, help="output directory (default .)")
    sp.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                    help="worker threads (results are independent of this)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zigzag-sampler",
        description="Exact zigzag sampling with instrumentation, "
                    "Langevin warm starts, and verification checks.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="run an ensemble, write samples + stats")
    _add_common(sp)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("hybrid", help="Langevin warm start, then zigzag")
    _add_common(sp)
    sp.add_argument("--warmstart", default=None,
                    help="corollary | none | custom(N,h); overrides manifest")
    sp.add_argument("--epsilon", type=float, default=None,
                    help="target accuracy; overrides manifest")
    sp.set_defaults(func=cmd_hybrid)

    sp = sub.add_parser("scan-dim", help="event counts across dimensions")
    _add_common(sp)
    sp.add_argument("--dims", default="8,16,32,64,128",
                    help="comma-separated dimension grid")
    sp.add_argument("--runs", type=int, default=20, help="runs per grid point")
    sp.add_argument("--time", type=float, default=None,
                    help="terminal time (default: manifest sampler value)")
    sp.set_defaults(func=cmd_scan_dim)

    sp = sub.add_parser("scan-time", help="event counts across run lengths")
    _add_common(sp)
    sp.add_argument("--times", default="5,10,20,40",
                    help="comma-separated terminal-time grid")
    sp.add_argument("--dim", type=int, default=16, help="fixed dimension")
    sp.add_argument("--runs", type=int, default=20, help="runs per grid point")
    sp.set_defaults(func=cmd_scan_time)

    sp = sub.add_parser("verify", help="run named checks, exit 0 iff all pass")
    _add_common(sp)
    sp.add_argument("--checks", default=None,
                    help="comma-separated check names, or 'all'")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("analytics", help="closed-form quantities as JSON")
    _add_common(sp)
    sp.set_defaults(func=cmd_analytics)

    sp = sub.add_parser("inspect-log", help="summarise an event log")
    sp.add_argument("log", help="path to an events_*.jsonl file")
    sp.add_argument("--head", type=int, default=0,
                    help="also print the first N records")
    sp.set_defaults(func=cmd_inspect_log)
    return parser


def main(argv=None) -> int:
    _configure_logging()
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:           # argparse usage errors exit 2, --help 0
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except ConfigError as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SamplerError as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:            # noqa: BLE001 - CLI boundary
        logger.exception("unhandled failure")
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
