"""Experiment manifests: one JSON document that pins an entire run.

A manifest carries the potential, the sampler configuration, the initial
law, the trajectory count, the master seed, and any named checks with their
parameter overrides.  Every piece of randomness in a run flows from the one
seed recorded here, so a manifest plus a seed reproduces outputs byte for
byte whatever the parallelism; wall-clock and timestamps are deliberately
kept out of the reproducible outputs (the CLI isolates them in meta.json).

The schema is versioned; unknown top-level keys are rejected rather than
ignored so typos fail loudly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional

from .core import InitialDistribution, SamplerConfig, initial_from_manifest
from .errors import ConfigError
from .lmc import LmcSchedule
from .potentials import PotentialOracle, from_manifest as potential_from_manifest

SCHEMA_VERSION = 1

_TOP_KEYS = {"schema", "potential", "sampler", "init", "n_trajectories",
             "seed", "checks", "warmstart", "epsilon", "safety_factor"}
_SAMPLER_KEYS = {"terminal_time", "refresh_rate", "record_events",
                 "max_events", "backend"}
_WARMSTART_KINDS = ("corollary", "none", "custom")


@dataclass
class Manifest:
    """Validated manifest contents, normalised to plain python types."""

    potential: dict
    sampler: dict
    init: dict = field(default_factory=lambda: {"kind": "point", "x": 0.0})
    n_trajectories: int = 100
    seed: Optional[int] = None
    checks: List[dict] = field(default_factory=list)
    warmstart: dict = field(default_factory=lambda: {"kind": "corollary"})
    epsilon: float = 0.5
    safety_factor: float = 1.0

    # -- builders ----------------------------------------------------------

    def potential_oracle(self) -> PotentialOracle:
        return potential_from_manifest(self.potential)

    def sampler_config(self, seed_override: Optional[int] = None,
                       record_events: Optional[bool] = None) -> SamplerConfig:
        s = self.sampler
        if "terminal_time" not in s:
            raise ConfigError("sampler spec needs 'terminal_time'")
        rec = s.get("record_events", False)
        if record_events is not None:
            rec = record_events
        return SamplerConfig(
            terminal_time=float(s["terminal_time"]),
            refresh_rate=(None if s.get("refresh_rate") is None
                          else float(s["refresh_rate"])),
            seed=self.seed if seed_override is None else int(seed_override),
            record_events=bool(rec),
            max_events=int(s.get("max_events", 100_000_000)),
            backend=str(s.get("backend", "auto")),
        ).validated()

    def initial(self, dim: int) -> InitialDistribution:
        return initial_from_manifest(self.init, dim)

    def warmstart_schedule(self) -> Optional[LmcSchedule]:
        """None for kind 'corollary' (computed from the potential at run
        time) and for kind 'none' (no warm start); the explicit schedule
        for kind 'custom'."""
        kind = self.warmstart.get("kind", "corollary")
        if kind == "custom":
            return LmcSchedule.from_dict(self.warmstart)
        return None

    def check_params(self) -> dict:
        return {c["name"]: c.get("params", {}) for c in self.checks}

    def check_names(self) -> List[str]:
        return [c["name"] for c in self.checks]

    def as_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "potential": self.potential,
            "sampler": self.sampler,
            "init": self.init,
            "n_trajectories": self.n_trajectories,
            "seed": self.seed,
            "checks": self.checks,
            "warmstart": self.warmstart,
            "epsilon": self.epsilon,
            "safety_factor": self.safety_factor,
        }


def manifest_from_dict(raw: dict) -> Manifest:
    if not isinstance(raw, dict):
        raise ConfigError(f"manifest must be a JSON object, got {type(raw).__name__}")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown manifest key(s) {sorted(unknown)}; "
                          f"allowed: {sorted(_TOP_KEYS)}")
    schema = raw.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"unsupported manifest schema {schema!r}; "
                          f"this build reads schema {SCHEMA_VERSION}")
    if "potential" not in raw:
        raise ConfigError("manifest needs a 'potential' spec")
    sampler = raw.get("sampler", {})
    if not isinstance(sampler, dict):
        raise ConfigError("'sampler' must be an object")
    bad = set(sampler) - _SAMPLER_KEYS
    if bad:
        raise ConfigError(f"unknown sampler key(s) {sorted(bad)}; "
                          f"allowed: {sorted(_SAMPLER_KEYS)}")

    n_traj = raw.get("n_trajectories", 100)
    if not isinstance(n_traj, int) or n_traj < 1:
        raise ConfigError(f"n_trajectories must be a positive integer, got {n_traj!r}")

    seed = raw.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer or null, got {seed!r}")

    checks_raw = raw.get("checks", [])
    if not isinstance(checks_raw, list):
        raise ConfigError("'checks' must be a list")
    checks = []
    for entry in checks_raw:
        if isinstance(entry, str):
            checks.append({"name": entry, "params": {}})
        elif isinstance(entry, dict) and "name" in entry:
            checks.append({"name": str(entry["name"]),
                           "params": dict(entry.get("params", {}))})
        else:
            raise ConfigError(f"check entries must be names or "
                              f"{{'name', 'params'}} objects, got {entry!r}")

    warm = raw.get("warmstart", {"kind": "corollary"})
    if isinstance(warm, str):
        warm = {"kind": warm}
    if not isinstance(warm, dict) or warm.get("kind") not in _WARMSTART_KINDS:
        raise ConfigError(f"warmstart kind must be one of {_WARMSTART_KINDS}, "
                          f"got {warm!r}")

    epsilon = float(raw.get("epsilon", 0.5))
    safety = float(raw.get("safety_factor", 1.0))
    if not epsilon > 0.0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}")
    if not safety > 0.0:
        raise ConfigError(f"safety_factor must be positive, got {safety}")

    man = Manifest(potential=dict(raw["potential"]), sampler=dict(sampler),
                   init=dict(raw.get("init", {"kind": "point", "x": 0.0})),
                   n_trajectories=n_traj, seed=seed, checks=checks,
                   warmstart=dict(warm), epsilon=epsilon, safety_factor=safety)
    # fail fast on a bad potential/init spec rather than mid-run
    p = man.potential_oracle()
    man.initial(p.dim)
    return man


def load_manifest(path) -> Manifest:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"manifest {path!r} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"manifest {path!r} is not valid JSON: {exc}") from None
    return manifest_from_dict(raw)
