"""Experiment configuration loaded from a YAML document.

Example::

    grid: {width_m: 2000, height_m: 2000, points_per_side: 11, origin: [0, 0]}
    traffic:
      sigmas: [3.6]
      horizons: "1-48"          # list of ints or an inclusive "a-b" range
      seed_count: 100
      base_seed: 0
      epoch_duration_s: 3600
      mean_correction: literal  # or: variance
    energy:
      policy: calibrated        # paper_literal | calibrated | {count_flight: true, ...}
      flight_power_w: 356
      speed_mps: 30
      E_max: 333792
      start_location: null
    solver: {k_max: 100, beta: 2.0, r: 0.5, lambda0: 0.0, dual_search_tol: 1.0e-6}
    baselines: {k: [1, 2, 3, 4, 5, 6]}
    output_dir: results

Every section and key is optional; omitted values take the defaults above.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import yaml

from ..energy import AccountingPolicy, EnergyParams, RotorParams
from ..lagrangian import SolverConfig
from ..traffic import GridSpec

_ENERGY_KEYS = {
    "flight_power_w",
    "speed_mps",
    "eta",
    "P_tra",
    "P_active",
    "P_sleep",
    "P_grasp",
    "E_max",
}


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridSpec = GridSpec()
    sigmas: tuple[float, ...] = (3.6,)
    horizons: tuple[int, ...] = tuple(range(1, 49))
    seed_count: int = 100
    base_seed: int = 0
    epoch_duration_s: float = 3600.0
    mean_correction: str = "literal"
    energy: EnergyParams = field(
        default_factory=lambda: EnergyParams(accounting=AccountingPolicy.preset("calibrated"))
    )
    start_location: Optional[tuple[float, float]] = None
    solver: SolverConfig = SolverConfig()
    bs_counts: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    output_dir: str = "results"

    def __post_init__(self):
        if not self.sigmas:
            raise ValueError("at least one sigma is required")
        if not self.horizons or min(self.horizons) < 1:
            raise ValueError("horizons must be a non-empty list of positive ints")
        if self.seed_count < 1:
            raise ValueError("seed_count must be >= 1")
        if any(not 1 <= k <= self.grid.n_candidates for k in self.bs_counts):
            raise ValueError(f"baseline k values must lie in [1, {self.grid.n_candidates}]")

    @property
    def seeds(self) -> list[int]:
        return [self.base_seed + i for i in range(self.seed_count)]

    @property
    def max_horizon(self) -> int:
        return max(self.horizons)

    def with_overrides(self, seed=None, policy=None, out=None) -> "ExperimentConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, base_seed=int(seed))
        if policy is not None:
            cfg = replace(cfg, energy=cfg.energy.with_policy(parse_policy(policy)))
        if out is not None:
            cfg = replace(cfg, output_dir=str(out))
        return cfg


def parse_policy(value: Any) -> AccountingPolicy:
    if isinstance(value, AccountingPolicy):
        return value
    if isinstance(value, str):
        return AccountingPolicy.preset(value)
    if isinstance(value, dict):
        return AccountingPolicy(**{k: bool(v) for k, v in value.items()})
    raise ValueError(f"cannot interpret policy {value!r}")


def _parse_horizons(value) -> tuple[int, ...]:
    if isinstance(value, str):
        lo, _, hi = value.partition("-")
        return tuple(range(int(lo), int(hi or lo) + 1))
    if isinstance(value, int):
        return (value,)
    return tuple(int(v) for v in value)


def config_from_dict(data: Optional[dict]) -> ExperimentConfig:
    data = dict(data or {})
    unknown = set(data) - {"grid", "traffic", "energy", "solver", "baselines", "output_dir"}
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    kwargs: dict[str, Any] = {}

    g = data.get("grid") or {}
    if g:
        grid_kwargs = dict(g)
        if "origin" in grid_kwargs:
            grid_kwargs["origin"] = tuple(float(v) for v in grid_kwargs["origin"])
        kwargs["grid"] = GridSpec(**grid_kwargs)

    t = dict(data.get("traffic") or {})
    if "sigmas" in t:
        kwargs["sigmas"] = tuple(float(s) for s in t.pop("sigmas"))
    if "horizons" in t:
        kwargs["horizons"] = _parse_horizons(t.pop("horizons"))
    for key in ("seed_count", "base_seed"):
        if key in t:
            kwargs[key] = int(t.pop(key))
    if "epoch_duration_s" in t:
        kwargs["epoch_duration_s"] = float(t.pop("epoch_duration_s"))
    if "mean_correction" in t:
        kwargs["mean_correction"] = str(t.pop("mean_correction"))
    if t:
        raise ValueError(f"unknown traffic keys: {sorted(t)}")

    e = dict(data.get("energy") or {})
    policy = parse_policy(e.pop("policy", "calibrated"))
    rotor = e.pop("rotor", None)
    start = e.pop("start_location", None)
    bad = set(e) - _ENERGY_KEYS
    if bad:
        raise ValueError(f"unknown energy keys: {sorted(bad)}")
    kwargs["energy"] = EnergyParams(
        **{k: float(v) for k, v in e.items()},
        epoch_duration_s=kwargs.get("epoch_duration_s", 3600.0),
        accounting=policy,
        rotor=RotorParams(**rotor) if rotor else None,
    )
    if start is not None:
        kwargs["start_location"] = (float(start[0]), float(start[1]))

    if data.get("solver"):
        kwargs["solver"] = SolverConfig(**data["solver"])
    b = data.get("baselines") or {}
    if "k" in b:
        kwargs["bs_counts"] = tuple(int(k) for k in b["k"])
    if "output_dir" in data:
        kwargs["output_dir"] = str(data["output_dir"])
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    with Path(path).open() as fh:
        return config_from_dict(yaml.safe_load(fh))
