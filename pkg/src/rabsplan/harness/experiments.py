"""Multi-seed sweeps comparing the battery-limited RABS with its baselines."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from ..baselines import fixed_bs, ideal_rabs
from ..energy import PAPER_LITERAL
from ..instance import Instance, build_instance
from ..lagrangian import solve
from ..traffic import TrafficParams, sample_field
from .config import ExperimentConfig

SUMMARY_HEADER = (
    "sigma",
    "N",
    "series",
    "seed_count",
    "mean_served",
    "std_served",
    "mean_energy_prop",
    "mean_energy_comm",
    "mean_energy_grasp",
)
PER_SEED_HEADER = (
    "sigma",
    "N",
    "seed",
    "series",
    "served",
    "energy_prop",
    "energy_comm",
    "energy_grasp",
    "status",
)
SHARES_HEADER = ("sigma", "N", "series", "share_prop", "share_comm", "share_grasp")
BASELINE_HEADER = ("k", "N", "seed", "served")
CROSSOVER_HEADER = ("sigma", "k", "intervals", "winning_horizons")
GAINS_HEADER = ("sigma", "N", "seed_count", "mean_ratio", "std_ratio", "ratio_of_means")

RABS = "rabs"
IDEAL = "ideal_rabs"

POLICY_NOTE = (
    "NOTE: with the default power table and 1 h epochs the all-sleep energy "
    "N*(E_sleep + E_grasp) already exceeds E_max = 333792 J for N >= 2, so a "
    "budget charging every component leaves almost nothing to plan. The "
    "'calibrated' policy charges only flight energy against the battery; "
    "communication and grasping energy are reported but not charged. Policy in effect: {policy}."
)


def bs_series(k: int) -> str:
    return f"bs_k{k}"


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class SweepResult:
    config: ExperimentConfig
    records: list[dict] = field(default_factory=list)

    def series_values(self, sigma: float, n: int, series: str) -> np.ndarray:
        return np.array(
            [
                r["served"]
                for r in self.records
                if r["sigma"] == sigma and r["N"] == n and r["series"] == series and r["status"] == "ok"
            ]
        )

    def summary_rows(self) -> list[dict]:
        rows = []
        groups: dict[tuple, list[dict]] = {}
        for r in self.records:
            groups.setdefault((r["sigma"], r["N"], r["series"]), []).append(r)
        for (sigma, n, series), recs in groups.items():
            ok = [r for r in recs if r["status"] == "ok"]
            served = np.array([r["served"] for r in ok])
            row = {"sigma": sigma, "N": n, "series": series, "seed_count": len(ok)}
            row["mean_served"] = float(served.mean()) if len(ok) else math.nan
            row["std_served"] = float(served.std(ddof=1)) if len(ok) > 1 else 0.0 if ok else math.nan
            for key, col in (
                ("energy_prop", "mean_energy_prop"),
                ("energy_comm", "mean_energy_comm"),
                ("energy_grasp", "mean_energy_grasp"),
            ):
                vals = [r[key] for r in ok if r[key] is not None]
                row[col] = float(np.mean(vals)) if vals else None
            rows.append(row)
        return rows

    def share_rows(self) -> list[dict]:
        """Energy shares of total consumed, computed from the seed-mean components."""
        rows = []
        for row in self.summary_rows():
            if row["mean_energy_prop"] is None:
                continue
            parts = (row["mean_energy_prop"], row["mean_energy_comm"], row["mean_energy_grasp"])
            total = sum(parts)
            shares = tuple(p / total for p in parts) if total > 0 else (0.0, 0.0, 0.0)
            rows.append(
                {
                    "sigma": row["sigma"],
                    "N": row["N"],
                    "series": row["series"],
                    "share_prop": shares[0],
                    "share_comm": shares[1],
                    "share_grasp": shares[2],
                }
            )
        return rows


def instance_for(cfg: ExperimentConfig, field_, sigma: float, seed: int, n: int) -> Instance:
    return build_instance(
        field_,
        cfg.grid,
        cfg.energy,
        n_epochs=n,
        start_location=cfg.start_location,
        meta={"sigma": sigma, "seed": seed, "N": n, "mean_correction": cfg.mean_correction},
    )


def _field(cfg: ExperimentConfig, sigma: float, seed: int):
    # one realization at the longest horizon per (sigma, seed); shorter
    # horizons use its leading epochs
    params = TrafficParams(
        sigma,
        cfg.max_horizon,
        epoch_duration_s=cfg.epoch_duration_s,
        seed=seed,
        mean_correction=cfg.mean_correction,
    )
    return sample_field(cfg.grid, params)


def _energy_cols(breakdown) -> dict:
    return {
        "energy_prop": breakdown.propulsion,
        "energy_comm": breakdown.communication,
        "energy_grasp": breakdown.grasping,
    }


def _run_unit(cfg: ExperimentConfig, sigma: float, seed: int) -> list[dict]:
    field_ = _field(cfg, sigma, seed)
    out = []
    for n in sorted(cfg.horizons):
        truncated = field_.truncate(n)
        inst = instance_for(cfg, field_, sigma, seed, n)
        base = {"sigma": sigma, "N": n, "seed": seed}
        try:
            report = solve(inst, cfg.solver)
            out.append(
                {**base, "series": RABS, "served": report.objective, **_energy_cols(report.energy_reported), "status": "ok"}
            )
        except ValueError as exc:
            out.append(
                {
                    **base,
                    "series": RABS,
                    "served": math.nan,
                    "energy_prop": None,
                    "energy_comm": None,
                    "energy_grasp": None,
                    "status": f"failed: {exc}",
                }
            )
        plan, served = ideal_rabs(inst)
        out.append(
            {
                **base,
                "series": IDEAL,
                "served": served,
                **_energy_cols(inst.energy_of(plan.active_epochs, PAPER_LITERAL)),
                "status": "ok",
            }
        )
        for k in cfg.bs_counts:
            dep = fixed_bs(truncated, k)
            out.append(
                {
                    **base,
                    "series": bs_series(k),
                    "served": dep.served,
                    "energy_prop": None,
                    "energy_comm": None,
                    "energy_grasp": None,
                    "status": "ok",
                }
            )
    return out


def _series_rank(cfg: ExperimentConfig, series: str) -> int:
    order = [RABS, IDEAL] + [bs_series(k) for k in cfg.bs_counts]
    return order.index(series)


def run_sweep(cfg: ExperimentConfig, jobs: int = 1) -> SweepResult:
    """Solve every (sigma, N, seed) cell.

    Units of work are (sigma, seed) pairs; with ``jobs > 1`` they run in
    worker processes. Records are merged in (sigma, N, seed, series) order
    regardless of completion order.
    """
    units = [(sigma, seed) for sigma in cfg.sigmas for seed in cfg.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_unit, [cfg] * len(units), *zip(*units)))
    else:
        chunks = [_run_unit(cfg, sigma, seed) for sigma, seed in units]
    records = [r for chunk in chunks for r in chunk]
    sigma_rank = {s: i for i, s in enumerate(cfg.sigmas)}
    records.sort(
        key=lambda r: (sigma_rank[r["sigma"]], r["N"], r["seed"], _series_rank(cfg, r["series"]))
    )
    return SweepResult(cfg, records)


def _write_csv(path: Path, header: Iterable[str], rows: Iterable[dict]) -> Path:
    header = list(header)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(row.get(col)) for col in header])
    return path


def write_sweep(result: SweepResult, out_dir) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    summary = result.summary_rows()
    paths = {
        "summary": _write_csv(out_dir / "summary.csv", SUMMARY_HEADER, summary),
        "per_seed": _write_csv(out_dir / "per_seed.csv", PER_SEED_HEADER, result.records),
        "energy_shares": _write_csv(out_dir / "energy_shares.csv", SHARES_HEADER, result.share_rows()),
    }
    for sigma in cfg.sigmas:
        rows = [
            {"k": int(r["series"][4:]), "N": r["N"], "seed": r["seed"], "served": r["served"]}
            for r in result.records
            if r["sigma"] == sigma and r["series"].startswith("bs_k")
        ]
        paths[f"baselines_{sigma:g}"] = _write_csv(
            out_dir / f"baselines_sigma{sigma:g}.csv", BASELINE_HEADER, rows
        )

    lines = [POLICY_NOTE.format(policy=cfg.energy.accounting.name), ""]
    failed = [r for r in result.records if r["status"] != "ok"]
    if failed:
        lines.append(f"{len(failed)} cell(s) failed; first: {failed[0]['status']}")
        lines.append("")
    lines.append(f"{'sigma':>6} {'N':>4} {'series':<12} {'seeds':>5} {'mean_served':>16} {'std_served':>16}")
    for row in summary:
        lines.append(
            f"{row['sigma']:>6g} {row['N']:>4d} {row['series']:<12} {row['seed_count']:>5d} "
            f"{row['mean_served']:>16.6g} {row['std_served']:>16.6g}"
        )
    paths["text"] = out_dir / "summary.txt"
    paths["text"].write_text("\n".join(lines) + "\n")
    return paths


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def contiguous_intervals(values: Iterable[int]) -> list[tuple[int, int]]:
    """Group sorted integers into inclusive runs, e.g. [1,2,3,7] -> [(1,3),(7,7)]."""
    runs: list[tuple[int, int]] = []
    for v in sorted(values):
        if runs and v == runs[-1][1] + 1:
            runs[-1] = (runs[-1][0], v)
        else:
            runs.append((v, v))
    return runs


@dataclass
class CompareResult:
    crossovers: list[dict]
    gains: list[dict]
    missing: list[str]


def compare(summary: list[dict], per_seed: Optional[list[dict]] = None) -> CompareResult:
    """Where the battery-limited RABS beats k fixed BSs, and its gain over one BS.

    Accepts rows as read back from ``summary.csv`` / ``per_seed.csv``.
    """
    means: dict[tuple[float, str], dict[int, float]] = {}
    for row in summary:
        if row["mean_served"] in ("", None):
            continue
        means.setdefault((float(row["sigma"]), row["series"]), {})[int(row["N"])] = float(
            row["mean_served"]
        )
    sigmas = sorted({s for s, _ in means})
    missing = []
    crossovers = []
    for sigma in sigmas:
        rabs = means.get((sigma, RABS))
        if rabs is None:
            missing.append(f"sigma={sigma:g}: series '{RABS}' absent")
            continue
        ks = sorted(int(series[4:]) for s, series in means if s == sigma and series.startswith("bs_k"))
        for k in ks:
            bs = means[(sigma, bs_series(k))]
            common = sorted(set(rabs) & set(bs))
            winning = [n for n in common if rabs[n] > bs[n]]
            crossovers.append(
                {
                    "sigma": sigma,
                    "k": k,
                    "intervals": ";".join(f"{a}-{b}" for a, b in contiguous_intervals(winning)),
                    "winning_horizons": len(winning),
                }
            )

    gains = []
    if per_seed is not None:
        cells: dict[tuple[float, int, int], dict[str, float]] = {}
        for row in per_seed:
            if row["status"] != "ok":
                continue
            key = (float(row["sigma"]), int(row["N"]), int(row["seed"]))
            cells.setdefault(key, {})[row["series"]] = float(row["served"])
        ratios: dict[tuple[float, int], list[tuple[float, float]]] = {}
        for (sigma, n, _seed), series in cells.items():
            if RABS in series and bs_series(1) in series:
                ratios.setdefault((sigma, n), []).append((series[RABS], series[bs_series(1)]))
        if not ratios:
            missing.append(f"series '{RABS}' and '{bs_series(1)}' needed for gain ratios")
        for (sigma, n), pairs in sorted(ratios.items()):
            r = np.array([a / b for a, b in pairs])
            gains.append(
                {
                    "sigma": sigma,
                    "N": n,
                    "seed_count": len(r),
                    "mean_ratio": float(r.mean()),
                    "std_ratio": float(r.std(ddof=1)) if len(r) > 1 else 0.0,
                    "ratio_of_means": float(np.mean([a for a, _ in pairs]) / np.mean([b for _, b in pairs])),
                }
            )
    else:
        missing.append("per-seed rows absent; gain ratios not computed")
    return CompareResult(crossovers, gains, missing)


def write_compare(result: CompareResult, out_dir, policy: str = "unknown") -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "crossover": _write_csv(out_dir / "crossover.csv", CROSSOVER_HEADER, result.crossovers),
        "gains": _write_csv(out_dir / "gains.csv", GAINS_HEADER, result.gains),
    }
    lines = [POLICY_NOTE.format(policy=policy), ""]
    for row in result.crossovers:
        span = row["intervals"] or "none"
        lines.append(f"sigma={row['sigma']:g} k={row['k']}: RABS ahead for N in {span}")
    for row in result.gains:
        lines.append(
            f"sigma={row['sigma']:g} N={row['N']}: RABS/1-BS = {row['mean_ratio']:.3f} "
            f"+/- {row['std_ratio']:.3f} (ratio of means {row['ratio_of_means']:.3f})"
        )
    for note in result.missing:
        lines.append(f"absent: {note}")
    paths["text"] = out_dir / "crossover.txt"
    paths["text"].write_text("\n".join(lines) + "\n")
    return paths


def generate_instances(cfg: ExperimentConfig, out_dir) -> list[Path]:
    """Write one instance file per (sigma, N, seed)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for sigma in cfg.sigmas:
        for seed in cfg.seeds:
            field_ = _field(cfg, sigma, seed)
            for n in sorted(cfg.horizons):
                inst = instance_for(cfg, field_, sigma, seed, n)
                path = out_dir / f"sigma{sigma:g}_N{n}_seed{seed}.json"
                try:
                    inst.save(path)
                except OSError as exc:
                    raise OSError(f"cannot write instance file {path}: {exc}") from exc
                written.append(path)
    return written
