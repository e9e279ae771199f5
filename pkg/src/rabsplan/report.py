"""Solver output shared by the heuristic and the exact solvers."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

from .energy import EnergyBreakdown
from .instance import Plan

TRACE_HEADER = ("iter", "lambda", "alpha", "g", "z_lr")


class TraceRow(NamedTuple):
    iter: int
    lam: float
    alpha: float
    g: float
    z_lr: float


@dataclass
class SolveReport:
    solver: str
    plan: Plan
    objective: float
    dual_bound: Optional[float]
    energy: EnergyBreakdown
    energy_reported: EnergyBreakdown
    policy: str
    z_ld: Optional[float] = None
    lambda_star: Optional[float] = None
    trace: list[TraceRow] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    elapsed_s: float = field(default=0.0, compare=False)

    @property
    def gap(self) -> Optional[float]:
        """Relative gap between dual bound and incumbent objective."""
        if self.dual_bound is None:
            return None
        if self.dual_bound <= 0:
            return 0.0
        return (self.dual_bound - self.objective) / self.dual_bound

    @property
    def best_dual(self) -> Optional[float]:
        return self.dual_bound

    def to_dict(self) -> dict:
        # elapsed time is left out so reruns produce identical files
        return {
            "solver": self.solver,
            "policy": self.policy,
            "n_epochs": self.plan.n_epochs,
            "active_epochs": list(self.plan.active_epochs),
            "route": [list(e) for e in self.plan.route],
            "objective": self.objective,
            "dual_bound": self.dual_bound,
            "gap": self.gap,
            "z_ld": self.z_ld,
            "lambda_star": self.lambda_star,
            "energy_charged": self.energy._asdict(),
            "energy_reported": self.energy_reported._asdict(),
            "iterations": len(self.trace),
            "notes": list(self.notes),
        }

    def write(self, out_dir, stem: str) -> tuple[Path, Path]:
        """Write ``<stem>.report.json`` and ``<stem>.trace.csv`` under ``out_dir``."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        report_path = out_dir / f"{stem}.report.json"
        trace_path = out_dir / f"{stem}.trace.csv"
        report_path.write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        with trace_path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_HEADER)
            for row in self.trace:
                writer.writerow([row.iter, repr(row.lam), repr(row.alpha), repr(row.g), repr(row.z_lr)])
        return report_path, trace_path
