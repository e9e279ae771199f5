"""Comparison points: greedily placed fixed micro BSs and the unconstrained RABS."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import Instance, Plan, objective
from .traffic import TrafficField


@dataclass(frozen=True)
class FixedDeployment:
    k: int
    chosen: tuple[int, ...]
    served: float


def fixed_bs(field: TrafficField, k: int) -> FixedDeployment:
    """Place ``k`` always-on BSs at the candidates with the most horizon traffic.

    Candidates are ranked by total volume over the field's horizon; ties go to
    the lowest index.
    """
    m = field.n_candidates
    if not 1 <= k <= m:
        raise ValueError(f"k must be in [1, {m}], got {k}")
    totals = field.volumes.sum(axis=1)
    # stable sort on the negated totals keeps lowest index first among ties
    chosen = np.argsort(-totals, kind="stable")[:k]
    return FixedDeployment(k, tuple(int(i) for i in chosen), float(totals[chosen].sum()))


def ideal_rabs(inst: Instance) -> tuple[Plan, float]:
    """All-active plan ignoring the battery; serves every epoch's best volume."""
    plan = Plan((True,) * inst.n_epochs)
    return plan, objective(plan, inst)
