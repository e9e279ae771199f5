"""The deployment/operation problem: instance data and plan representation.

Epochs are numbered 1..N. Node 0 and node N+1 are the pseudo-epochs that
turn the flight route into a single source-to-sink path.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from .energy import (
    AccountingPolicy,
    EnergyBreakdown,
    EnergyParams,
    RotorParams,
    epoch_energies,
    pairwise_flight_energy,
    plan_energy,
)
from .traffic import GridSpec, TrafficField

SCHEMA = "rabsplan-instance"
SCHEMA_VERSION = 1


class StructuralInfeasibilityError(ValueError):
    """Even the all-sleep plan exceeds the battery budget."""


class PathInconsistentError(ValueError):
    """A route that does not match the coupling constraints."""


@dataclass(frozen=True)
class Plan:
    """Active/sleep flags for epochs 1..N; the flight route is derived."""

    active: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "active", tuple(bool(a) for a in self.active))

    @property
    def n_epochs(self) -> int:
        return len(self.active)

    @property
    def active_epochs(self) -> tuple[int, ...]:
        return tuple(i + 1 for i, a in enumerate(self.active) if a)

    @property
    def route(self) -> list[tuple[int, int]]:
        chain = [0, *self.active_epochs, self.n_epochs + 1]
        return list(zip(chain[:-1], chain[1:]))

    def deactivate(self, epoch: int) -> "Plan":
        flags = list(self.active)
        flags[epoch - 1] = False
        return Plan(tuple(flags))

    def decision_vectors(self) -> tuple[np.ndarray, np.ndarray]:
        """``x`` over nodes 0..N+1 and the 0/1 edge matrix ``y``."""
        n = self.n_epochs
        x = np.zeros(n + 2, dtype=int)
        x[0] = x[n + 1] = 1
        x[1 : n + 1] = self.active
        y = np.zeros((n + 2, n + 2), dtype=int)
        for a, b in self.route:
            y[a, b] = 1
        return x, y

    @classmethod
    def from_route(cls, route: Iterable[tuple[int, int]], n_epochs: int) -> "Plan":
        """Rebuild a plan from an explicit edge list, validating it."""
        route = [(int(a), int(b)) for a, b in route]
        nodes = [0]
        for a, b in route:
            if a != nodes[-1] or not b > a:
                raise PathInconsistentError(f"route {route} is not a forward chain from 0")
            nodes.append(b)
        if nodes[-1] != n_epochs + 1:
            raise PathInconsistentError(f"route {route} does not end at node {n_epochs + 1}")
        flags = [False] * n_epochs
        for node in nodes[1:-1]:
            flags[node - 1] = True
        return cls(tuple(flags))


def route_of(active: Sequence[bool]) -> Plan:
    return Plan(tuple(active))


def coupling_residuals(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Left minus right side of the departure and arrival coupling equations.

    Departures are checked for nodes 0..N, arrivals for nodes 1..N+1; a
    consistent (x, y) gives all-zero residuals.
    """
    n = len(x) - 2
    y = np.triu(np.asarray(y), k=1)
    out_flow = y.sum(axis=1)[: n + 1] - x[: n + 1]
    in_flow = y.sum(axis=0)[1:] - x[1:]
    return out_flow, in_flow


def variable_count(n_epochs: int) -> int:
    """Number of binary variables |X| + |Y| for horizon ``n_epochs``."""
    return (n_epochs + 2) + (n_epochs + 2) * (n_epochs + 1) // 2


@dataclass(frozen=True, eq=False)
class Instance:
    """Frozen optimization input.

    ``fly_energy[n, n']`` is the physical flight energy for ``n' > n`` over
    nodes 0..N+1 (zero elsewhere), with departures from node 0 costed from
    ``start_location`` and arrivals at N+1 free.
    """

    best_volume: np.ndarray
    best_location: np.ndarray
    energy: EnergyParams
    start_location: Optional[tuple[float, float]] = None
    best_index: Optional[np.ndarray] = None
    candidates: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        vol = np.array(self.best_volume, dtype=float).reshape(-1)
        loc = np.array(self.best_location, dtype=float).reshape(-1, 2)
        if len(vol) < 1:
            raise ValueError("instance needs at least one epoch")
        if loc.shape[0] != len(vol):
            raise ValueError(f"{len(vol)} volumes but {loc.shape[0]} locations")
        vol.setflags(write=False)
        loc.setflags(write=False)
        object.__setattr__(self, "best_volume", vol)
        object.__setattr__(self, "best_location", loc)
        if self.start_location is not None:
            object.__setattr__(
                self, "start_location", (float(self.start_location[0]), float(self.start_location[1]))
            )
        for name in ("best_index", "candidates"):
            value = getattr(self, name)
            if value is not None:
                arr = np.array(value)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @property
    def n_epochs(self) -> int:
        return len(self.best_volume)

    @property
    def policy(self) -> AccountingPolicy:
        return self.energy.accounting

    @property
    def e_max(self) -> float:
        return self.energy.E_max

    @cached_property
    def _epoch_energies(self):
        return epoch_energies(self.energy)

    @property
    def e_active(self) -> float:
        return self._epoch_energies.active

    @property
    def e_sleep(self) -> float:
        return self._epoch_energies.sleep

    @property
    def e_grasp(self) -> float:
        return self._epoch_energies.grasp

    @cached_property
    def fly_energy(self) -> np.ndarray:
        n = self.n_epochs
        start = self.best_location[0] if self.start_location is None else self.start_location
        pts = np.vstack([start, self.best_location])
        full = pairwise_flight_energy(pts, self.energy)
        mat = np.zeros((n + 2, n + 2))
        mat[: n + 1, : n + 1] = np.triu(full, k=1)
        # arrivals at the sink pseudo-epoch are free; column N+1 stays zero
        mat.setflags(write=False)
        return mat

    # -- quantities charged against the budget under the active policy --

    @cached_property
    def charged_fly(self) -> np.ndarray:
        """Flight matrix as charged by the policy (zero if flights are free)."""
        if self.policy.count_flight:
            return self.fly_energy
        mat = np.zeros_like(self.fly_energy)
        mat.setflags(write=False)
        return mat

    @property
    def active_delta(self) -> float:
        """Charged energy of one active epoch minus one sleeping epoch."""
        p = self.policy
        return (self.e_active if p.count_active_comm else 0.0) - (
            self.e_sleep if p.count_sleep else 0.0
        )

    @property
    def baseline_energy(self) -> float:
        """Charged energy of the all-sleep plan."""
        return self.energy_of(()).total

    @property
    def structurally_infeasible(self) -> bool:
        return self.baseline_energy > self.e_max

    def infeasibility_diagnostic(self) -> str:
        return (
            f"structurally infeasible: all-sleep baseline energy "
            f"{self.n_epochs} x (E_sleep + E_grasp) = {self.baseline_energy:.1f} J "
            f"exceeds E_max = {self.e_max:.1f} J under policy '{self.policy.name}'"
        )

    def require_feasible(self) -> None:
        if self.structurally_infeasible:
            raise StructuralInfeasibilityError(self.infeasibility_diagnostic())

    @cached_property
    def _fly_rows(self) -> list[list[float]]:
        return self.fly_energy.tolist()

    def energy_of(
        self, active_epochs: Sequence[int], policy: Optional[AccountingPolicy] = None
    ) -> EnergyBreakdown:
        """Energy breakdown of the plan whose active epochs are ``active_epochs``.

        Components excluded by ``policy`` (default: the instance policy) are
        zero, so ``total`` is the energy charged against ``E_max``.
        """
        policy = self.policy if policy is None else policy
        propulsion = 0.0
        if policy.count_flight:
            rows = self._fly_rows
            prev = 0
            for e in active_epochs:
                propulsion += rows[prev][e]
                prev = e
        n_active = len(active_epochs)
        n_sleep = self.n_epochs - n_active
        communication = 0.0
        if policy.count_active_comm:
            communication += n_active * self.e_active
        if policy.count_sleep:
            communication += n_sleep * self.e_sleep
        grasping = self.n_epochs * self.e_grasp if policy.count_grasp else 0.0
        return EnergyBreakdown(
            propulsion, communication, grasping, propulsion + communication + grasping
        )

    def check_plan(self, plan: Plan) -> None:
        if plan.n_epochs != self.n_epochs:
            raise PathInconsistentError(
                f"plan covers {plan.n_epochs} epochs, instance has {self.n_epochs}"
            )

    def with_energy(self, energy: EnergyParams) -> "Instance":
        return Instance(
            self.best_volume,
            self.best_location,
            energy,
            start_location=self.start_location,
            best_index=self.best_index,
            candidates=self.candidates,
            meta=dict(self.meta),
        )

    def to_dict(self) -> dict[str, Any]:
        energy = asdict(self.energy)
        return {
            "schema": SCHEMA,
            "version": SCHEMA_VERSION,
            "n_epochs": self.n_epochs,
            "best_volume": [float(v) for v in self.best_volume],
            "best_location": [[float(x), float(y)] for x, y in self.best_location],
            "best_index": None if self.best_index is None else [int(i) for i in self.best_index],
            "candidates": None
            if self.candidates is None
            else [[float(x), float(y)] for x, y in self.candidates],
            "start_location": None if self.start_location is None else list(self.start_location),
            "energy": energy,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Instance":
        if data.get("schema") != SCHEMA:
            raise ValueError(f"not a {SCHEMA} document")
        if data.get("version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported instance version {data.get('version')!r}")
        e = dict(data["energy"])
        e["accounting"] = AccountingPolicy(**e["accounting"])
        if e.get("rotor") is not None:
            e["rotor"] = RotorParams(**e["rotor"])
        inst = cls(
            data["best_volume"],
            data["best_location"],
            EnergyParams(**e),
            start_location=data.get("start_location"),
            best_index=data.get("best_index"),
            candidates=data.get("candidates"),
            meta=data.get("meta") or {},
        )
        if inst.n_epochs != data["n_epochs"]:
            raise ValueError("n_epochs does not match best_volume length")
        return inst

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "Instance":
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_instance(
    field: TrafficField,
    grid: GridSpec,
    energy: EnergyParams,
    n_epochs: Optional[int] = None,
    start_location=None,
    meta: Optional[dict] = None,
) -> Instance:
    """Assemble the problem from a traffic field.

    ``n_epochs`` defaults to the field horizon; a shorter value uses the
    leading epochs of the field.
    """
    if field.n_candidates != grid.n_candidates:
        raise ValueError(
            f"field has {field.n_candidates} candidates but grid defines {grid.n_candidates}"
        )
    if n_epochs is not None and n_epochs != field.n_epochs:
        field = field.truncate(n_epochs)
    return Instance(
        field.best_volume,
        field.best_location,
        energy,
        start_location=start_location,
        best_index=field.best_index,
        candidates=field.coordinates,
        meta=dict(meta or {}),
    )


def objective(plan: Plan, inst: Instance) -> float:
    """Served traffic: sum of best volumes over active epochs."""
    inst.check_plan(plan)
    return float(np.dot(np.asarray(plan.active, dtype=float), inst.best_volume))


def is_feasible(plan: Plan, inst: Instance) -> tuple[bool, float]:
    """Whether the plan fits the battery, and the remaining slack in joules."""
    total = plan_energy(plan, inst).total
    slack = inst.e_max - total
    return slack >= 0, slack


__all__ = [
    "Instance",
    "Plan",
    "PathInconsistentError",
    "StructuralInfeasibilityError",
    "build_instance",
    "coupling_residuals",
    "is_feasible",
    "objective",
    "route_of",
    "variable_count",
]
