"""Propulsion, grasping and communication energy of a perching small cell."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, NamedTuple, Optional

import numpy as np

if TYPE_CHECKING:
    from .instance import Instance, Plan


@dataclass(frozen=True)
class RotorParams:
    """Rotary-wing propulsion model parameters (all SI, all > 0)."""

    P0: float
    Pi: float
    U_tip: float
    v0: float
    d0: float
    s: float
    rho: float
    A: float

    def __post_init__(self):
        for name, value in vars(self).items():
            if not value > 0:
                raise ValueError(f"rotor parameter {name} must be > 0, got {value!r}")


@dataclass(frozen=True)
class AccountingPolicy:
    """Which energy components are charged against the battery budget."""

    count_sleep: bool = True
    count_grasp: bool = True
    count_active_comm: bool = True
    count_flight: bool = True

    @classmethod
    def preset(cls, name: str) -> "AccountingPolicy":
        try:
            return POLICY_PRESETS[name]
        except KeyError:
            raise ValueError(
                f"unknown policy preset {name!r}; expected one of {sorted(POLICY_PRESETS)}"
            ) from None

    @property
    def name(self) -> str:
        for key, value in POLICY_PRESETS.items():
            if value == self:
                return key
        return "custom"


PAPER_LITERAL = AccountingPolicy()
CALIBRATED = AccountingPolicy(
    count_sleep=False, count_grasp=False, count_active_comm=False, count_flight=True
)
POLICY_PRESETS = {"paper_literal": PAPER_LITERAL, "calibrated": CALIBRATED}


@dataclass(frozen=True)
class EnergyParams:
    """Power figures, flight speed, epoch length and battery capacity.

    Defaults are the reference parameter table with one-hour epochs. When
    ``rotor`` is set, the flight power is computed from the rotor model at
    ``speed_mps`` instead of using ``flight_power_w``.
    """

    flight_power_w: float = 356.0
    speed_mps: float = 30.0
    eta: float = 2.6
    P_tra: float = 6.3
    P_active: float = 56.0
    P_sleep: float = 39.0
    P_grasp: float = 10.0
    epoch_duration_s: float = 3600.0
    E_max: float = 333792.0
    accounting: AccountingPolicy = PAPER_LITERAL
    rotor: Optional[RotorParams] = None

    def __post_init__(self):
        if not self.speed_mps > 0:
            raise ValueError("speed_mps must be > 0")
        if not self.eta > 0:
            raise ValueError("eta must be > 0")
        for name in ("flight_power_w", "P_tra", "P_active", "P_sleep", "P_grasp"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.epoch_duration_s >= 0:
            raise ValueError("epoch_duration_s must be >= 0")
        if not self.E_max > 0:
            raise ValueError("E_max must be > 0")

    @property
    def fly_power(self) -> float:
        if self.rotor is not None:
            return propulsion_power(self.rotor, self.speed_mps)
        return self.flight_power_w

    def with_policy(self, policy: AccountingPolicy) -> "EnergyParams":
        return replace(self, accounting=policy)


class EpochEnergies(NamedTuple):
    active: float
    sleep: float
    grasp: float


class EnergyBreakdown(NamedTuple):
    propulsion: float
    communication: float
    grasping: float
    total: float

    def shares(self) -> tuple[float, float, float]:
        """Fractions of ``total`` spent on propulsion, communication, grasping."""
        if self.total <= 0:
            return (0.0, 0.0, 0.0)
        return (
            self.propulsion / self.total,
            self.communication / self.total,
            self.grasping / self.total,
        )


def propulsion_power(rotor: RotorParams, v: float) -> float:
    """Rotary-wing propulsion power at forward speed ``v`` (m/s)."""
    if v < 0:
        raise ValueError("speed must be >= 0")
    blade = rotor.P0 * (1.0 + 3.0 * v * v / rotor.U_tip**2)
    ratio = v * v / (2.0 * rotor.v0**2)
    # sqrt(1 + ratio^2) - ratio, written to avoid cancellation at high speed
    induced_inner = 1.0 / (math.sqrt(1.0 + ratio * ratio) + ratio)
    induced = rotor.Pi * math.sqrt(induced_inner)
    parasite = 0.5 * rotor.d0 * rotor.rho * rotor.s * rotor.A * v**3
    return blade + induced + parasite


def flight_energy(src, dst, p: EnergyParams) -> float:
    """Energy in joules to fly in a straight line from ``src`` to ``dst``."""
    dist = math.hypot(float(dst[0]) - float(src[0]), float(dst[1]) - float(src[1]))
    return p.fly_power * dist / p.speed_mps


def pairwise_flight_energy(points, p: EnergyParams) -> np.ndarray:
    """Symmetric matrix of flight energies between all pairs of ``points``."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    diff = pts[:, None, :] - pts[None, :, :]
    return p.fly_power * np.hypot(diff[..., 0], diff[..., 1]) / p.speed_mps


def epoch_energies(p: EnergyParams) -> EpochEnergies:
    delta = p.epoch_duration_s
    return EpochEnergies(
        active=(p.eta * p.P_tra + p.P_active) * delta,
        sleep=p.P_sleep * delta,
        grasp=p.P_grasp * delta,
    )


def plan_energy(
    plan: "Plan", inst: "Instance", policy: Optional[AccountingPolicy] = None
) -> EnergyBreakdown:
    """Energy of ``plan`` split into propulsion, communication and grasping.

    Components excluded by ``policy`` (the instance's policy by default) are
    reported as zero, so ``total`` is what gets charged against the budget.
    Pass :data:`PAPER_LITERAL` to report every component regardless.
    """
    inst.check_plan(plan)
    return inst.energy_of(plan.active_epochs, policy)
