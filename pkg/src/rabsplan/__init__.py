"""Epoch-by-epoch deployment and sleep planning for a battery-limited perching small cell."""
from .baselines import FixedDeployment, fixed_bs, ideal_rabs
from .energy import (
    CALIBRATED,
    PAPER_LITERAL,
    AccountingPolicy,
    EnergyBreakdown,
    EnergyParams,
    RotorParams,
    epoch_energies,
    flight_energy,
    plan_energy,
    propulsion_power,
)
from .exact import solve_exhaustive, solve_labels
from .instance import (
    Instance,
    PathInconsistentError,
    Plan,
    StructuralInfeasibilityError,
    build_instance,
    is_feasible,
    objective,
    route_of,
)
from .lagrangian import SolverConfig, dual_presolve, refine, solve, solve_relaxation
from .report import SolveReport
from .traffic import GridSpec, TrafficField, TrafficParams, best_series, mean_traffic, sample_field

__version__ = "0.1.0"
