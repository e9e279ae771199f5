"""Lagrangian heuristic for the battery-constrained deployment problem.

Relaxing the energy constraint with a multiplier ``lam`` leaves a
maximum-reward path problem on the epoch DAG (nodes 0..N+1), which is solved
exactly by dynamic programming. The dual is minimized by a subgradient
method, and every relaxation plan is repaired into a feasible plan by
greedily putting the lowest-traffic active epochs to sleep.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import NamedTuple

from .energy import PAPER_LITERAL
from .instance import Instance, Plan, StructuralInfeasibilityError, objective
from .report import SolveReport, TraceRow

REFINE_MODES = ("all", "final", "best_dual")
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_MAX_DOUBLINGS = 200


class DualSolved(Exception):
    """The current multiplier is dual optimal; no further step is defined."""


@dataclass(frozen=True)
class SolverConfig:
    k_max: int = 100
    beta: float = 2.0
    r: float = 0.5
    lambda0: float = 0.0
    dual_search_tol: float = 1e-6
    refine_mode: str = "all"

    def __post_init__(self):
        if self.k_max < 0:
            raise ValueError("k_max must be >= 0")
        if self.beta < 1:
            raise ValueError("beta must be >= 1")
        if not 0 < self.r < 1:
            raise ValueError("r must lie in (0, 1)")
        if self.lambda0 < 0:
            raise ValueError("lambda0 must be >= 0")
        if not self.dual_search_tol > 0:
            raise ValueError("dual_search_tol must be > 0")
        if self.refine_mode not in REFINE_MODES:
            raise ValueError(f"refine_mode must be one of {REFINE_MODES}")


class Relaxation(NamedTuple):
    plan: Plan
    z_lr: float
    g: float


def lagrangian_value(plan: Plan, inst: Instance, lam: float) -> float:
    """Served traffic minus ``lam`` times the energy excess of ``plan``."""
    return objective(plan, inst) - lam * subgradient_of(plan, inst)


def subgradient_of(plan: Plan, inst: Instance) -> float:
    """Energy excess E(X, Y) - E_max of ``plan``."""
    inst.check_plan(plan)
    return inst.energy_of(plan.active_epochs).total - inst.e_max


def _relaxation_from_epochs(inst: Instance, epochs, lam: float) -> Relaxation:
    flags = [False] * inst.n_epochs
    for e in epochs:
        flags[e - 1] = True
    plan = Plan(tuple(flags))
    g = inst.energy_of(epochs).total - inst.e_max
    served = float(sum(inst.best_volume[e - 1] for e in epochs))
    return Relaxation(plan, served - lam * g, g)


def _best_path(inst: Instance, lam: float) -> list[int]:
    """Active epochs of the maximum-reward source-to-sink path.

    Node ``n`` earns ``V_n - lam * active_delta`` and edge (n, n') costs
    ``lam * E_fly[n, n']``. Ties prefer fewer active epochs, then the
    smallest predecessor index.
    """
    n_epochs = inst.n_epochs
    fly = inst._fly_rows if inst.policy.count_flight else None
    penalty = lam * inst.active_delta
    volumes = inst.best_volume.tolist()
    value = [0.0] * (n_epochs + 1)
    count = [0] * (n_epochs + 1)
    parent = [-1] * (n_epochs + 1)
    for n in range(1, n_epochs + 1):
        best_v = -math.inf
        best_c = 0
        best_p = 0
        for p in range(n):
            v = value[p] - lam * fly[p][n] if fly is not None else value[p]
            c = count[p]
            if v > best_v or (v == best_v and c < best_c):
                best_v, best_c, best_p = v, c, p
        value[n] = best_v + volumes[n - 1] - penalty
        count[n] = best_c + 1
        parent[n] = best_p
    # sink: arrivals are free, so pick the best node overall (node 0 = all sleep)
    best_v, best_c, best_p = value[0], 0, 0
    for p in range(1, n_epochs + 1):
        v, c = value[p], count[p]
        if v > best_v or (v == best_v and c < best_c):
            best_v, best_c, best_p = v, c, p
    epochs = []
    node = best_p
    while node > 0:
        epochs.append(node)
        node = parent[node]
    epochs.reverse()
    return epochs


def solve_relaxation(inst: Instance, lam: float) -> Relaxation:
    """Exact maximizer of the Lagrangian at multiplier ``lam``.

    The coupling constraints are path constraints with a totally unimodular
    matrix, so the LP relaxation is integral and a DAG dynamic program over
    the epochs finds it in O(N^2).
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    inst.require_feasible()
    return _relaxation_from_epochs(inst, _best_path(inst, lam), lam)


def dual_presolve(inst: Instance, cfg: SolverConfig = SolverConfig()) -> tuple[float, float]:
    """Minimize the dual function over lam >= 0.

    Doubles an upper bracket until the relaxation's energy excess turns
    non-positive, then golden-section searches the bracket. Because the dual
    is piecewise linear, the two supporting lines at the final bracket ends are
    also intersected and evaluated. Returns ``(lam_star, z_ld)``.
    """
    rel0 = solve_relaxation(inst, 0.0)
    if rel0.g <= 0:
        return 0.0, rel0.z_lr

    best = (rel0.z_lr, 0.0)
    lo, lo_rel = 0.0, rel0
    hi = max(float(inst.best_volume.sum()) / rel0.g, 1e-300)
    for _ in range(_MAX_DOUBLINGS):
        hi_rel = solve_relaxation(inst, hi)
        best = min(best, (hi_rel.z_lr, hi))
        if hi_rel.g <= 0:
            break
        lo, lo_rel = hi, hi_rel
        hi *= 2.0
    else:
        raise StructuralInfeasibilityError(
            "dual bracket did not close; " + inst.infeasibility_diagnostic()
        )

    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = solve_relaxation(inst, c)
    fd = solve_relaxation(inst, d)
    best = min(best, (fc.z_lr, c), (fd.z_lr, d))
    while b - a > cfg.dual_search_tol * b:
        if fc.z_lr <= fd.z_lr:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = solve_relaxation(inst, c)
            best = min(best, (fc.z_lr, c))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = solve_relaxation(inst, d)
            best = min(best, (fd.z_lr, d))
        # keep one supporting line on each side of the minimum
        for lam_, rel in ((c, fc), (d, fd)):
            if rel.g > 0 and lam_ >= lo:
                lo, lo_rel = lam_, rel
            elif rel.g <= 0 and lam_ <= hi:
                hi, hi_rel = lam_, rel

    # z(lam) = served - lam * g on each supporting line
    served_lo = lo_rel.z_lr + lo * lo_rel.g
    served_hi = hi_rel.z_lr + hi * hi_rel.g
    if lo_rel.g != hi_rel.g:
        cross = (served_lo - served_hi) / (lo_rel.g - hi_rel.g)
        if cross >= 0:
            rel = solve_relaxation(inst, cross)
            best = min(best, (rel.z_lr, cross))
    z_ld, lam_star = best
    return lam_star, z_ld


def step_size_init(z_lp: float, z_lr0: float, g0: float) -> float:
    """Initial step ``|z_LP - z_LR(lam_0)| / g_0**2``.

    Raises :class:`DualSolved` when ``g0`` is zero.
    """
    if g0 == 0:
        raise DualSolved("zero subgradient at the initial multiplier")
    return abs(z_lp - z_lr0) / (g0 * g0)


def step_multiplier(k: int, beta: float, r: float) -> float:
    """Contraction factor ``1 - 1 / (beta * k**(1 - k**-r))``."""
    return 1.0 - 1.0 / (beta * k ** (1.0 - k ** (-r)))


def step_size_update(alpha_prev, g_prev, g_k, k, beta, r) -> float:
    """Next step size; raises :class:`DualSolved` when ``g_k`` is zero."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if g_k == 0:
        raise DualSolved(f"zero subgradient at iteration {k}")
    return step_multiplier(k, beta, r) * alpha_prev * abs(g_prev) / abs(g_k)


def refine(plan: Plan, inst: Instance) -> Plan:
    """Put active epochs to sleep, least traffic first, until the budget holds.

    Removing an epoch reconnects its route neighbours directly. Ties in
    traffic go to the earliest epoch.
    """
    inst.check_plan(plan)
    epochs = list(plan.active_epochs)
    volumes = inst.best_volume
    while inst.energy_of(epochs).total > inst.e_max:
        if not epochs:
            raise StructuralInfeasibilityError(inst.infeasibility_diagnostic())
        victim = min(epochs, key=lambda e: (volumes[e - 1], e))
        epochs.remove(victim)
    if len(epochs) == len(plan.active_epochs):
        return plan
    flags = [False] * inst.n_epochs
    for e in epochs:
        flags[e - 1] = True
    return Plan(tuple(flags))


def solve(inst: Instance, cfg: SolverConfig = SolverConfig()) -> SolveReport:
    """Run the Lagrangian heuristic and report the best feasible plan found."""
    t0 = time.perf_counter()
    inst.require_feasible()
    lam_star, z_ld = dual_presolve(inst, cfg)

    repaired: dict[Plan, Plan] = {}
    incumbent = Plan((False,) * inst.n_epochs)
    incumbent_obj = 0.0

    def consider(p: Plan):
        nonlocal incumbent, incumbent_obj
        fixed = repaired.get(p)
        if fixed is None:
            fixed = repaired[p] = refine(p, inst)
        value = objective(fixed, inst)
        if value > incumbent_obj:
            incumbent, incumbent_obj = fixed, value

    lam = cfg.lambda0
    rel = solve_relaxation(inst, lam)
    trace = []
    iterates = [rel]
    notes = []
    alpha = 0.0
    try:
        alpha = step_size_init(z_ld, rel.z_lr, rel.g)
    except DualSolved as exc:
        notes.append(str(exc))
    trace.append(TraceRow(0, lam, alpha, rel.g, rel.z_lr))

    if alpha > 0:
        g_prev = rel.g
        for k in range(1, cfg.k_max + 1):
            # energy over budget (g > 0) raises the price of energy
            lam = max(0.0, lam + alpha * g_prev)
            rel = solve_relaxation(inst, lam)
            iterates.append(rel)
            try:
                alpha = step_size_update(alpha, g_prev, rel.g, k, cfg.beta, cfg.r)
            except DualSolved as exc:
                notes.append(str(exc))
                trace.append(TraceRow(k, lam, 0.0, rel.g, rel.z_lr))
                break
            trace.append(TraceRow(k, lam, alpha, rel.g, rel.z_lr))
            g_prev = rel.g
    elif not notes:
        notes.append("initial multiplier is dual optimal")

    if cfg.refine_mode == "all":
        for it in iterates:
            consider(it.plan)
    elif cfg.refine_mode == "final":
        consider(iterates[-1].plan)
    else:
        consider(min(iterates, key=lambda it: it.z_lr).plan)

    dual_bound = min(min(it.z_lr for it in iterates), z_ld)
    return SolveReport(
        solver="lagrangian",
        plan=incumbent,
        objective=incumbent_obj,
        dual_bound=dual_bound,
        energy=inst.energy_of(incumbent.active_epochs),
        energy_reported=inst.energy_of(incumbent.active_epochs, PAPER_LITERAL),
        policy=inst.policy.name,
        z_ld=z_ld,
        lambda_star=lam_star,
        trace=trace,
        notes=notes,
        elapsed_s=time.perf_counter() - t0,
    )
