"""Numeric solvers for the grounded problem catalog.

The charging-cost LP has box constraints plus a single delivered-energy
equality, so filling the cheapest available slots first is exact; ties resolve
to the earlier slot. Deadline problems add prefix constraints and go through
scipy's LP solver. Station selection enumerates candidate stations (bounded
instance sizes keep enumeration exact). The weighted multi-objective variant
reduces to the greedy fill over blended per-slot prices.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from evops.support.types import (
    ChargingCostProblem,
    ConstraintCheck,
    DeadlineProblem,
    GroundedProblem,
    Infeasible,
    NoSolverRegistered,
    ProblemType,
    SolutionPlan,
    SolverDescriptor,
    StationSelectionProblem,
    ValidationReport,
    WeightedObjectiveProblem,
)

ENERGY_TOLERANCE_KWH = 1e-4
FEASIBILITY_EPS = 1e-9


def lp_charging_solve(p: ChargingCostProblem,
                      slot_costs: np.ndarray | None = None) -> SolutionPlan:
    """Exact greedy solver: fill cheapest available slots up to max power.

    ``slot_costs`` overrides the ranking prices (used by the weighted variant);
    the reported objective is always the real energy cost.
    """
    if p.deliverable_kwh + FEASIBILITY_EPS < p.energy_kwh:
        raise Infeasible(
            f"deliverable capacity {p.deliverable_kwh:.4f} kWh < required "
            f"{p.energy_kwh:.4f} kWh")

    ranking = p.prices if slot_costs is None else np.asarray(slot_costs, dtype=np.float64)
    x = np.zeros(p.num_slots)
    remaining = p.energy_kwh
    order = sorted(np.flatnonzero(p.availability), key=lambda t: (ranking[t], t))
    per_slot_kwh = p.max_power_kw * p.efficiency * p.slot_hours
    for t in order:
        if remaining <= 0:
            break
        delivered = min(per_slot_kwh, remaining)
        x[t] = delivered / (p.efficiency * p.slot_hours)
        remaining -= delivered

    cost = float(np.dot(p.prices, x) * p.slot_hours)
    return SolutionPlan(power_kw=x, objective_value=cost, feasible=True,
                        solver_name="greedy_charging")


def solve_deadline(problem: DeadlineProblem) -> SolutionPlan:
    """Minimum-cost schedule meeting every cumulative deadline requirement.

    Linear program: minimize price·x subject to per-slot power bounds, the
    total-energy equality, and one prefix-energy inequality per deadline.
    """
    p = problem.base
    n = p.num_slots
    ub = np.where(p.availability, p.max_power_kw, 0.0)
    factor = p.efficiency * p.slot_hours

    a_ub, b_ub = [], []
    for d in problem.deadlines:
        row = np.zeros(n)
        row[: d.by_slot] = -factor
        a_ub.append(row)
        b_ub.append(-d.energy_kwh)
    a_eq = np.full((1, n), factor)
    b_eq = [p.energy_kwh]

    res = linprog(p.prices * p.slot_hours,
                  A_ub=np.array(a_ub) if a_ub else None,
                  b_ub=np.array(b_ub) if b_ub else None,
                  A_eq=a_eq, b_eq=b_eq,
                  bounds=list(zip(np.zeros(n), ub)), method="highs")
    if not res.success:
        report = _deadline_infeasibility(problem)
        return SolutionPlan(power_kw=np.zeros(n), objective_value=0.0,
                            feasible=False, solver_name="lp_deadline",
                            infeasibility_report=report)
    return SolutionPlan(power_kw=res.x, objective_value=float(res.fun),
                        feasible=True, solver_name="lp_deadline")


def _deadline_infeasibility(problem: DeadlineProblem) -> list[str]:
    p = problem.base
    factor = p.efficiency * p.slot_hours * p.max_power_kw
    report = []
    for d in problem.deadlines:
        cap = float(p.availability[: d.by_slot].sum() * factor)
        if cap + FEASIBILITY_EPS < d.energy_kwh:
            report.append(
                f"deadline '{d.name}': needs {d.energy_kwh:.2f} kWh by slot "
                f"{d.by_slot} but only {cap:.2f} kWh is deliverable")
    if p.deliverable_kwh + FEASIBILITY_EPS < p.energy_kwh:
        report.append(
            f"energy: required {p.energy_kwh:.2f} kWh exceeds deliverable "
            f"{p.deliverable_kwh:.2f} kWh")
    return report or ["no feasible schedule satisfies all deadline constraints"]


def solve_station_selection(problem: StationSelectionProblem) -> SolutionPlan:
    """Exhaustive search over candidate stations, greedy schedule at each."""
    best: tuple[float, int, SolutionPlan] | None = None
    skipped: list[str] = []
    for idx, st in enumerate(problem.stations):
        sub = ChargingCostProblem(
            prices=st.prices, slot_hours=problem.slot_hours,
            energy_kwh=problem.energy_kwh, max_power_kw=problem.max_power_kw,
            availability=st.availability, efficiency=problem.efficiency)
        try:
            plan = lp_charging_solve(sub)
        except Infeasible as exc:
            skipped.append(f"station {st.station_id}: {exc}")
            continue
        total = plan.objective_value + st.detour_cost
        if best is None or total < best[0]:
            best = (total, idx, plan)
    if best is None:
        return SolutionPlan(power_kw=np.zeros(0), objective_value=0.0,
                            feasible=False, solver_name="station_enumeration",
                            infeasibility_report=skipped)
    total, idx, plan = best
    chosen = problem.stations[idx]
    return SolutionPlan(
        power_kw=plan.power_kw, objective_value=total, feasible=True,
        solver_name="station_enumeration",
        narrative=f"station {chosen.station_id}")


def solve_weighted(problem: WeightedObjectiveProblem) -> SolutionPlan:
    """Greedy fill over blended per-slot cost: w_cost*price + w_urgency*slot_age.

    The blend is a per-kWh-drawn cost, so the same greedy argument applies and
    the reported objective is the blended cost of the drawn energy.
    """
    p = problem.base
    urgency = np.arange(p.num_slots, dtype=np.float64) * p.slot_hours
    blended = problem.cost_weight * p.prices + problem.urgency_weight * urgency
    plan = lp_charging_solve(p, slot_costs=blended)
    blended_objective = float(np.dot(blended, plan.power_kw) * p.slot_hours)
    return SolutionPlan(power_kw=plan.power_kw, objective_value=blended_objective,
                        feasible=True, solver_name="weighted_greedy")


def validate_plan(problem: ChargingCostProblem | GroundedProblem,
                  plan: SolutionPlan) -> ValidationReport:
    """Independent numeric re-check of every constraint, with slacks.

    Inequalities report their raw slack (>= 0 means satisfied); the delivered-
    energy equality reports tolerance minus absolute deviation, so a plan
    within 1e-4 kWh passes.
    """
    p = _charging_payload(problem)
    checks: list[ConstraintCheck] = []
    ub = np.where(p.availability, p.max_power_kw, 0.0)
    for t in range(p.num_slots):
        slack = float(ub[t] - plan.power_kw[t])
        checks.append(ConstraintCheck(
            name=f"power_ub[{t}]", slack=slack, satisfied=slack >= -FEASIBILITY_EPS))
        slack = float(plan.power_kw[t])
        checks.append(ConstraintCheck(
            name=f"power_nonneg[{t}]", slack=slack, satisfied=slack >= -FEASIBILITY_EPS))
    delivered = float(np.sum(plan.power_kw) * p.efficiency * p.slot_hours)
    deviation = abs(delivered - p.energy_kwh)
    checks.append(ConstraintCheck(
        name="energy_balance", slack=ENERGY_TOLERANCE_KWH - deviation,
        satisfied=deviation <= ENERGY_TOLERANCE_KWH))

    if isinstance(problem, GroundedProblem) and isinstance(problem.payload, DeadlineProblem):
        factor = p.efficiency * p.slot_hours
        for d in problem.payload.deadlines:
            got = float(plan.power_kw[: d.by_slot].sum() * factor)
            slack = got - d.energy_kwh
            checks.append(ConstraintCheck(
                name=f"deadline[{d.name}]", slack=slack,
                satisfied=slack >= -ENERGY_TOLERANCE_KWH))
    return ValidationReport(checks=checks)


def _charging_payload(problem) -> ChargingCostProblem:
    if isinstance(problem, ChargingCostProblem):
        return problem
    payload = problem.payload
    if isinstance(payload, ChargingCostProblem):
        return payload
    if isinstance(payload, (DeadlineProblem, WeightedObjectiveProblem)):
        return payload.base
    raise TypeError(f"cannot validate against payload {type(payload).__name__}")


SOLVER_REGISTRY: dict[ProblemType, SolverDescriptor] = {
    ProblemType.COST_MIN_CHARGING: SolverDescriptor(
        "greedy_charging", (ProblemType.COST_MIN_CHARGING,)),
    ProblemType.DEADLINE_FEASIBILITY: SolverDescriptor(
        "lp_deadline", (ProblemType.DEADLINE_FEASIBILITY,)),
    ProblemType.STATION_SELECTION: SolverDescriptor(
        "station_enumeration", (ProblemType.STATION_SELECTION,)),
    ProblemType.MULTI_OBJECTIVE_WEIGHTED: SolverDescriptor(
        "weighted_greedy", (ProblemType.MULTI_OBJECTIVE_WEIGHTED,)),
}


def solve(problem: GroundedProblem) -> SolutionPlan:
    """Dispatch by problem type; never returns a constraint-violating plan."""
    descriptor = SOLVER_REGISTRY.get(problem.problem_type)
    if descriptor is None:
        raise NoSolverRegistered(f"no solver accepts {problem.problem_type.value}")

    try:
        if problem.problem_type == ProblemType.COST_MIN_CHARGING:
            plan = lp_charging_solve(problem.payload)
        elif problem.problem_type == ProblemType.DEADLINE_FEASIBILITY:
            plan = solve_deadline(problem.payload)
        elif problem.problem_type == ProblemType.STATION_SELECTION:
            plan = solve_station_selection(problem.payload)
        else:
            plan = solve_weighted(problem.payload)
    except Infeasible as exc:
        payload = problem.payload
        size = _charging_payload(problem).num_slots if not isinstance(
            payload, StationSelectionProblem) else 0
        return SolutionPlan(power_kw=np.zeros(size), objective_value=0.0,
                            feasible=False, solver_name=descriptor.name,
                            infeasibility_report=[str(exc)])

    if plan.feasible and not isinstance(problem.payload, StationSelectionProblem):
        report = validate_plan(problem, plan)
        if not report.passed:
            names = [c.name for c in report.violations()]
            raise AssertionError(f"solver {plan.solver_name} emitted an invalid "
                                 f"plan; violated: {names}")
    return plan
