"""Domain types for the natural-language-to-optimization support path."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from evops.errors import EvopsError


class ProblemType(str, Enum):
    COST_MIN_CHARGING = "cost_min_charging"
    DEADLINE_FEASIBILITY = "deadline_feasibility"
    STATION_SELECTION = "station_selection"
    MULTI_OBJECTIVE_WEIGHTED = "multi_objective_weighted"


class SlotCategory(str, Enum):
    TYPE1_EXPLICIT = "type1_explicit"
    TYPE2_PHYSICAL = "type2_physical"


class SlotStatus(str, Enum):
    UNRESOLVED = "unresolved"
    RESOLVED = "resolved"


class Provenance(str, Enum):
    REQUEST_TEXT = "request_text"
    VEHICLE_PROFILE = "vehicle_profile"
    FORECASTER = "forecaster"
    CALENDAR = "calendar"
    DEFAULT = "default"


@dataclass
class ParameterSlot:
    name: str
    category: SlotCategory
    status: SlotStatus = SlotStatus.UNRESOLVED
    value: Any = None
    provenance: Provenance | None = None

    def __post_init__(self):
        if (self.status == SlotStatus.RESOLVED) != (self.value is not None):
            raise ValueError(f"slot {self.name}: status/value mismatch")

    def resolve(self, value: Any, provenance: Provenance) -> "ParameterSlot":
        return ParameterSlot(name=self.name, category=self.category,
                             status=SlotStatus.RESOLVED, value=value,
                             provenance=provenance)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "category": self.category.value,
            "status": self.status.value,
            "value": _jsonable(self.value),
            "provenance": self.provenance.value if self.provenance else None,
        }


_IDENT = re.compile(r"[a-z][a-z0-9_]*")
_BUILTIN_SYMBOLS = {"sum", "min", "max", "t", "for", "all", "in", "kw", "kwh", "h"}


@dataclass
class AbstractOptimizationSkeleton:
    """Symbolic problem statement before grounding (problem type, objective,
    declared variables, constraint relations, and typed parameter slots)."""

    problem_type: ProblemType
    objective: str
    variables: list[dict]
    constraints: list[str]
    slots: list[ParameterSlot]

    def __post_init__(self):
        declared = {v["name"] for v in self.variables} | {s.name for s in self.slots}
        for expr in [self.objective, *self.constraints]:
            for sym in _IDENT.findall(expr.lower()):
                if sym not in declared and sym not in _BUILTIN_SYMBOLS:
                    raise ValueError(
                        f"symbol {sym!r} in {expr!r} is neither a variable nor a slot")

    def slot(self, name: str) -> ParameterSlot:
        for s in self.slots:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "problem_type": self.problem_type.value,
            "objective": self.objective,
            "variables": self.variables,
            "constraints": self.constraints,
            "slots": [s.to_dict() for s in self.slots],
        }


@dataclass
class ChargingCostProblem:
    """Canonical cost-minimization instance over discrete charging slots."""

    prices: np.ndarray          # currency per kWh drawn, per slot
    slot_hours: float
    energy_kwh: float           # energy to deliver into the battery
    max_power_kw: float
    availability: np.ndarray    # bool per slot
    efficiency: float = 0.9

    def __post_init__(self):
        self.prices = np.asarray(self.prices, dtype=np.float64)
        self.availability = np.asarray(self.availability, dtype=bool)
        if self.prices.shape != self.availability.shape:
            raise ValueError("prices and availability must align")
        if self.energy_kwh < 0:
            raise ValueError("energy_kwh must be >= 0")
        if self.max_power_kw <= 0:
            raise ValueError("max_power_kw must be positive")
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must be in (0, 1]")

    @property
    def num_slots(self) -> int:
        return self.prices.size

    @property
    def deliverable_kwh(self) -> float:
        return float(self.availability.sum() * self.max_power_kw
                     * self.efficiency * self.slot_hours)


@dataclass
class DeadlineRequirement:
    """Cumulative energy that must be delivered before a slot boundary."""

    name: str
    by_slot: int           # exclusive upper slot index
    energy_kwh: float


@dataclass
class DeadlineProblem:
    base: ChargingCostProblem
    deadlines: list[DeadlineRequirement]


@dataclass
class StationOption:
    station_id: str
    prices: np.ndarray
    availability: np.ndarray
    detour_cost: float      # fixed currency cost of reaching this station

    def __post_init__(self):
        self.prices = np.asarray(self.prices, dtype=np.float64)
        self.availability = np.asarray(self.availability, dtype=bool)


@dataclass
class StationSelectionProblem:
    stations: list[StationOption]
    slot_hours: float
    energy_kwh: float
    max_power_kw: float
    efficiency: float = 0.9


@dataclass
class WeightedObjectiveProblem:
    """Weighted blend of energy cost and lateness (urgency) per slot."""

    base: ChargingCostProblem
    cost_weight: float
    urgency_weight: float


@dataclass
class GroundedProblem:
    """Fully numeric problem instance, ready for a solver."""

    problem_type: ProblemType
    payload: Any
    slot_resolutions: list[ParameterSlot] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "problem_type": self.problem_type.value,
            "slots": [s.to_dict() for s in self.slot_resolutions],
        }


@dataclass
class ConstraintCheck:
    name: str
    slack: float
    satisfied: bool


@dataclass
class ValidationReport:
    checks: list[ConstraintCheck]

    @property
    def passed(self) -> bool:
        return all(c.satisfied for c in self.checks)

    def violations(self) -> list[ConstraintCheck]:
        return [c for c in self.checks if not c.satisfied]


@dataclass
class SolutionPlan:
    power_kw: np.ndarray
    objective_value: float
    feasible: bool
    solver_name: str
    narrative: str = ""
    infeasibility_report: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.power_kw = np.asarray(self.power_kw, dtype=np.float64)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "power_kw": [float(v) for v in self.power_kw],
            "objective_value": float(self.objective_value),
            "feasible": self.feasible,
            "solver_name": self.solver_name,
            "narrative": self.narrative,
            "infeasibility_report": list(self.infeasibility_report),
        }


@dataclass
class SolverDescriptor:
    name: str
    problem_types: tuple[ProblemType, ...]
    exactness: str = "exact"


class NoCatalogMatch(EvopsError):
    pass


class SchemaViolation(EvopsError):
    pass


class UnresolvableSlot(EvopsError):
    pass


class NoSolverRegistered(EvopsError):
    pass


class Infeasible(EvopsError):
    pass


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return [float(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value
