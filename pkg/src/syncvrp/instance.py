"""Problem data: customers, fleets, travel metric and the random generator.

Node 0 (start depot) and node n (end depot) share the depot location.
Service at a customer in mode ``m`` (``m`` support vehicles present) takes
``demand / productivity[m]`` time units; ``demand`` is the duration at the
highest mode.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

RNG_NAME = "pcg64"


class InstanceError(ValueError):
    """An instance document violates a data invariant."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class InstanceParseError(ValueError):
    """Malformed instance document (bad JSON or wrong shape)."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + loc)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InstanceError("loc", f"non-finite coordinate ({self.x}, {self.y})")


def travel_time(a: Point, b: Point) -> float:
    """Euclidean distance between two locations."""
    return math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2)


def default_productivity(b: int, m: int) -> float:
    """Productivity ``m / b`` of mode ``m`` when at most ``b`` support vehicles fit."""
    if not 1 <= m <= b:
        raise ValueError(f"mode {m} outside 1..{b}")
    return m / b


@dataclass(frozen=True)
class CustomerSpec:
    id: int
    location: Point
    demand: float
    max_modes: int
    productivity: tuple[float, ...] = ()

    def __post_init__(self):
        if not (isinstance(self.max_modes, (int, np.integer)) and self.max_modes >= 1):
            raise InstanceError("max_modes", f"customer {self.id}: must be an integer >= 1")
        if not (math.isfinite(self.demand) and self.demand > 0):
            raise InstanceError("demand", f"customer {self.id}: must be positive, got {self.demand}")
        if not self.productivity:
            prod = tuple(default_productivity(self.max_modes, m) for m in range(1, self.max_modes + 1))
            object.__setattr__(self, "productivity", prod)
        else:
            object.__setattr__(self, "productivity", tuple(float(p) for p in self.productivity))
        prod = self.productivity
        if len(prod) != self.max_modes:
            raise InstanceError(
                "productivity", f"customer {self.id}: expected {self.max_modes} rates, got {len(prod)}"
            )
        if any(not (0.0 < p <= 1.0) for p in prod):
            raise InstanceError("productivity", f"customer {self.id}: rates must lie in (0, 1]")
        if any(b <= a for a, b in zip(prod, prod[1:])):
            raise InstanceError("productivity", f"customer {self.id}: productivity monotone violated")
        if prod[-1] != 1.0:
            raise InstanceError("productivity", f"customer {self.id}: highest mode must have rate 1")

    def rate(self, m: int) -> float:
        if not 1 <= m <= self.max_modes:
            raise ValueError(f"mode {m} outside 1..{self.max_modes} for customer {self.id}")
        return self.productivity[m - 1]

    @property
    def has_default_productivity(self) -> bool:
        return all(
            abs(p - default_productivity(self.max_modes, m)) <= 1e-12
            for m, p in enumerate(self.productivity, start=1)
        )


def mode_service_time(spec: CustomerSpec, m: int) -> float:
    """Duration of a complete service of ``spec`` in mode ``m``."""
    return spec.demand / spec.rate(m)


@dataclass(frozen=True)
class FleetConfig:
    primary_count: int
    support_count: int

    def __post_init__(self):
        if self.primary_count < 1:
            raise InstanceError("fleet.primary", "need at least one primary vehicle")
        if self.support_count < 1:
            raise InstanceError("fleet.support", "need at least one support vehicle")


def config_label(num_customers: int, primary: int, support: int) -> str:
    return f"{num_customers:02d}-{primary:02d}-{support:02d}"


@dataclass(frozen=True)
class Instance:
    depot: Point
    customers: tuple[CustomerSpec, ...]
    fleet: FleetConfig
    name: str = "instance"

    def __post_init__(self):
        object.__setattr__(self, "customers", tuple(self.customers))
        ids = [c.id for c in self.customers]
        if ids != list(range(1, len(ids) + 1)):
            raise InstanceError("customers", f"ids must be 1..{len(ids)} in order, got {ids}")

    @property
    def num_customers(self) -> int:
        return len(self.customers)

    @property
    def label(self) -> str:
        return config_label(self.num_customers, self.fleet.primary_count, self.fleet.support_count)

    def customer(self, v: int) -> CustomerSpec:
        return self.customers[v - 1]

    def location(self, v: int) -> Point:
        """Location of original customer ``v``; 0 denotes the depot."""
        return self.depot if v == 0 else self.customers[v - 1].location

    def distance(self, u: int, v: int) -> float:
        return travel_time(self.location(u), self.location(v))


@dataclass(frozen=True)
class GenConfig:
    num_customers: int
    primary_count: int
    support_count: int
    plane_size: float = 100.0
    demand_range: tuple[int, int] = (20, 50)
    max_modes_range: tuple[int, int] = (2, 4)
    seed: int = 0

    def __post_init__(self):
        if self.num_customers < 0 or self.primary_count < 1 or self.support_count < 1:
            raise ValueError("counts must be positive (customers may be zero)")
        lo, hi = self.demand_range
        if not 0 < lo <= hi:
            raise ValueError(f"bad demand range {self.demand_range}")
        lo, hi = self.max_modes_range
        if not 1 <= lo <= hi:
            raise ValueError(f"bad mode range {self.max_modes_range}")
        if self.plane_size <= 0:
            raise ValueError("plane_size must be positive")


def generate_instance(config: GenConfig) -> Instance:
    rng = np.random.Generator(np.random.PCG64(config.seed))
    size = config.plane_size
    dx, dy = rng.uniform(0.0, size, size=2)
    depot = Point(float(dx), float(dy))
    customers = []
    for v in range(1, config.num_customers + 1):
        x, y = rng.uniform(0.0, size, size=2)
        demand = int(rng.integers(config.demand_range[0], config.demand_range[1], endpoint=True))
        b = int(rng.integers(config.max_modes_range[0], config.max_modes_range[1], endpoint=True))
        customers.append(CustomerSpec(v, Point(float(x), float(y)), float(demand), b))
    label = config_label(config.num_customers, config.primary_count, config.support_count)
    return Instance(
        depot=depot,
        customers=tuple(customers),
        fleet=FleetConfig(config.primary_count, config.support_count),
        name=f"{label}_s{config.seed}_{RNG_NAME}",
    )


# -- JSON ------------------------------------------------------------------

def instance_to_dict(inst: Instance) -> dict:
    customers = []
    for c in inst.customers:
        entry = {"id": c.id, "loc": [c.location.x, c.location.y], "demand": c.demand, "max_modes": c.max_modes}
        if not c.has_default_productivity:
            entry["productivity"] = list(c.productivity)
        customers.append(entry)
    return {
        "name": inst.name,
        "depot": [inst.depot.x, inst.depot.y],
        "customers": customers,
        "fleet": {"primary": inst.fleet.primary_count, "support": inst.fleet.support_count},
    }


def write_instance(inst: Instance) -> bytes:
    return (json.dumps(instance_to_dict(inst), indent=2) + "\n").encode("utf-8")


def _point(value, where: str) -> Point:
    if not (isinstance(value, Sequence) and len(value) == 2):
        raise InstanceParseError(f"{where}: expected [x, y]")
    try:
        return Point(float(value[0]), float(value[1]))
    except (TypeError, ValueError) as exc:
        raise InstanceParseError(f"{where}: {exc}") from None


def instance_from_dict(doc: dict) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceParseError("top level must be an object")
    for key in ("depot", "customers", "fleet"):
        if key not in doc:
            raise InstanceParseError(f"missing key '{key}'")
    customers = []
    for pos, entry in enumerate(doc["customers"]):
        where = f"customers[{pos}]"
        if not isinstance(entry, dict):
            raise InstanceParseError(f"{where}: expected object")
        missing = [k for k in ("id", "loc", "demand", "max_modes") if k not in entry]
        if missing:
            raise InstanceParseError(f"{where}: missing {missing}")
        if not isinstance(entry["max_modes"], int):
            raise InstanceError("max_modes", f"{where}: must be an integer")
        customers.append(
            CustomerSpec(
                id=int(entry["id"]),
                location=_point(entry["loc"], where + ".loc"),
                demand=float(entry["demand"]),
                max_modes=entry["max_modes"],
                productivity=tuple(entry.get("productivity") or ()),
            )
        )
    fleet = doc["fleet"]
    if not isinstance(fleet, dict) or "primary" not in fleet or "support" not in fleet:
        raise InstanceParseError("fleet: expected {'primary': int, 'support': int}")
    return Instance(
        depot=_point(doc["depot"], "depot"),
        customers=tuple(customers),
        fleet=FleetConfig(int(fleet["primary"]), int(fleet["support"])),
        name=str(doc.get("name", "instance")),
    )


def read_instance(text: bytes | str) -> Instance:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceParseError(exc.msg, exc.lineno, exc.colno) from None
    return instance_from_dict(doc)
