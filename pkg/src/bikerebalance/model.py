"""Domain types shared by every other module.

Units are fixed across the package: meters for distance, watt-hours for
energy, yen for money. The depot is always station index 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from decimal import Decimal
from typing import List, Sequence, Tuple

import numpy as np

DEPOT = 0

# Roppongi First Building, the operator's real starting port.
DEPOT_LONGITUDE = 139.741476
DEPOT_LATITUDE = 35.66241

TRUCK_PAYLOAD_KG = 1150.0
BIKE_WEIGHT_KG = 30.2


class Tag(enum.Enum):
    REGULAR = "regular"
    METRO = "metro"
    SCHOOL = "school"

    @property
    def special(self) -> bool:
        return self is not Tag.REGULAR


@dataclass(frozen=True)
class Station:
    id: int
    name: str
    longitude: float
    latitude: float
    capacity: int
    tag: Tag = Tag.REGULAR

    def __post_init__(self):
        if self.id < 0:
            raise ValueError(f"station id must be >= 0, got {self.id}")
        if self.capacity < 1:
            raise ValueError(f"station {self.id}: capacity must be >= 1, got {self.capacity}")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"station {self.id}: longitude {self.longitude} out of range")
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"station {self.id}: latitude {self.latitude} out of range")


def overflow_cap(capacity: int, factor: float = 1.2) -> int:
    """Hard ceiling on bikes parked at a port: ceil(factor * capacity), computed exactly."""
    return math.ceil(Decimal(str(factor)) * capacity)


@dataclass(frozen=True)
class NetworkState:
    current: Tuple[int, ...]
    baseline: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "current", tuple(int(v) for v in self.current))
        object.__setattr__(self, "baseline", tuple(int(v) for v in self.baseline))
        if len(self.current) != len(self.baseline):
            raise ValueError(
                f"current has {len(self.current)} entries but baseline has {len(self.baseline)}"
            )
        if any(v < 0 for v in self.current) or any(v < 0 for v in self.baseline):
            raise ValueError("bike counts must be non-negative")

    @property
    def n(self) -> int:
        return len(self.current)

    def check_against(self, stations: Sequence[Station], cap_factor: float = 1.2) -> None:
        """Raise ValueError unless counts respect the capacities of ``stations``."""
        if len(stations) != self.n:
            raise ValueError(f"state has {self.n} stations, dataset has {len(stations)}")
        for s, cur, base in zip(stations, self.current, self.baseline):
            if cur > overflow_cap(s.capacity, cap_factor):
                raise ValueError(f"station {s.id}: {cur} bikes exceeds overflow cap")
            if base > s.capacity:
                raise ValueError(f"station {s.id}: baseline {base} exceeds capacity {s.capacity}")


def station_demand(state: NetworkState, i: int) -> int:
    """Bikes above (+) or below (-) baseline at station ``i``."""
    if not 0 <= i < state.n:
        raise IndexError(f"station index {i} out of range for {state.n} stations")
    return state.current[i] - state.baseline[i]


class DistanceMatrix:
    """Dense, read-only, generally asymmetric road-distance matrix in meters."""

    def __init__(self, d):
        arr = np.array(d, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"distance matrix must be square, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("distance matrix contains non-finite values")
        if np.any(arr < 0):
            raise ValueError("distance matrix contains negative values")
        if np.any(np.diag(arr) != 0):
            raise ValueError("distance matrix diagonal must be zero")
        arr.flags.writeable = False
        self._d = arr
        self._rows = None

    @property
    def n(self) -> int:
        return self._d.shape[0]

    @property
    def array(self) -> np.ndarray:
        return self._d

    def rows(self) -> List[List[float]]:
        # plain lists are much faster than numpy for scalar lookups in the solver loop
        if self._rows is None:
            self._rows = self._d.tolist()
        return self._rows

    def __getitem__(self, ij):
        i, j = ij
        return float(self._d[i, j])

    def __eq__(self, other):
        if not isinstance(other, DistanceMatrix):
            return NotImplemented
        return self._d.shape == other._d.shape and bool(np.array_equal(self._d, other._d))

    def __repr__(self):
        return f"DistanceMatrix(n={self.n})"


@dataclass(frozen=True)
class TruckSpec:
    capacity_bikes: int = 38
    max_distance_m: float = 270000.0
    battery_wh: float = 38700.0
    base_wh_per_m: float = 0.1433
    per_bike_wh_per_m: float = 0.00327
    fleet_limit: int = 20

    def __post_init__(self):
        if self.capacity_bikes < 1:
            raise ValueError("capacity_bikes must be >= 1")
        if self.fleet_limit < 1:
            raise ValueError("fleet_limit must be >= 1")
        for name in ("max_distance_m", "battery_wh", "base_wh_per_m", "per_bike_wh_per_m"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.base_wh_per_m * self.max_distance_m > self.battery_wh:
            raise ValueError("an empty truck must be able to drive its full range on one battery")


def default_truck_spec() -> TruckSpec:
    """Folofly F1 TRUCK fleet: 38 bikes, 270 km, 38.7 kWh, at most 20 trucks."""
    return TruckSpec(
        capacity_bikes=math.floor(TRUCK_PAYLOAD_KG / BIKE_WEIGHT_KG),
        max_distance_m=270000.0,
        battery_wh=38700.0,
        base_wh_per_m=0.1433,
        per_bike_wh_per_m=0.00327,
        fleet_limit=20,
    )


@dataclass(frozen=True)
class CostParams:
    yen_per_wh: Decimal = Decimal("0.03356")
    fixed_cost_yen: Decimal = Decimal("2740")
    handling_fee_yen: Decimal = Decimal("100")

    def __post_init__(self):
        for name in ("yen_per_wh", "fixed_cost_yen", "handling_fee_yen"):
            value = Decimal(str(getattr(self, name)))
            if value < 0:
                raise ValueError(f"{name} must be >= 0")
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class TruckRoute:
    visits: Tuple[int, ...]
    load_after: Tuple[int, ...]
    distance_m: float = 0.0
    energy_wh: float = 0.0
    cost_yen: Decimal = Decimal(0)

    def __post_init__(self):
        object.__setattr__(self, "visits", tuple(self.visits))
        object.__setattr__(self, "load_after", tuple(self.load_after))

    def deltas(self) -> List[int]:
        """Signed load change at each visit (+ picked up, - dropped off)."""
        out, prev = [], 0
        for q in self.load_after:
            out.append(q - prev)
            prev = q
        return out

    @property
    def picked(self) -> int:
        return sum(x for x in self.deltas() if x > 0)

    @property
    def dropped(self) -> int:
        return -sum(x for x in self.deltas() if x < 0)

    @property
    def handling_events(self) -> int:
        return self.picked + self.dropped


@dataclass(frozen=True)
class Metrics:
    total_distance_m: float = 0.0
    total_energy_wh: float = 0.0
    total_cost_yen: Decimal = Decimal(0)
    trucks_used: int = 0
    bikes_moved: int = 0


@dataclass(frozen=True)
class Plan:
    routes: Tuple[TruckRoute, ...]
    totals: Metrics
    strategy: str = ""
    # stations still off baseline after the plan: (id, current - baseline remaining)
    unserved: Tuple[Tuple[int, int], ...] = field(default_factory=tuple)
    fleet_exhausted: bool = False

    @property
    def infeasible(self) -> bool:
        return bool(self.unserved)
