"""Greedy rebalancing strategies.

One truck is dispatched at a time from the depot (station 0). At every step
it picks the next station from the pickup queue (while it has room) or the
drop-off queue (while it carries bikes), scored by the strategy. A truck
heads back to the depot whenever it becomes full or empty; that return leg
is only driven if more service follows. Batteries are never recharged.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

from .energy import edge_energy, plan_cost_breakdown, route_cost, route_metrics
from .model import (
    DEPOT,
    CostParams,
    DistanceMatrix,
    Metrics,
    NetworkState,
    Plan,
    Station,
    TruckRoute,
    TruckSpec,
)


class Strategy(enum.Enum):
    NEAREST_DISTANCE = "nearest"
    MAX_DEMAND = "demand"
    MIN_ENERGY = "energy"

    @classmethod
    def parse(cls, name: str) -> "Strategy":
        key = name.strip().lower().replace("-", "_")
        aliases = {
            "nearest": cls.NEAREST_DISTANCE, "nearest_distance": cls.NEAREST_DISTANCE,
            "distance": cls.NEAREST_DISTANCE,
            "demand": cls.MAX_DEMAND, "max_demand": cls.MAX_DEMAND,
            "energy": cls.MIN_ENERGY, "min_energy": cls.MIN_ENERGY,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown strategy {name!r}; choose nearest, demand or energy") from None


@dataclass(frozen=True)
class WorkQueues:
    overflow: Tuple[Tuple[int, int], ...]
    underflow: Tuple[Tuple[int, int], ...]


def classify(state: NetworkState) -> WorkQueues:
    over, under = [], []
    for i, (cur, base) in enumerate(zip(state.current, state.baseline)):
        if cur > base:
            over.append((i, cur - base))
        elif cur < base:
            under.append((i, base - cur))
    return WorkQueues(tuple(over), tuple(under))


@dataclass
class _Truck:
    visits: List[int] = field(default_factory=lambda: [DEPOT])
    loads: List[int] = field(default_factory=lambda: [0])
    served: set = field(default_factory=set)
    distance: float = 0.0
    energy: float = 0.0
    returning: bool = False

    @property
    def pos(self) -> int:
        return self.visits[-1]

    @property
    def load(self) -> int:
        return self.loads[-1]


def solve(
    strategy: Strategy | str,
    stations: Sequence[Station] | None,
    state: NetworkState,
    matrix: DistanceMatrix,
    spec: TruckSpec,
    params: CostParams | None = None,
) -> Plan:
    """Route the fleet so stations return to baseline; never raises for infeasibility.

    Stations left off baseline (fleet, battery or bike supply ran out) are
    listed in ``Plan.unserved``.
    """
    if isinstance(strategy, str):
        strategy = Strategy.parse(strategy)
    params = params or CostParams()
    n = state.n
    if matrix.n != n:
        raise ValueError(f"matrix is {matrix.n}x{matrix.n} but state has {n} stations")
    if stations is not None and len(stations) != n:
        raise ValueError(f"{len(stations)} stations but state has {n}")
    if n < 1:
        raise ValueError("depot station 0 is missing")

    d = matrix.rows()
    # signed residual demand: > 0 needs pickup, < 0 needs drop-off
    residual = [c - b for c, b in zip(state.current, state.baseline)]
    trucks: List[_Truck] = []
    fleet_exhausted = False

    while any(r > 0 for r in residual):
        if len(trucks) >= spec.fleet_limit:
            fleet_exhausted = True
            break
        truck = _Truck()
        _drive(truck, strategy, residual, d, spec)
        if not truck.served:
            break
        trucks.append(truck)

    routes = []
    for t in trucks:
        dist, energy = route_metrics(t.visits, t.loads, matrix, spec)
        r = TruckRoute(tuple(t.visits), tuple(t.loads), dist, energy)
        routes.append(TruckRoute(r.visits, r.load_after, dist, energy, route_cost(r, params).total))
    return _assemble(routes, residual, params, strategy.value, fleet_exhausted)


def _assemble(routes, residual, params, name, fleet_exhausted=False) -> Plan:
    totals = Metrics(
        total_distance_m=sum(r.distance_m for r in routes),
        total_energy_wh=sum(r.energy_wh for r in routes),
        total_cost_yen=plan_cost_breakdown(routes, params).total,
        trucks_used=len(routes),
        bikes_moved=sum(r.picked for r in routes),
    )
    unserved = tuple((i, r) for i, r in enumerate(residual) if r != 0)
    return Plan(tuple(routes), totals, name, unserved, fleet_exhausted)


def _drive(truck: _Truck, strategy: Strategy, residual: List[int], d, spec: TruckSpec) -> None:
    cap = spec.capacity_bikes
    active = [c for c, r in enumerate(residual) if r != 0]
    while True:
        load = truck.load
        pos = truck.pos
        coef = spec.base_wh_per_m + spec.per_bike_wh_per_m * load
        via_depot = truck.returning and pos != DEPOT
        lead = d[pos][DEPOT] if via_depot else 0.0
        row = d[DEPOT] if via_depot else d[pos]
        # same accumulation order as the truck's own running totals below
        dist0 = truck.distance + lead
        energy0 = truck.energy + coef * lead

        full, partial = [], []
        for c in active:
            r = residual[c]
            if c in truck.served:
                continue
            if r > 0:
                if load >= cap:
                    continue
                amount = min(r, cap - load)
            else:
                if load == 0:
                    continue
                amount = -min(-r, load)
            leg = row[c]
            if dist0 + leg > spec.max_distance_m or energy0 + coef * leg > spec.battery_wh:
                continue
            (full if amount == r else partial).append((c, amount, leg))
        pool = full or partial
        if not pool:
            return

        c, amount, leg = min(pool, key=_scorer(strategy, load, residual, d, spec))

        if via_depot:
            truck.visits.append(DEPOT)
            truck.loads.append(load)
            truck.distance += lead
            truck.energy += coef * lead
        truck.distance += leg
        truck.energy += coef * leg
        if c == truck.pos:
            # serving the port the truck is standing on (only ever the depot)
            truck.loads[-1] = load + amount
        else:
            truck.visits.append(c)
            truck.loads.append(load + amount)
        truck.served.add(c)
        residual[c] -= amount
        if residual[c] == 0:
            active.remove(c)
        truck.returning = truck.load in (0, cap) and truck.pos != DEPOT


def _scorer(strategy: Strategy, load: int, residual, d, spec: TruckSpec):
    """Sort key over (station, amount, leg) candidates; ties always fall to the lower id."""
    if strategy is Strategy.NEAREST_DISTANCE:
        return lambda x: (x[2], x[0])
    if strategy is Strategy.MAX_DEMAND:
        return lambda x: (-abs(residual[x[0]]), x[2], x[0])
    cap = spec.capacity_bikes

    def energy(x):
        c, amount, leg = x
        e = edge_energy(leg, load, spec)
        after = load + amount
        if c != DEPOT and after in (0, cap):
            # this stop commits the truck to the depot leg as well
            e += edge_energy(d[c][DEPOT], after, spec)
        return (e, c)

    return energy
