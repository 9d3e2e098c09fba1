"""Independent replay of a plan against the matrix, the energy model and the fleet limits."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Sequence

from .energy import edge_energy, plan_cost_breakdown, route_cost
from .model import DEPOT, CostParams, DistanceMatrix, NetworkState, Plan, Station, TruckSpec

REL_TOL = 1e-6

CHECKS = (
    "route_start",
    "single_service",
    "capacity",
    "distance",
    "energy",
    "stock",
    "fleet",
    "metrics",
)


@dataclass
class CheckResult:
    name: str
    passed: bool = True
    detail: str = ""


@dataclass
class ValidationReport:
    checks: Dict[str, CheckResult] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks.values() if not c.passed]

    def fail(self, name: str, detail: str) -> None:
        c = self.checks[name]
        # keep the first violation only
        if c.passed:
            c.passed = False
            c.detail = detail

    def lines(self) -> List[str]:
        return [f"{'PASS' if c.passed else 'FAIL'} {c.name}" + (f": {c.detail}" if c.detail else "")
                for c in self.checks.values()]


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= REL_TOL * max(1.0, abs(a), abs(b))


def validate(
    plan: Plan,
    stations: Sequence[Station] | None,
    state: NetworkState,
    matrix: DistanceMatrix,
    spec: TruckSpec,
    params: CostParams | None = None,
) -> ValidationReport:
    params = params or CostParams()
    rep = ValidationReport({name: CheckResult(name) for name in CHECKS})
    n = state.n
    d = matrix.rows()
    if matrix.n != n or (stations is not None and len(stations) != n):
        rep.fail("metrics", f"dimension mismatch: matrix {matrix.n}, state {n}")
        return rep

    demand = [c - b for c, b in zip(state.current, state.baseline)]
    moved = [0] * n  # net bikes removed from each station so far
    cap = spec.capacity_bikes

    if len(plan.routes) > spec.fleet_limit:
        rep.fail("fleet", f"{len(plan.routes)} trucks exceeds fleet limit {spec.fleet_limit}")

    for k, route in enumerate(plan.routes):
        visits, loads = route.visits, route.load_after
        if not visits or visits[0] != DEPOT:
            rep.fail("route_start", f"truck {k} does not start at the depot")
        if len(visits) != len(loads):
            rep.fail("metrics", f"truck {k}: {len(visits)} visits but {len(loads)} loads")
            continue
        if any(not 0 <= v < n for v in visits):
            rep.fail("metrics", f"truck {k}: visit outside 0..{n - 1}")
            continue

        served_here = set()
        prev_load = 0
        dist = energy = 0.0
        for idx, (v, q) in enumerate(zip(visits, loads)):
            if not 0 <= q <= cap:
                rep.fail("capacity", f"truck {k} visit {idx} (station {v}): load {q} outside [0, {cap}]")
            delta = q - prev_load
            if delta:
                if v in served_here:
                    rep.fail("single_service", f"truck {k} serves station {v} twice")
                served_here.add(v)
                before = demand[v] - moved[v]
                if before == 0:
                    rep.fail("single_service", f"truck {k} serves station {v} which is already at baseline")
                elif (delta > 0) != (before > 0) or abs(delta) > abs(before):
                    rep.fail("stock", f"truck {k} moves {delta:+d} at station {v} with residual {before:+d}")
                moved[v] += delta
            if idx + 1 < len(visits):
                leg = d[v][visits[idx + 1]]
                dist += leg
                energy += edge_energy(leg, min(max(q, 0), cap), spec)
                if dist > spec.max_distance_m:
                    rep.fail("distance", f"truck {k} exceeds {spec.max_distance_m} m on leg {idx}")
                if energy > spec.battery_wh:
                    rep.fail("energy", f"truck {k} exceeds {spec.battery_wh} Wh on leg {idx}")
            prev_load = q

        if not _close(dist, route.distance_m):
            rep.fail("metrics", f"truck {k}: distance {route.distance_m} != replayed {dist}")
        if not _close(energy, route.energy_wh):
            rep.fail("metrics", f"truck {k}: energy {route.energy_wh} != replayed {energy}")
        expected_cost = route_cost(route, params).total
        if not _close(float(expected_cost), float(route.cost_yen)):
            rep.fail("metrics", f"truck {k}: cost {route.cost_yen} != recomputed {expected_cost}")

    residual = {i: demand[i] - moved[i] for i in range(n) if demand[i] != moved[i]}
    if dict(plan.unserved) != residual:
        rep.fail("stock", f"unserved list does not match replay ({len(residual)} stations off baseline)")

    t = plan.totals
    routes = plan.routes
    if t.trucks_used != len(routes):
        rep.fail("metrics", f"trucks_used {t.trucks_used} != {len(routes)} routes")
    if t.bikes_moved != sum(r.picked for r in routes):
        rep.fail("metrics", "bikes_moved does not match the load trajectories")
    if not _close(t.total_distance_m, sum(r.distance_m for r in routes)):
        rep.fail("metrics", "total distance does not equal the sum over trucks")
    if not _close(t.total_energy_wh, sum(r.energy_wh for r in routes)):
        rep.fail("metrics", "total energy does not equal the sum over trucks")
    if not _close(float(t.total_cost_yen), float(plan_cost_breakdown(routes, params).total)):
        rep.fail("metrics", f"total cost {t.total_cost_yen} does not match recomputed cost")
    return rep
