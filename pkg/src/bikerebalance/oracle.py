"""Exhaustive single-truck search for tiny instances, used to check the greedy strategies."""

from __future__ import annotations

from typing import List, Optional, Sequence

from .energy import edge_energy, plan_cost_breakdown, route_cost, route_metrics
from .model import DEPOT, CostParams, DistanceMatrix, Metrics, NetworkState, Plan, Station, TruckRoute, TruckSpec

MAX_ORACLE_STATIONS = 7


class TooLarge(ValueError):
    pass


def brute_force_oracle(
    stations: Sequence[Station] | None,
    state: NetworkState,
    matrix: DistanceMatrix,
    spec: TruckSpec,
    objective: str = "distance",
    params: CostParams | None = None,
) -> Plan:
    """Cheapest single-truck plan that brings every station exactly to baseline.

    Each station is served once, fully. Before any stop the truck may detour
    through the depot, which is how the greedy strategies' depot returns
    appear. ``objective`` is ``"distance"`` or ``"energy"``.
    """
    if objective not in ("distance", "energy"):
        raise ValueError(f"objective must be 'distance' or 'energy', got {objective!r}")
    n = state.n
    if n > MAX_ORACLE_STATIONS:
        raise TooLarge(f"{n} stations; the oracle handles at most {MAX_ORACLE_STATIONS}")
    if matrix.n != n:
        raise ValueError("matrix and state disagree on station count")
    params = params or CostParams()
    d = matrix.rows()
    demand = [c - b for c, b in zip(state.current, state.baseline)]
    todo = [i for i in range(n) if demand[i] != 0]
    cap = spec.capacity_bikes
    use_energy = objective == "energy"

    best_cost = float("inf")
    best: Optional[tuple] = None

    def dfs(visits: List[int], loads: List[int], remaining: List[int], dist: float, energy: float):
        nonlocal best_cost, best
        if not remaining:
            score = energy if use_energy else dist
            if score < best_cost:
                best_cost = score
                best = (list(visits), list(loads))
            return
        pos, load = visits[-1], loads[-1]
        for c in remaining:
            new_load = load + demand[c]
            if not 0 <= new_load <= cap:
                continue
            rest = [x for x in remaining if x != c]
            paths = [[c]]
            if pos != DEPOT and c != DEPOT:
                paths.append([DEPOT, c])
            for path in paths:
                vs, ls = list(visits), list(loads)
                dd, ee = dist, energy
                at = pos
                for stop in path:
                    leg = d[at][stop]
                    dd += leg
                    ee += edge_energy(leg, load, spec)
                    at = stop
                if dd > spec.max_distance_m or ee > spec.battery_wh:
                    continue
                if (ee if use_energy else dd) >= best_cost:
                    continue
                if path[-1] == vs[-1]:
                    # serving the depot while parked on it
                    ls[-1] = new_load
                else:
                    for stop in path[:-1]:
                        vs.append(stop)
                        ls.append(load)
                    vs.append(c)
                    ls.append(new_load)
                dfs(vs, ls, rest, dd, ee)

    dfs([DEPOT], [0], todo, 0.0, 0.0)
    if not todo:
        return Plan((), Metrics(), f"oracle-{objective}")
    if best is None:
        raise ValueError("no single-truck plan serves every station")

    visits, loads = best
    dist, energy = route_metrics(visits, loads, matrix, spec)
    r = TruckRoute(tuple(visits), tuple(loads), dist, energy)
    route = TruckRoute(r.visits, r.load_after, dist, energy, route_cost(r, params).total)
    totals = Metrics(dist, energy, plan_cost_breakdown([route], params).total, 1, route.picked)
    return Plan((route,), totals, f"oracle-{objective}")
