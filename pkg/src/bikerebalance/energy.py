"""Load-linear truck energy model and plan cost."""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence, Tuple

from .model import CostParams, DistanceMatrix, Plan, TruckRoute, TruckSpec

YEN_RESOLUTION = Decimal("0.1")


def edge_energy(d: float, load: int, spec: TruckSpec) -> float:
    """Watt-hours to drive ``d`` meters carrying ``load`` bikes: (e + e' * load) * d."""
    if d < 0:
        raise ValueError(f"distance must be >= 0, got {d}")
    if load < 0 or load > spec.capacity_bikes:
        raise ValueError(f"load {load} outside [0, {spec.capacity_bikes}]")
    return (spec.base_wh_per_m + spec.per_bike_wh_per_m * load) * d


def route_metrics(
    visits: Sequence[int], loads: Sequence[int], matrix: DistanceMatrix, spec: TruckSpec
) -> Tuple[float, float]:
    """Replay a visit sequence, returning (distance_m, energy_wh).

    ``loads[k]`` is the load on board when leaving ``visits[k]``.
    """
    if len(visits) != len(loads):
        raise ValueError(f"{len(visits)} visits but {len(loads)} load entries")
    d = matrix.rows()
    distance = 0.0
    energy = 0.0
    for k in range(len(visits) - 1):
        leg = d[visits[k]][visits[k + 1]]
        distance += leg
        energy += edge_energy(leg, loads[k], spec)
    return distance, energy


@dataclass(frozen=True)
class CostBreakdown:
    fixed_yen: Decimal
    energy_yen: Decimal
    handling_yen: Decimal

    @property
    def total(self) -> Decimal:
        return self.fixed_yen + self.energy_yen + self.handling_yen


def _dec(x: float) -> Decimal:
    return Decimal(repr(float(x)))


def route_cost(route: TruckRoute, params: CostParams) -> CostBreakdown:
    return CostBreakdown(
        fixed_yen=params.fixed_cost_yen,
        energy_yen=params.yen_per_wh * _dec(route.energy_wh),
        handling_yen=params.handling_fee_yen * route.handling_events,
    )


def plan_cost_breakdown(routes: Iterable[TruckRoute], params: CostParams) -> CostBreakdown:
    fixed = energy = handling = Decimal(0)
    for r in routes:
        c = route_cost(r, params)
        fixed += c.fixed_yen
        energy += c.energy_yen
        handling += c.handling_yen
    return CostBreakdown(fixed, energy, handling)


def plan_cost(plan: Plan, params: CostParams) -> Decimal:
    """F * trucks + P * energy + f * (bikes loaded + bikes unloaded), exact.

    Summed per truck so the total is additive over routes.
    """
    return plan_cost_breakdown(plan.routes, params).total


def round_yen(amount: Decimal) -> Decimal:
    """Round half-up to 0.1 yen for display."""
    return Decimal(amount).quantize(YEN_RESOLUTION, rounding=ROUND_HALF_UP)
