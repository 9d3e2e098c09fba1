"""Plan files, route listings and the three-strategy comparison table."""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Dict, List, Sequence

from .energy import plan_cost_breakdown, round_yen
from .model import CostParams, DistanceMatrix, Metrics, NetworkState, Plan, Station, TruckRoute, TruckSpec
from .simulation import STATE_FIELDS
from .solver import Strategy, solve
from .validate import ValidationReport, validate


def format_route(route: TruckRoute) -> str:
    return "[" + ", ".join(str(v) for v in route.visits) + "]"


def plan_listing(plan: Plan, params: CostParams | None = None) -> str:
    """Route per line in bracketed-id form, then a metrics block."""
    params = params or CostParams()
    t = plan.totals
    cb = plan_cost_breakdown(plan.routes, params)
    out = [format_route(r) for r in plan.routes]
    out.append("")
    out.append(f"strategy: {plan.strategy}")
    out.append(f"total distance: {t.total_distance_m:.1f} m")
    out.append(f"energy: {t.total_energy_wh:.1f} Wh")
    out.append(
        f"cost: {round_yen(t.total_cost_yen)} yen "
        f"(fixed {round_yen(cb.fixed_yen)}, energy {round_yen(cb.energy_yen)}, handling {round_yen(cb.handling_yen)})"
    )
    out.append(f"trucks used: {t.trucks_used}")
    out.append(f"bikes moved: {t.bikes_moved}")
    out.append(f"unserved stations: {len(plan.unserved)} (residual {sum(abs(r) for _, r in plan.unserved)} bikes)")
    if plan.fleet_exhausted:
        out.append("fleet limit reached with demand outstanding")
    return "\n".join(out) + "\n"


def plan_to_dict(plan: Plan) -> dict:
    t = plan.totals
    return {
        "strategy": plan.strategy,
        "routes": [
            {
                "visits": list(r.visits),
                "load_after": list(r.load_after),
                "distance_m": r.distance_m,
                "energy_wh": r.energy_wh,
                "cost_yen": str(r.cost_yen),
                "picked": r.picked,
                "dropped": r.dropped,
            }
            for r in plan.routes
        ],
        "totals": {
            "total_distance_m": t.total_distance_m,
            "total_energy_wh": t.total_energy_wh,
            "total_cost_yen": str(t.total_cost_yen),
            "trucks_used": t.trucks_used,
            "bikes_moved": t.bikes_moved,
        },
        "unserved": [[i, r] for i, r in plan.unserved],
        "fleet_exhausted": plan.fleet_exhausted,
    }


def plan_from_dict(doc: dict) -> Plan:
    routes = tuple(
        TruckRoute(
            tuple(r["visits"]), tuple(r["load_after"]),
            float(r["distance_m"]), float(r["energy_wh"]), Decimal(r["cost_yen"]),
        )
        for r in doc["routes"]
    )
    t = doc["totals"]
    totals = Metrics(
        float(t["total_distance_m"]), float(t["total_energy_wh"]), Decimal(t["total_cost_yen"]),
        int(t["trucks_used"]), int(t["bikes_moved"]),
    )
    unserved = tuple((int(i), int(r)) for i, r in doc.get("unserved", []))
    return Plan(routes, totals, doc.get("strategy", ""), unserved, bool(doc.get("fleet_exhausted", False)))


def dumps_plan(plan: Plan) -> str:
    return json.dumps(plan_to_dict(plan), indent=1) + "\n"


def save_plan(plan: Plan, path) -> None:
    Path(path).write_text(dumps_plan(plan), encoding="utf-8")


def load_plan(path) -> Plan:
    return plan_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def state_bytes(state: NetworkState) -> bytes:
    buf = io.StringIO()
    buf.write(",".join(STATE_FIELDS) + "\n")
    for i, (c, b) in enumerate(zip(state.current, state.baseline)):
        buf.write(f"{i},{c},{b}\n")
    return buf.getvalue().encode()


def sha256_files(*paths) -> str:
    h = hashlib.sha256()
    for p in paths:
        h.update(Path(p).read_bytes())
    return h.hexdigest()


COLUMNS = [
    ("total_distance_m", "total distance (m)", min),
    ("total_energy_wh", "energy (Wh)", min),
    ("total_cost_yen", "cost (yen)", min),
    ("trucks_used", "trucks used", min),
    ("bikes_moved", "bikes moved", max),
]


@dataclass
class ComparisonReport:
    plans: Dict[str, Plan]
    validations: Dict[str, ValidationReport]
    metadata: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(v.ok for v in self.validations.values())

    def winners(self) -> Dict[str, List[str]]:
        out = {}
        for key, _, pick in COLUMNS:
            vals = {name: getattr(p.totals, key) for name, p in self.plans.items()}
            target = pick(vals.values())
            out[key] = [name for name, v in vals.items() if v == target]
        return out

    def table(self) -> str:
        names = list(self.plans)
        width = max(14, *(len(n) + 2 for n in names))
        lines = ["".ljust(22) + "".join(n.rjust(width) for n in names)]
        for key, label, _ in COLUMNS:
            cells = []
            for n in names:
                v = getattr(self.plans[n].totals, key)
                if key == "total_cost_yen":
                    cells.append(str(round_yen(v)))
                elif isinstance(v, float):
                    cells.append(f"{v:.1f}")
                else:
                    cells.append(str(v))
            lines.append(label.ljust(22) + "".join(c.rjust(width) for c in cells))
        win = self.winners()
        lines.append("")
        for key, label, _ in COLUMNS:
            lines.append(f"best {label}: {', '.join(win[key])}")
        lines.append("")
        for k, v in self.metadata.items():
            lines.append(f"{k}: {v}")
        for n in names:
            lines.append(f"validation {n}: {'ok' if self.validations[n].ok else 'FAILED'}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "metadata": self.metadata,
            "strategies": {
                n: {
                    **plan_to_dict(p)["totals"],
                    "unserved_stations": len(p.unserved),
                    "validation_ok": self.validations[n].ok,
                    "validation": self.validations[n].lines(),
                }
                for n, p in self.plans.items()
            },
            "winners": self.winners(),
        }


def compare(
    stations: Sequence[Station],
    state: NetworkState,
    matrix: DistanceMatrix,
    spec: TruckSpec,
    params: CostParams | None = None,
    metadata: dict | None = None,
) -> ComparisonReport:
    """Solve and validate all three strategies on one shared state."""
    params = params or CostParams()
    plans, checks = {}, {}
    for strategy in Strategy:
        plan = solve(strategy, stations, state, matrix, spec, params)
        plans[strategy.value] = plan
        checks[strategy.value] = validate(plan, stations, state, matrix, spec, params)
    meta = dict(metadata or {})
    meta["state_sha256"] = hashlib.sha256(state_bytes(state)).hexdigest()
    return ComparisonReport(plans, checks, meta)


def write_comparison(report: ComparisonReport, out_dir, params: CostParams | None = None) -> List[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "comparison.txt", out / "comparison.json"]
    written[0].write_text(report.table(), encoding="utf-8")
    written[1].write_text(json.dumps(report.to_dict(), indent=1) + "\n", encoding="utf-8")
    for name, plan in report.plans.items():
        listing = out / f"routes_{name}.txt"
        listing.write_text(plan_listing(plan, params), encoding="utf-8")
        structured = out / f"plan_{name}.json"
        save_plan(plan, structured)
        written += [listing, structured]
    return written
