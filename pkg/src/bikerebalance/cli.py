"""Command-line entry point.

    bikerebalance matrix   --blocks-dir DIR --out matrix.txt [--fetch]
    bikerebalance simulate --seed 42 --slot day --out state.csv
    bikerebalance solve    --strategy energy (--state state.csv | --seed 7)
    bikerebalance compare  --seed 42 --slot day --out-dir results/
    bikerebalance validate --plan plan_energy.json --state state.csv

Exit codes: 0 ok, 1 usage, 2 data error, 3 validation failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from decimal import Decimal
from importlib import resources
from pathlib import Path

import numpy as np

from .distance import (
    StitchReport,
    load_blocks,
    load_matrix,
    plan_batches,
    read_stations,
    save_block,
    save_matrix,
    stitch,
)
from .model import CostParams, NetworkState, TruckSpec, default_truck_spec
from .routing_api import RoutingApiError
from .report import compare, load_plan, plan_listing, save_plan, sha256_files, write_comparison
from .simulation import SimConfig, default_profile, generate_state, read_profile, read_state, write_state
from .solver import Strategy, solve
from .validate import validate

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INVALID = 0, 1, 2, 3

log = logging.getLogger("bikerebalance")


def bundled(name: str) -> Path:
    return Path(str(resources.files("bikerebalance") / "data" / name))


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--stations", type=Path, default=bundled("stations.csv"), help="station CSV")
    p.add_argument("--matrix", type=Path, default=bundled("matrix.txt"), help="distance matrix file")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--slot", default="day", help="time slot label in the utilization profile")
    p.add_argument("--out-dir", type=Path, default=Path("."))
    p.add_argument("--truck-spec", type=Path, help="JSON overriding truck and cost constants")
    p.add_argument("--profile", type=Path, help="utilization profile CSV")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = _Parser(prog="bikerebalance", description="Greedy truck rebalancing for bike-share ports.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    m = sub.add_parser("matrix", parents=[common], help="stitch (or fetch and stitch) a distance matrix")
    m.add_argument("--blocks-dir", type=Path, required=True)
    m.add_argument("--out", type=Path, required=True)
    m.add_argument("--fetch", action="store_true", help="fetch missing blocks from the routing API")
    m.add_argument("--batch-size", type=int, default=50)
    m.add_argument("--cache-dir", type=Path, help="API response cache (default: BLOCKS_DIR/cache)")

    s = sub.add_parser("simulate", parents=[common], help="generate a network state")
    s.add_argument("--out", type=Path, required=True)

    so = sub.add_parser("solve", parents=[common], help="solve one strategy")
    so.add_argument("--strategy", required=True, help="nearest, demand or energy")
    so.add_argument("--state", type=Path, help="state CSV; simulated from --seed/--slot if omitted")

    c = sub.add_parser("compare", parents=[common], help="solve and compare all three strategies")
    c.add_argument("--state", type=Path, help="state CSV; simulated from --seed/--slot if omitted")

    v = sub.add_parser("validate", parents=[common], help="check a plan file against a state")
    v.add_argument("--plan", type=Path, required=True)
    v.add_argument("--state", type=Path, required=True)
    return ap


def load_specs(path: Path | None):
    spec, params = default_truck_spec(), CostParams()
    if path is None:
        return spec, params
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        cost = doc.pop("cost", {})
        spec = TruckSpec(**{**spec.__dict__, **doc})
        params = CostParams(**{**params.__dict__, **{k: Decimal(str(v)) for k, v in cost.items()}})
    except (OSError, ValueError, TypeError) as exc:
        raise DataError(f"{path}: {exc}") from exc
    return spec, params


def _dataset(args):
    stations = read_stations(args.stations)
    matrix = load_matrix(args.matrix)
    if matrix.n != len(stations):
        raise DataError(f"{args.stations} has {len(stations)} stations but {args.matrix} is {matrix.n}x{matrix.n}")
    return stations, matrix


def _state(args, stations) -> NetworkState:
    if getattr(args, "state", None):
        state = read_state(args.state)
        if state.n != len(stations):
            raise DataError(f"{args.state} has {state.n} stations, dataset has {len(stations)}")
        return state
    profile = read_profile(args.profile) if args.profile else default_profile()
    try:
        profile.get(args.slot)
    except KeyError as exc:
        raise DataError(str(exc.args[0])) from None
    return generate_state(stations, SimConfig(seed=args.seed, slot=args.slot, profile=profile))


def cmd_matrix(args) -> int:
    stations = read_stations(args.stations)
    n = len(stations)
    if args.fetch:
        from .routing_api import ApiConfig, fetch_block

        config = ApiConfig.from_env(args.cache_dir or args.blocks_dir / "cache")
        args.blocks_dir.mkdir(parents=True, exist_ok=True)
        for k, batch in enumerate(plan_batches(range(n), args.batch_size)):
            block = fetch_block([stations[i] for i in batch], config)
            save_block(block, args.blocks_dir / f"block_{k:02d}.json")
    rep = StitchReport()
    matrix = stitch(load_blocks(args.blocks_dir), n, rep)
    save_matrix(matrix, args.out)
    arr = matrix.array
    off = arr[~np.eye(n, dtype=bool)]
    asym = abs(arr - arr.T).max() if n > 1 else 0.0
    print(f"stitched {rep.blocks} blocks into {n}x{n} ({rep.overwrites} overlapping cells, {rep.conflicts} conflicts)")
    if n > 1:
        print(f"off-diagonal meters: min {off.min():.1f}  mean {off.mean():.1f}  max {off.max():.1f}; "
              f"max |d_ij - d_ji| {asym:.1f}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    stations = read_stations(args.stations)
    args.state = None
    state = _state(args, stations)
    write_state(state, args.out)
    print(f"wrote {args.out}: {sum(state.current)} bikes over {state.n} stations")
    return EXIT_OK


def cmd_solve(args) -> int:
    try:
        strategy = Strategy.parse(args.strategy)
    except ValueError as exc:
        print(f"bikerebalance solve: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    spec, params = load_specs(args.truck_spec)
    stations, matrix = _dataset(args)
    state = _state(args, stations)
    plan = solve(strategy, stations, state, matrix, spec, params)
    report = validate(plan, stations, state, matrix, spec, params)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    listing = plan_listing(plan, params)
    (out / f"routes_{strategy.value}.txt").write_text(listing, encoding="utf-8")
    save_plan(plan, out / f"plan_{strategy.value}.json")
    (out / f"validation_{strategy.value}.txt").write_text("\n".join(report.lines()) + "\n", encoding="utf-8")
    print(listing, end="")
    if not report.ok:
        for line in report.lines():
            print(line, file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def cmd_compare(args) -> int:
    spec, params = load_specs(args.truck_spec)
    stations, matrix = _dataset(args)
    state = _state(args, stations)
    meta = {
        "seed": None if args.state else args.seed,
        "slot": None if args.state else args.slot,
        "state_file": str(args.state) if args.state else None,
        "dataset_sha256": sha256_files(args.stations, args.matrix),
    }
    report = compare(stations, state, matrix, spec, params, meta)
    write_comparison(report, args.out_dir, params)
    print(report.table(), end="")
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_validate(args) -> int:
    spec, params = load_specs(args.truck_spec)
    stations, matrix = _dataset(args)
    state = _state(args, stations)
    try:
        plan = load_plan(args.plan)
    except (KeyError, TypeError) as exc:
        raise DataError(f"{args.plan}: malformed plan ({exc})") from None
    report = validate(plan, stations, state, matrix, spec, params)
    print("\n".join(report.lines()))
    return EXIT_OK if report.ok else EXIT_INVALID


COMMANDS = {
    "matrix": cmd_matrix,
    "simulate": cmd_simulate,
    "solve": cmd_solve,
    "compare": cmd_compare,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (DataError, OSError, ValueError, RoutingApiError) as exc:
        print(f"bikerebalance {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
