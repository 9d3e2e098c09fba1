import json
from pathlib import Path

import pytest

from bikerebalance.cli import bundled, main
from bikerebalance.simulation import write_state
from bikerebalance.model import NetworkState

GOLDEN = Path(__file__).parent / "golden"


def test_missing_matrix_is_data_error(tmp_path, capsys):
    assert main(["solve", "--strategy", "nearest", "--matrix", str(tmp_path / "nope.txt"), "--out-dir", str(tmp_path)]) == 2
    assert "nope.txt" in capsys.readouterr().err


def test_unknown_strategy_is_usage_error(tmp_path):
    assert main(["solve", "--strategy", "teleport", "--out-dir", str(tmp_path)]) == 1


def test_missing_required_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["simulate"])
    assert exc.value.code == 1


def test_unknown_slot_is_data_error(tmp_path):
    assert main(["simulate", "--slot", "brunch", "--out", str(tmp_path / "s.csv")]) == 2


def test_balanced_state_needs_no_trucks(tmp_path, capsys):
    state = tmp_path / "flat.csv"
    write_state(NetworkState([5] * 150, [5] * 150), state)
    assert main(["solve", "--strategy", "energy", "--state", str(state), "--out-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "trucks used: 0" in out
    plan = json.loads((tmp_path / "plan_energy.json").read_text())
    assert plan["routes"] == []


@pytest.mark.parametrize("strategy", ["nearest", "demand", "energy"])
def test_golden_replay(tmp_path, strategy):
    rc = main(["solve", "--strategy", strategy, "--state", str(GOLDEN / "state_seed42_day.csv"), "--out-dir", str(tmp_path)])
    assert rc == 0
    for name in (f"plan_{strategy}.json", f"routes_{strategy}.txt"):
        assert (tmp_path / name).read_bytes() == (GOLDEN / name).read_bytes()


def test_simulate_matches_golden_state(tmp_path):
    out = tmp_path / "state.csv"
    assert main(["simulate", "--seed", "42", "--slot", "day", "--out", str(out)]) == 0
    assert out.read_bytes() == (GOLDEN / "state_seed42_day.csv").read_bytes()


def test_seeded_solve_twice_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["solve", "--strategy", "energy", "--seed", "7", "--out-dir", str(d)]) == 0
    for name in ("plan_energy.json", "routes_energy.txt", "validation_energy.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_compare_writes_report(tmp_path, capsys):
    assert main(["compare", "--out-dir", str(tmp_path)]) == 0
    table = capsys.readouterr().out
    for s in ("nearest", "demand", "energy"):
        assert s in table
        assert (tmp_path / f"plan_{s}.json").exists()
    doc = json.loads((tmp_path / "comparison.json").read_text())
    assert doc["metadata"]["seed"] == 42 and len(doc["metadata"]["state_sha256"]) == 64


def test_validate_round_trip_and_tamper(tmp_path):
    state = GOLDEN / "state_seed42_day.csv"
    assert main(["validate", "--plan", str(GOLDEN / "plan_nearest.json"), "--state", str(state)]) == 0
    doc = json.loads((GOLDEN / "plan_nearest.json").read_text())
    doc["totals"]["total_energy_wh"] += 5
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["validate", "--plan", str(bad), "--state", str(state)]) == 3


def test_truck_spec_override(tmp_path):
    spec = tmp_path / "truck.json"
    spec.write_text(json.dumps({"capacity_bikes": 10, "cost": {"fixed_cost_yen": 3000}}))
    rc = main(["solve", "--strategy", "nearest", "--truck-spec", str(spec), "--state",
               str(GOLDEN / "state_seed42_day.csv"), "--out-dir", str(tmp_path)])
    assert rc == 0
    plan = json.loads((tmp_path / "plan_nearest.json").read_text())
    assert max(max(r["load_after"]) for r in plan["routes"]) <= 10


def test_matrix_command_restitches_bundled_blocks(tmp_path, capsys):
    out = tmp_path / "m.txt"
    assert main(["matrix", "--blocks-dir", str(bundled("blocks")), "--out", str(out)]) == 0
    assert out.read_bytes() == bundled("matrix.txt").read_bytes()
    assert "15 blocks" in capsys.readouterr().out


def test_matrix_fetch_offline_without_cache_fails(tmp_path, monkeypatch):
    monkeypatch.delenv("ROUTING_API_KEY", raising=False)
    rc = main(["matrix", "--fetch", "--blocks-dir", str(tmp_path / "b"), "--out", str(tmp_path / "m.txt")])
    assert rc == 2
