import json
import math
import os
from pathlib import Path

import pytest

import heterosim as hs

SCENARIOS = Path(os.environ.get("HETEROSIM_SCENARIOS", Path(__file__).resolve().parents[2] / "scenarios"))


def test_builtins_listed():
    assert hs.builtin_names() == ["assembly", "rescue"]


def test_assembly_metrics():
    result = hs.run_builtin("assembly")
    assert result.success
    report = result.report
    assert list(report) == ["organisms", "total_mips", "total_wh", "speeds", "rescue_success"]
    assert report["total_mips"] == 12400
    assert sum(o["non_driving_capacity_wh"] for o in report["organisms"]) == 66.0
    assert report["speeds"] == {"before_lift": 6.0, "after_lift": 31.0}
    assert report["rescue_success"] is None


def test_rescue_and_event_key_order():
    result = hs.run_builtin("rescue")
    assert result.success and result.report["rescue_success"] is True
    for line in result.event_log_text.splitlines():
        assert list(json.loads(line)) == ["tick", "t", "event", "subjects", "data"]
    types = [e["event"] for e in result.events]
    assert types.index("HelpBroadcast") < types.index("Docked") < types.index("PostureUpright")


def test_runs_are_deterministic():
    a = hs.run_builtin("rescue")
    b = hs.run_builtin("rescue")
    assert a.event_log_text == b.event_log_text and a.report_text == b.report_text


def test_scenario_files_validate():
    summary = hs.validate_scenario((SCENARIOS / "wired_relay.json").read_text())
    assert summary["modules"] == 4
    with pytest.raises(hs.ParseError):
        hs.validate_scenario((SCENARIOS / "malformed.json").read_text())
    with pytest.raises(hs.ValidationError):
        hs.validate_scenario(json.dumps({"config": {"dt": -1}}))


def test_bus_matches_quadratic_root():
    # (25.2 - V) / 0.1 = 12 / V
    expected = (25.2 + math.sqrt(25.2**2 - 4 * 1.2)) / 2
    solution = hs.solve_bus([{"id": "A", "soc": 1.0, "load_w": 12.0}])
    assert solution["bus_voltage"] == pytest.approx(expected, abs=1e-12)
    with pytest.raises(hs.PowerError):
        hs.solve_bus([{"id": "A", "soc": 1.0, "load_w": 5.0, "sharing": False}])


def test_world_docking_and_comm():
    w = hs.World()
    w.add_module("W1", hs.ModuleKind.ActiveWheel)
    w.add_module("W2", hs.ModuleKind.ActiveWheel, x=0.105, heading=180)
    w.add_module("B1", hs.ModuleKind.Backbone, x=0.0, y=0.105)
    assert w.can_dock("W1", 0, "W2", 1) == "ShapeIncompatible"
    assert w.can_dock("W1", 0, "B1", 2) is None
    w.dock("W1", 0, "B1", 2)
    assert w.lock_wh == pytest.approx(0.5 / 3600)
    assert w.organisms() == [["B1", "W1"], ["W2"]]
    assert w.wired_hops("B1", "W1") == 1
    assert w.wired_hops("B1", "W2") is None
    assert w.broadcast("W1") == {"B1", "W2"}
    w.undock("W1", "B1")
    assert w.organisms() == [["B1"], ["W1"], ["W2"]]


def test_lift_and_conservation():
    assert hs.required_lift_torque([1.0, 1.0]) == pytest.approx(9.81 * 0.105 * 3)
    w = hs.World({"scout_max_torque_nm": 4.0})
    w.add_module("S", hs.ModuleKind.Scout)
    w.add_module("B", hs.ModuleKind.Backbone, x=0.105)
    w.attach("S", 0, "B", 3)
    feasible, required, available = w.lift("S", ["B"])
    assert feasible and available == 4.0
    w.set_module("S", load_w=3.0)
    w.set_module("B", soc=0.2, sharing=False)
    before = w.stored_energy_wh
    for _ in range(1000):
        w.step_energy(0.1)
    assert abs(w.stored_energy_wh - before + w.load_wh + w.loss_wh) < 1e-9


def test_bad_config_key_raises():
    with pytest.raises(hs.ValidationError):
        hs.World({"warp": 1})
