"""Python front end for the heterosim C++ core."""

import json

from ._heterosim import (
    DeadBatteryError,
    DockingError,
    Error,
    MechanicsError,
    ModuleKind,
    ParseError,
    PowerError,
    ValidationError,
    World,
    builtin_names,
    config_keys,
    open_circuit_voltage,
    required_lift_torque,
    run_scenario_text,
    solve_bus,
    validate_scenario,
)

__all__ = [
    "DeadBatteryError",
    "DockingError",
    "Error",
    "MechanicsError",
    "ModuleKind",
    "ParseError",
    "PowerError",
    "RunResult",
    "ValidationError",
    "World",
    "builtin_names",
    "config_keys",
    "open_circuit_voltage",
    "required_lift_torque",
    "run_builtin",
    "run_scenario",
    "solve_bus",
    "validate_scenario",
]


class RunResult:
    """Outcome of one scenario run: decoded events and report plus the raw text."""

    def __init__(self, raw):
        self.success = raw["success"]
        self.failure = raw["failure"]
        self.event_log_text = raw["event_log"]
        self.report_text = raw["report"]
        self.events = [json.loads(line) for line in self.event_log_text.splitlines()]
        self.report = json.loads(self.report_text)

    def __repr__(self):
        return f"RunResult(success={self.success}, events={len(self.events)})"


def run_scenario(scenario):
    """Runs a scenario given as a dict or a JSON string."""
    text = scenario if isinstance(scenario, str) else json.dumps(scenario)
    return RunResult(run_scenario_text(text))


def run_builtin(name):
    return run_scenario({"builtin": name})
