"""Declarative experiment harness: scenario specs, lockstep runs, reports."""

from .lockstep import LockstepRun, RunResult, RunSeries, run_scenario
from .metrics import CollisionEvent, amplification_ratios, detect_collisions, min_gaps
from .report import report_dict, report_json_bytes, write_report
from .spec import (
    PerturbationSpec,
    PlatoonEntry,
    ScenarioSpec,
    SettleSpec,
    load_scenario,
    scenario_from_dict,
)

__all__ = [
    "CollisionEvent",
    "LockstepRun",
    "PerturbationSpec",
    "PlatoonEntry",
    "RunResult",
    "RunSeries",
    "ScenarioSpec",
    "SettleSpec",
    "amplification_ratios",
    "detect_collisions",
    "load_scenario",
    "min_gaps",
    "report_dict",
    "report_json_bytes",
    "run_distributed",
    "run_distributed_async",
    "run_scenario",
    "scenario_from_dict",
    "write_report",
]


def __getattr__(name: str):
    # The distributed conductor drives hub launchers, which in turn import
    # this package; loading it on first use keeps both import orders valid.
    if name in ("run_distributed", "run_distributed_async"):
        from . import distributed
        return getattr(distributed, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
