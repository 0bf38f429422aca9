"""Run reports: one canonical summary JSON plus per-vehicle CSV time series.

The summary is serialized with sorted keys, minimal separators, and no
wall-clock stamps, so two runs of the same scenario and seed produce
byte-identical files. Floats are written with ``repr`` round-trip fidelity
in the CSVs for the same reason.
"""

import csv
import json
from pathlib import Path

from ..errors import IoFailure
from .lockstep import RunResult

SUMMARY_NAME = "summary.json"
POOL_LOG_NAME = "pool_log.csv"
VEHICLE_CSV_HEADER = ["time", "speed", "arc_position", "gap_to_leader"]


def report_dict(result: RunResult) -> dict:
    scn = result.scenario
    vehicles = [{"vehicle_id": e.spec.vehicle_id, "kind": e.spec.kind.value,
                 "role": e.spec.role.value, "source": e.source_kind}
                for e in scn.platoon]
    return {
        "scenario": scn.name,
        "seed": scn.seed,
        "tick_hz": scn.tick_hz,
        "laps_requested": scn.laps,
        "base_speed": scn.base_speed,
        "collision_threshold": scn.collision_threshold,
        "interlock": scn.interlock,
        "perturbation": {
            "kind": scn.perturbation.kind,
            "trigger_point": scn.perturbation.trigger_point,
            "trigger_lap": scn.perturbation.trigger_lap,
        },
        "vehicles": vehicles,
        "tick_count": result.tick_count,
        "sim_time": result.sim_time,
        "settle_time": result.settle_time,
        "trigger_time": result.trigger_time,
        "laps_completed": result.laps_completed,
        "peak_speeds": result.peak_speeds,
        "amplification": result.amplification,
        "min_gaps": result.min_gaps,
        "collisions": [event.to_dict() for event in result.collisions],
        "emergency_stops": [[vid, t] for vid, t in result.emergency_stops],
        "hub_counters": result.counters,
    }


def report_json_bytes(result: RunResult) -> bytes:
    text = json.dumps(report_dict(result), sort_keys=True,
                      separators=(",", ":"), ensure_ascii=False, allow_nan=False)
    return (text + "\n").encode("utf-8")


def vehicle_csv_name(vehicle_id: str) -> str:
    safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in vehicle_id)
    return f"vehicle_{safe}.csv"


def write_report(result: RunResult, out_dir) -> dict[str, Path]:
    """Write summary JSON, per-vehicle CSVs, and the hub pool log.

    Returns a mapping of logical names ("summary", "pool_log", one per
    vehicle id) to the written paths.
    """
    out = Path(out_dir)
    series = result.series
    paths: dict[str, Path] = {}
    try:
        out.mkdir(parents=True, exist_ok=True)
        summary = out / SUMMARY_NAME
        summary.write_bytes(report_json_bytes(result))
        paths["summary"] = summary
        for i, vid in enumerate(series.vehicle_ids):
            path = out / vehicle_csv_name(vid)
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(VEHICLE_CSV_HEADER)
                for k in range(series.times.shape[0]):
                    gap = repr(float(series.gaps[k, i - 1])) if i > 0 else ""
                    writer.writerow([repr(float(series.times[k])),
                                     repr(float(series.speeds[k, i])),
                                     repr(float(series.arcs[k, i])),
                                     gap])
            paths[vid] = path
    except OSError as exc:
        raise IoFailure(f"cannot write report to {out}: {exc}") from None
    if result.hub is not None:
        pool_log = out / POOL_LOG_NAME
        result.hub.export_pool_log(pool_log)
        paths["pool_log"] = pool_log
    return paths
