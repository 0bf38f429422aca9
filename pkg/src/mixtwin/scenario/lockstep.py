"""Deterministic single-clock experiment runner.

One virtual clock steps every component in a fixed order each tick:

    agents integrate -> publish -> hub ingest -> hub broadcast -> record ->
    settle/trigger bookkeeping -> safety interlock -> control sources ->
    hub routing -> dispatch delivery -> watchdog sweep

Dispatches land on the agents one tick after the states they were computed
from, mirroring the command path of the live system. Nothing here shares
mutable state with the agents; all coupling goes through the hub.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..agents.vehicle_agent import VehicleAgent
from ..controllers.sources import HeadProfileSource, InstructionSource
from ..core import VehicleKind, arc_gap, default_transforms
from ..errors import ConfigError, NoPerturbation
from ..hub.core import Channel, HubCore
from .assembly import (
    ExperimentTracker,
    build_agent,
    build_lateral_source,
    build_longitudinal_source,
)
from .metrics import CollisionEvent, amplification_ratios, detect_collisions, min_gaps
from .spec import ScenarioSpec

logger = logging.getLogger(__name__)

# extra horizon beyond the nominal schedule before a run is cut off (s);
# covers travel lost to the perturbation plus safety-interlock standstills
HORIZON_MARGIN_S = 120.0


@dataclass
class RunSeries:
    """Tick-rate recording of the unified pool, in platoon order."""

    vehicle_ids: list[str]
    times: np.ndarray  # (n,)
    speeds: np.ndarray  # (n, m) m/s
    arcs: np.ndarray  # (n, m) m along track
    gaps: np.ndarray  # (n, m-1) m, column j = follower j+1 to leader j
    pair_ids: list[tuple[str, str]]  # (follower, leader) per gap column
    pair_virtual: list[bool]


@dataclass
class RunResult:
    scenario: ScenarioSpec
    series: RunSeries
    settle_time: float
    trigger_time: Optional[float]
    collisions: list[CollisionEvent]
    amplification: Optional[dict[str, float]]
    min_gaps: dict[str, float]
    peak_speeds: dict[str, float]
    laps_completed: float
    tick_count: int
    sim_time: float
    emergency_stops: list[tuple[str, float]]
    counters: dict[str, int]
    hub: Optional[HubCore] = field(repr=False, default=None)


def build_result(
    tracker: ExperimentTracker,
    stops: list[tuple[str, float]],
    counters: dict[str, int],
    hub: Optional[HubCore],
) -> RunResult:
    """Assemble the report payload from a finished tracker."""
    scn = tracker.scenario
    ids = tracker.ids
    m = len(ids)
    kinds = [e.spec.kind for e in scn.platoon]
    times_a = np.asarray(tracker.times)
    speeds_a = (np.asarray(tracker.speed_rows) if tracker.times
                else np.empty((0, m)))
    arcs_a = (np.asarray(tracker.arc_rows) if tracker.times
              else np.empty((0, m)))
    gaps_a = (np.asarray(tracker.gap_rows) if m > 1 and tracker.times
              else np.empty((len(tracker.times), max(0, m - 1))))
    pair_ids = [(ids[i + 1], ids[i]) for i in range(m - 1)]
    pair_virtual = [kinds[i + 1] == VehicleKind.VIRTUAL
                    or kinds[i] == VehicleKind.VIRTUAL
                    for i in range(m - 1)]
    series = RunSeries(list(ids), times_a, speeds_a, arcs_a, gaps_a,
                       pair_ids, pair_virtual)

    collisions = detect_collisions(times_a, gaps_a, scn.collision_threshold,
                                   pair_ids, pair_virtual)
    try:
        amplification = amplification_ratios(times_a, speeds_a, ids,
                                             scn.base_speed,
                                             tracker.trigger_time)
    except NoPerturbation:
        amplification = None
    return RunResult(
        scenario=scn,
        series=series,
        settle_time=tracker.settle_time,
        trigger_time=tracker.trigger_time,
        collisions=collisions,
        amplification=amplification,
        min_gaps=min_gaps(gaps_a, pair_ids),
        peak_speeds={vid: float(speeds_a[:, i].max()) if len(times_a) else 0.0
                     for i, vid in enumerate(ids)},
        laps_completed=tracker.laps_completed,
        tick_count=len(tracker.times),
        sim_time=tracker.times[-1] if tracker.times else 0.0,
        emergency_stops=stops,
        counters=counters,
        hub=hub,
    )


class LockstepRun:
    """Assemble and execute one scenario under the lockstep clock."""

    def __init__(self, scenario: ScenarioSpec):
        problems = scenario.validate()
        if problems:
            raise ConfigError("scenario invalid: " + "; ".join(problems))
        self.scenario = scenario
        self.dt = scenario.dt
        self.track = scenario.build_track()
        self.transforms = default_transforms()
        self.hub = HubCore(self.track, transforms=self.transforms,
                           tick_hz=scenario.tick_hz)

        self.ids = [e.spec.vehicle_id for e in scenario.platoon]

        self.agents: dict[str, VehicleAgent] = {}
        for i, entry in enumerate(scenario.platoon):
            self.agents[entry.spec.vehicle_id] = build_agent(
                scenario, i, self.track, self.transforms, self.dt)
            self.hub.register_vehicle(entry.spec)

        self.sources: list[InstructionSource] = []
        for i, entry in enumerate(scenario.platoon):
            vid = entry.spec.vehicle_id
            src = build_longitudinal_source(scenario, i, self.track, self.dt)
            self.hub.map_logical_source(src.source_id, vid, Channel.LONGITUDINAL)
            self.sources.append(src)
        self.head_source: HeadProfileSource = self.sources[0]
        for i, entry in enumerate(scenario.platoon):
            lat = build_lateral_source(scenario, i, self.track)
            self.hub.map_logical_source(lat.source_id, entry.spec.vehicle_id,
                                        Channel.LATERAL)
            self.sources.append(lat)

    def run(self) -> RunResult:
        scn = self.scenario
        dt = self.dt
        lap = self.track.lap_length
        m = len(self.ids)
        kinds = [e.spec.kind for e in scn.platoon]
        physical = [k == VehicleKind.EMULATED_PHYSICAL for k in kinds]
        trip_gap = scn.collision_threshold + 0.5
        tracker = ExperimentTracker(scn, self.track, dt)
        horizon_s = (scn.settle.timeout_s + scn.laps * lap / scn.base_speed
                     + scn.perturbation.segment.total(scn.base_speed)
                     + HORIZON_MARGIN_S)
        max_ticks = int(math.ceil(horizon_s / dt))
        stops: list[tuple[str, float]] = []

        for k in range(1, max_ticks + 1):
            t = k * dt

            for vid in self.ids:
                raw = self.agents[vid].step()
                if raw is not None:
                    self.hub.ingest_state(raw, t)

            _, _, states = self.hub.broadcast_pool(t)
            pool = {s.vehicle_id: s for s in states}

            phase = tracker.update(t, pool)
            if phase.triggered_now:
                self.head_source.set_trigger(t)

            if scn.interlock and m > 1:
                arcs = [pool[v].arc_position for v in self.ids]
                for i in range(m):
                    if not physical[i] or self.agents[self.ids[i]].stopped:
                        continue
                    ahead = min(arc_gap(arcs[i], arcs[j], lap)
                                for j in range(m) if j != i)
                    if ahead < trip_gap:
                        self.agents[self.ids[i]].emergency_stop(True)
                        stops.append((self.ids[i], t))
                        logger.warning("interlock halted %s at t=%.2f s "
                                       "(gap %.2f m)", self.ids[i], t, ahead)

            dispatches = []
            for src in self.sources:
                instr = src.step(pool, t, dt)
                if instr is None:
                    continue
                dispatch = self.hub.route_instruction(instr, t)
                if dispatch is not None:
                    dispatches.append(dispatch)
            dispatches.extend(self.hub.watchdog_sweep(t))
            for dispatch in dispatches:
                self.agents[dispatch.target_vehicle_id].deliver(dispatch)

            if tracker.done:
                break

        return build_result(tracker, stops,
                            dataclasses.asdict(self.hub.counters), self.hub)


def run_scenario(scenario: ScenarioSpec) -> RunResult:
    """Build and execute one lockstep run of the scenario."""
    return LockstepRun(scenario).run()
