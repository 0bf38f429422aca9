"""Shared experiment assembly: placement, per-vehicle construction, phases.

Lockstep runs and distributed processes must agree on where vehicles start,
which controller drives which vehicle, and how the settle gate and the
perturbation trigger behave. This module is that single source of truth:
the lockstep harness calls it in-process, while the agent and controller
launchers call it from separate processes and still land on identical
placements, seeds, and phase arithmetic.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..agents import TriggerLatch, VehicleAgent
from ..controllers import (
    CaccSource,
    InstructionSource,
    PurePursuitSource,
    ScriptedSource,
)
from ..controllers.sources import HeadProfileSource
from ..core import (
    Frame,
    FrameTransform,
    Pose,
    Track,
    VehicleState,
    arc_gap,
    native_frame,
    signed_arc_delta,
    state_from_unified,
)
from ..errors import SettlingTimeout
from .spec import ScenarioSpec

logger = logging.getLogger(__name__)


def initial_unified_states(scenario: ScenarioSpec, track: Track) -> list[VehicleState]:
    """Starting state per platoon entry: head at point A, followers behind."""
    head_arc = track.named_point_arc("A")
    lap = track.lap_length
    out = []
    for i, entry in enumerate(scenario.platoon):
        arc = (head_arc - i * scenario.initial_gap) % lap
        x, y = track.point_at(arc)
        out.append(VehicleState(
            entry.spec.vehicle_id, Frame.UNIFIED,
            Pose(x, y, track.heading_at(arc)),
            speed=scenario.base_speed, arc_position=arc))
    return out


def vehicle_seed(scenario: ScenarioSpec, index: int) -> np.random.SeedSequence:
    """Per-vehicle seed stream, identical no matter which process asks."""
    return np.random.SeedSequence(scenario.seed).spawn(len(scenario.platoon))[index]


def build_agent(
    scenario: ScenarioSpec,
    index: int,
    track: Track,
    transforms: dict[Frame, FrameTransform],
    dt: float,
) -> VehicleAgent:
    """The emulated vehicle for one platoon entry, in its native frame."""
    entry = scenario.platoon[index]
    unified = initial_unified_states(scenario, track)[index]
    transform = transforms[native_frame(entry.spec.kind)]
    return VehicleAgent(
        entry.spec, transform,
        state_from_unified(unified, transform),
        imperfections=entry.imperfections,
        rng=np.random.default_rng(vehicle_seed(scenario, index)),
        dt=dt)


def build_longitudinal_source(
    scenario: ScenarioSpec,
    index: int,
    track: Track,
    dt: float,
) -> InstructionSource:
    """Speed controller for one platoon entry: profile, CACC, or scripted."""
    entry = scenario.platoon[index]
    vid = entry.spec.vehicle_id
    if index == 0:
        return HeadProfileSource(vid, scenario.head_profile())
    predecessor = scenario.platoon[index - 1].spec.vehicle_id
    head = scenario.platoon[0].spec.vehicle_id
    if entry.source_kind == "CACC":
        return CaccSource(vid, predecessor, head,
                          entry.cacc or scenario.cacc, track)
    # Scripted, or a Human row realized by the scripted stand-in
    return ScriptedSource(vid, predecessor, entry.driver, track, dt)


def build_lateral_source(scenario: ScenarioSpec, index: int,
                         track: Track) -> PurePursuitSource:
    """Lane keeper for one platoon entry."""
    entry = scenario.platoon[index]
    return PurePursuitSource(entry.spec.vehicle_id, scenario.lateral, track,
                             entry.spec.max_front_wheel_angle)


def pair_distance(follower: VehicleState, leader: VehicleState,
                  lap_length: float, straight_line: bool) -> float:
    """Centroid gap between two located states, arc or chord."""
    if straight_line:
        dx = leader.pose.x - follower.pose.x
        dy = leader.pose.y - follower.pose.y
        return float(np.hypot(dx, dy))
    return arc_gap(follower.arc_position, leader.arc_position, lap_length)


@dataclass
class TrackerUpdate:
    """What one pool snapshot did to the experiment phases."""

    recorded: bool = False
    settled_now: bool = False
    triggered_now: bool = False


class ExperimentTracker:
    """Settle gate, trigger latch, head odometer, and series recorder.

    Feed it one unified pool snapshot per tick. It answers the questions
    every conductor asks: has the platoon settled, did the head just cross
    the trigger point, and has it travelled the requested number of laps.
    Identical logic serves the lockstep harness and the distributed
    observer, so their phase timings agree tick for tick.
    """

    def __init__(self, scenario: ScenarioSpec, track: Track, dt: float):
        self.scenario = scenario
        self.track = track
        self.dt = dt
        self.ids = [e.spec.vehicle_id for e in scenario.platoon]
        self._d_des = scenario.cacc.d_des
        self._band = scenario.settle.band_frac * self._d_des
        self._hold_ticks = max(1, round(scenario.settle.hold_s / dt))
        self._goal_travel = scenario.laps * track.lap_length
        self._latch = TriggerLatch(track, scenario.perturbation.trigger_point,
                                   scenario.perturbation.trigger_lap)

        self.times: list[float] = []
        self.speed_rows: list[list[float]] = []
        self.arc_rows: list[list[float]] = []
        self.gap_rows: list[list[float]] = []
        self.settle_time: Optional[float] = None
        self.trigger_time: Optional[float] = None
        self.travel = 0.0
        self._settle_run = 0
        self._prev_head_arc: Optional[float] = None

    def update(self, t: float, pool: dict[str, VehicleState]) -> TrackerUpdate:
        """Advance the phase machinery by one snapshot at experiment time t."""
        out = TrackerUpdate()
        if any(vid not in pool for vid in self.ids):
            # a partially populated pool (agents still joining) records nothing
            self._check_timeout(t)
            return out

        scn = self.scenario
        lap = self.track.lap_length
        entries = [pool[v] for v in self.ids]
        arcs = [e.arc_position for e in entries]
        self.times.append(t)
        self.speed_rows.append([e.speed for e in entries])
        self.arc_rows.append(arcs)
        gaps = [pair_distance(entries[i + 1], entries[i], lap,
                              scn.straight_line_gaps)
                for i in range(len(entries) - 1)]
        self.gap_rows.append(gaps)
        out.recorded = True

        if self.settle_time is None:
            in_band = all(abs(g - self._d_des) <= self._band for g in gaps)
            self._settle_run = self._settle_run + 1 if in_band else 0
            if self._settle_run >= self._hold_ticks:
                self.settle_time = t
                self._latch.arm(arcs[0])
                self._prev_head_arc = arcs[0]
                out.settled_now = True
                logger.info("platoon settled at t=%.2f s", t)
            else:
                self._check_timeout(t)
        else:
            # signed step so zero-mean position noise cancels out of the
            # odometer instead of wrapping into spurious full laps
            self.travel += signed_arc_delta(self._prev_head_arc, arcs[0], lap)
            self._prev_head_arc = arcs[0]
            if self.trigger_time is None and self._latch.update(arcs[0]):
                self.trigger_time = t
                out.triggered_now = True
                logger.info("perturbation triggered at t=%.2f s", t)
        return out

    def _check_timeout(self, t: float) -> None:
        scn = self.scenario
        if t >= scn.settle.timeout_s:
            raise SettlingTimeout(
                f"gaps not within {self._band:.2f} m of {self._d_des:.2f} m for "
                f"{scn.settle.hold_s:.0f} s inside {scn.settle.timeout_s:.0f} s")

    @property
    def done(self) -> bool:
        return self.settle_time is not None and self.travel >= self._goal_travel

    @property
    def laps_completed(self) -> float:
        return self.travel / self.track.lap_length
