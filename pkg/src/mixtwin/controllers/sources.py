"""Instruction-emitting wrappers around the control laws.

Each source computes against the latest pool snapshot and emits unified
frame instructions under its own source id and seq counter. One process
can host many sources (one per controlled vehicle).
"""

from typing import Optional

from ..agents.profile import HeadProfile, head_speed
from ..core import ControlInstruction, Frame, Track, VehicleState, arc_gap
from .cacc import CaccParams, accel_to_speed_cmd, cacc_accel
from .lateral import LateralParams, lateral_angle
from .scripted import ScriptedDriver, ScriptedDriverParams

Pool = dict[str, VehicleState]


class InstructionSource:
    """Base: identity, seq numbering, and the emit helper."""

    def __init__(self, source_id: str, vehicle_id: str):
        self.source_id = source_id
        self.vehicle_id = vehicle_id
        self._seq = 0

    def _emit(self, speed: float, angle: float, t: float) -> ControlInstruction:
        self._seq += 1
        return ControlInstruction(
            target_vehicle_id=self.vehicle_id,
            desired_speed=speed,
            desired_front_wheel_angle=angle,
            source_id=self.source_id,
            source_frame=Frame.UNIFIED,
            timestamp=t,
            seq=self._seq,
        )

    def step(self, pool: Pool, t: float, dt: float) -> Optional[ControlInstruction]:
        raise NotImplementedError


class CaccSource(InstructionSource):
    """Longitudinal CACC for one follower."""

    def __init__(self, vehicle_id: str, predecessor_id: str, head_id: str,
                 params: CaccParams, track: Track):
        super().__init__(f"cacc.{vehicle_id}", vehicle_id)
        self.predecessor_id = predecessor_id
        self.head_id = head_id
        self.params = params
        self.track = track

    def step(self, pool: Pool, t: float, dt: float) -> Optional[ControlInstruction]:
        me = pool.get(self.vehicle_id)
        pred = pool.get(self.predecessor_id)
        head = pool.get(self.head_id)
        if me is None or pred is None or head is None:
            return None
        a = cacc_accel(me, pred, head, self.params, self.track)
        return self._emit(accel_to_speed_cmd(a, me.speed, dt), 0.0, t)


class ScriptedSource(InstructionSource):
    """Longitudinal scripted human stand-in for one follower."""

    def __init__(self, vehicle_id: str, predecessor_id: str,
                 params: ScriptedDriverParams, track: Track, dt: float):
        super().__init__(f"driver.{vehicle_id}", vehicle_id)
        self.predecessor_id = predecessor_id
        self.track = track
        self._driver = ScriptedDriver(params, dt)

    def step(self, pool: Pool, t: float, dt: float) -> Optional[ControlInstruction]:
        me = pool.get(self.vehicle_id)
        pred = pool.get(self.predecessor_id)
        if me is None or pred is None:
            return None
        gap = arc_gap(me.arc_position, pred.arc_position, self.track.lap_length)
        return self._emit(self._driver.step(gap, me.speed), 0.0, t)


class PurePursuitSource(InstructionSource):
    """Lateral lane keeping for one vehicle."""

    def __init__(self, vehicle_id: str, params: LateralParams, track: Track,
                 max_angle: float = 0.52):
        super().__init__(f"lat.{vehicle_id}", vehicle_id)
        self.params = params
        self.track = track
        self.max_angle = max_angle

    def step(self, pool: Pool, t: float, dt: float) -> Optional[ControlInstruction]:
        me = pool.get(self.vehicle_id)
        if me is None:
            return None
        return self._emit(0.0, lateral_angle(me, self.track, self.params,
                                             self.max_angle), t)


class HeadProfileSource(InstructionSource):
    """Longitudinal profile executor for the head vehicle."""

    def __init__(self, vehicle_id: str, profile: HeadProfile):
        super().__init__("profile.head", vehicle_id)
        self.profile = profile
        self.trigger_time: Optional[float] = None

    def set_trigger(self, t: float) -> None:
        if self.trigger_time is None:
            self.trigger_time = t

    def step(self, pool: Pool, t: float, dt: float) -> Optional[ControlInstruction]:
        elapsed = -1.0 if self.trigger_time is None else t - self.trigger_time
        return self._emit(head_speed(elapsed, self.profile), 0.0, t)
