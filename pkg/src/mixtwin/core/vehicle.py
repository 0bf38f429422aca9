"""Vehicle value types, frame conversion, and the kinematic bicycle step.

All value types are frozen; a simulation step produces a new state. The
motion model is a rear-axle kinematic bicycle with a first-order speed
actuator, which is enough to reproduce platoon-level longitudinal dynamics
without a tire model.
"""

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional

from ..errors import FrameMismatch, NonPositiveDt
from .frames import Frame, FrameTransform, normalize_heading


class VehicleKind(str, enum.Enum):
    EMULATED_PHYSICAL = "EmulatedPhysical"
    VIRTUAL = "Virtual"


class VehicleRole(str, enum.Enum):
    HEAD = "Head"
    CAV = "CAV"
    HDV = "HDV"


def native_frame(kind: VehicleKind) -> Frame:
    """Frame a vehicle of this kind publishes its raw state in."""
    if kind == VehicleKind.EMULATED_PHYSICAL:
        return Frame.PHYSICAL
    return Frame.VIRTUAL


@dataclass(frozen=True)
class Pose:
    x: float  # m
    y: float  # m
    heading: float  # rad, wrapped to (-pi, pi]

    def __post_init__(self):
        object.__setattr__(self, "heading", normalize_heading(self.heading))


@dataclass(frozen=True)
class VehicleSpec:
    """Static description of one vehicle, full-scale units."""

    vehicle_id: str
    kind: VehicleKind
    role: VehicleRole
    body_length: float = 4.6  # m
    wheelbase: float = 2.6  # m
    max_speed: float = 30.0 / 3.6  # m/s
    max_accel: float = 2.0  # m/s^2
    max_decel: float = 4.0  # m/s^2, magnitude
    max_front_wheel_angle: float = 0.52  # rad
    actuator_tau: float = 0.15  # s, first-order speed tracking constant

    def __post_init__(self):
        if self.body_length <= 0:
            raise ValueError("body_length must be > 0")
        if not 0 < self.wheelbase < self.body_length:
            raise ValueError("wheelbase must be in (0, body_length)")
        if self.max_speed <= 0 or self.max_accel <= 0 or self.max_decel <= 0:
            raise ValueError("speed and acceleration limits must be > 0")
        if self.max_front_wheel_angle <= 0:
            raise ValueError("max_front_wheel_angle must be > 0")
        if self.actuator_tau < 0:
            raise ValueError("actuator_tau must be >= 0")


@dataclass(frozen=True)
class VehicleState:
    """Snapshot of one vehicle in one frame."""

    vehicle_id: str
    frame: Frame
    pose: Pose
    speed: float  # m/s, >= 0
    acceleration: float = 0.0  # m/s^2
    front_wheel_angle: float = 0.0  # rad
    arc_position: Optional[float] = None  # m along track, None if not projected
    timestamp: float = 0.0  # s, sender clock
    seq: int = 0

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError(f"speed must be >= 0, got {self.speed}")


@dataclass(frozen=True)
class ControlInstruction:
    """One control sample from one source for one target vehicle."""

    target_vehicle_id: str
    desired_speed: float  # m/s, in source_frame units
    desired_front_wheel_angle: float = 0.0  # rad
    source_id: str = ""
    source_frame: Frame = Frame.UNIFIED
    timestamp: float = 0.0  # s
    seq: int = 0


def to_unified(state: VehicleState, transform: FrameTransform) -> VehicleState:
    """Rescale a frame-local state into the unified frame."""
    transform.require(state.frame)
    s = transform.scale_to_unified
    return replace(
        state,
        frame=Frame.UNIFIED,
        pose=Pose(
            state.pose.x * s + transform.offset_x,
            state.pose.y * s + transform.offset_y,
            state.pose.heading,
        ),
        speed=state.speed * s,
        acceleration=state.acceleration * s,
        arc_position=None if state.arc_position is None else state.arc_position * s,
    )


def state_from_unified(state: VehicleState, transform: FrameTransform) -> VehicleState:
    """Inverse of to_unified: express a unified state in a local frame."""
    if state.frame != Frame.UNIFIED:
        raise FrameMismatch(f"expected Unified frame data, got {state.frame.value}")
    s = transform.scale_to_unified
    return replace(
        state,
        frame=transform.frame,
        pose=Pose(
            (state.pose.x - transform.offset_x) / s,
            (state.pose.y - transform.offset_y) / s,
            state.pose.heading,
        ),
        speed=state.speed / s,
        acceleration=state.acceleration / s,
        arc_position=None if state.arc_position is None else state.arc_position / s,
    )


def instruction_to_unified(instr: ControlInstruction, transform: FrameTransform) -> ControlInstruction:
    """Rescale an instruction authored in a local frame into unified units."""
    transform.require(instr.source_frame)
    return replace(
        instr,
        source_frame=Frame.UNIFIED,
        desired_speed=instr.desired_speed * transform.scale_to_unified,
    )


def from_unified(instr: ControlInstruction, transform: FrameTransform) -> ControlInstruction:
    """Rescale a unified-frame instruction into a vehicle's local frame."""
    if instr.source_frame != Frame.UNIFIED:
        raise FrameMismatch(f"expected Unified frame data, got {instr.source_frame.value}")
    return replace(
        instr,
        source_frame=transform.frame,
        desired_speed=instr.desired_speed / transform.scale_to_unified,
    )


def bicycle_step(
    state: VehicleState,
    spec: VehicleSpec,
    command: ControlInstruction,
    dt: float,
) -> VehicleState:
    """Advance one vehicle by dt under a speed + steering command.

    Pose advances with the pre-step speed (a stopped vehicle never moves,
    whatever the command says), then speed relaxes toward the commanded
    value through a first-order actuator and the vehicle spec's rate limits.
    """
    if dt <= 0:
        raise NonPositiveDt(f"dt must be > 0, got {dt}")
    if dt > 0.1:
        raise NonPositiveDt(f"dt above the 0.1 s model validity cap: {dt}")

    delta = min(max(command.desired_front_wheel_angle, -spec.max_front_wheel_angle), spec.max_front_wheel_angle)
    v = state.speed

    x = state.pose.x + v * math.cos(state.pose.heading) * dt
    y = state.pose.y + v * math.sin(state.pose.heading) * dt
    heading = state.pose.heading + v / spec.wheelbase * math.tan(delta) * dt

    target = min(max(command.desired_speed, 0.0), spec.max_speed)
    alpha = 1.0 if spec.actuator_tau == 0.0 else 1.0 - math.exp(-dt / spec.actuator_tau)
    dv = (target - v) * alpha
    dv = min(max(dv, -spec.max_decel * dt), spec.max_accel * dt)
    speed = min(max(v + dv, 0.0), spec.max_speed)

    return replace(
        state,
        pose=Pose(x, y, heading),
        speed=speed,
        acceleration=(speed - v) / dt,
        front_wheel_angle=delta,
        arc_position=None,
        timestamp=state.timestamp + dt,
        seq=state.seq + 1,
    )
