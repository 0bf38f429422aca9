"""Value types shared by every other module: frames, vehicles, track."""

from .frames import (
    DEFAULT_PHYSICAL_SCALE,
    Frame,
    FrameTransform,
    default_transforms,
    normalize_heading,
)
from .track import (
    Track,
    arc_gap,
    load_track,
    signed_arc_delta,
    signed_gap,
    stadium_track,
)
from .vehicle import (
    ControlInstruction,
    Pose,
    VehicleKind,
    VehicleRole,
    VehicleSpec,
    VehicleState,
    bicycle_step,
    from_unified,
    instruction_to_unified,
    native_frame,
    state_from_unified,
    to_unified,
)

__all__ = [
    "DEFAULT_PHYSICAL_SCALE",
    "Frame",
    "FrameTransform",
    "default_transforms",
    "normalize_heading",
    "Track",
    "arc_gap",
    "load_track",
    "signed_arc_delta",
    "signed_gap",
    "stadium_track",
    "ControlInstruction",
    "Pose",
    "VehicleKind",
    "VehicleRole",
    "VehicleSpec",
    "VehicleState",
    "bicycle_step",
    "from_unified",
    "instruction_to_unified",
    "native_frame",
    "state_from_unified",
    "to_unified",
]
