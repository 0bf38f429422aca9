"""Control sources: CACC, lateral tracking, scripted human stand-in."""

from .cacc import CaccParams, accel_to_speed_cmd, cacc_accel
from .lateral import LateralParams, lateral_angle
from .scripted import (
    ScriptedDriver,
    ScriptedDriverParams,
    aggressive_params,
    briefed_params,
    default_params,
    desired_gap_speed,
    scripted_driver_speed_cmd,
)
from .sources import (
    CaccSource,
    HeadProfileSource,
    InstructionSource,
    PurePursuitSource,
    ScriptedSource,
)

__all__ = [
    "CaccParams",
    "accel_to_speed_cmd",
    "cacc_accel",
    "LateralParams",
    "lateral_angle",
    "ScriptedDriver",
    "ScriptedDriverParams",
    "aggressive_params",
    "briefed_params",
    "default_params",
    "desired_gap_speed",
    "scripted_driver_speed_cmd",
    "CaccSource",
    "HeadProfileSource",
    "InstructionSource",
    "PurePursuitSource",
    "ScriptedSource",
]
