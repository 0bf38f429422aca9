"""Vehicle agents: virtual and emulated-physical platforms, head profile."""

from .imperfection import ImperfectionModel, perfect, physical_default
from .profile import (
    BASE_SPEED,
    BRAKE_TARGET,
    HALF_SINE_AMPLITUDE,
    Brake,
    HalfSine,
    HeadProfile,
    TriggerLatch,
    head_speed,
)
from .vehicle_agent import VehicleAgent, scale_spec

__all__ = [
    "ImperfectionModel",
    "perfect",
    "physical_default",
    "BASE_SPEED",
    "BRAKE_TARGET",
    "HALF_SINE_AMPLITUDE",
    "Brake",
    "HalfSine",
    "HeadProfile",
    "TriggerLatch",
    "head_speed",
    "VehicleAgent",
    "scale_spec",
]
