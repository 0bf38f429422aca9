"""Sensing and actuation imperfections for emulated-physical vehicles.

A purely virtual vehicle publishes its exact state; the emulated-physical
agent injects table-scale measurement noise, a slower speed actuator, and
command-application jitter so the unified pool shows the rougher texture a
real miniature exhibits.
"""

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class ImperfectionModel:
    position_noise_sigma: float = 0.0  # m, in the agent's own frame
    speed_noise_sigma: float = 0.0  # m/s, in the agent's own frame
    actuation_lag_tau: Optional[float] = None  # s; None defers to the vehicle spec
    command_jitter: float = 0.0  # s, uniform +/- around nominal application
    state_publish_hz: float = 50.0
    rng_seed: Optional[int] = None  # set when configured standalone; scenarios seed centrally

    def __post_init__(self):
        if self.position_noise_sigma < 0 or self.speed_noise_sigma < 0:
            raise ValueError("noise sigmas must be >= 0")
        if self.actuation_lag_tau is not None and self.actuation_lag_tau < 0:
            raise ValueError("actuation_lag_tau must be >= 0")
        if self.command_jitter < 0:
            raise ValueError("command_jitter must be >= 0")
        if self.state_publish_hz <= 0:
            raise ValueError("state_publish_hz must be > 0")


def perfect() -> ImperfectionModel:
    """No noise, no jitter; actuator constant taken from the vehicle spec."""
    return ImperfectionModel()


def physical_default() -> ImperfectionModel:
    """Default imperfections of the emulated miniature (frame-local units)."""
    return ImperfectionModel(
        position_noise_sigma=0.002,
        speed_noise_sigma=0.01,
        actuation_lag_tau=0.35,
        command_jitter=0.005,
        state_publish_hz=50.0,
    )
