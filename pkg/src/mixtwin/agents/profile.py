"""Head-vehicle speed profile and the perturbation trigger latch.

The head cruises at a base speed; when it first crosses the configured
track point on the configured lap, a perturbation segment plays out and
the profile returns to base afterward.
"""

import math
from dataclasses import dataclass
from typing import Optional, Union

from ..core import Track, VehicleState, arc_gap, signed_arc_delta

KMH = 1.0 / 3.6

# 10.08 km/h cruise; perturbation constants in full-scale m/s
BASE_SPEED = 10.08 * KMH  # 2.8 m/s
HALF_SINE_AMPLITUDE = 3.02 * KMH  # 0.8389 m/s
BRAKE_TARGET = 1.01 * KMH  # 0.28056 m/s


@dataclass(frozen=True)
class HalfSine:
    """One positive half sine wave on top of the base speed."""

    duration: float = 3.5  # s
    amplitude: float = HALF_SINE_AMPLITUDE  # m/s

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be > 0")

    def total(self, base: float) -> float:
        return self.duration

    def value(self, base: float, u: float) -> float:
        return base + self.amplitude * math.sin(math.pi * u / self.duration)


@dataclass(frozen=True)
class Brake:
    """Constant-rate deceleration, a hold, then a linear recovery ramp."""

    target: float = BRAKE_TARGET  # m/s
    rate: float = 0.28  # m/s^2
    hold: float = 20.0  # s
    recover: float = 12.0  # s

    def __post_init__(self):
        if self.target < 0 or self.rate <= 0 or self.hold <= 0 or self.recover <= 0:
            raise ValueError("brake phases must be positive with target >= 0")

    def decel_time(self, base: float) -> float:
        return (base - self.target) / self.rate

    def total(self, base: float) -> float:
        return self.decel_time(base) + self.hold + self.recover

    def value(self, base: float, u: float) -> float:
        t_d = self.decel_time(base)
        if u < t_d:
            return max(self.target, base - self.rate * u)
        if u < t_d + self.hold:
            return self.target
        return self.target + (base - self.target) * (u - t_d - self.hold) / self.recover


Segment = Union[HalfSine, Brake]


@dataclass(frozen=True)
class HeadProfile:
    base_speed: float = BASE_SPEED
    segments: tuple[Segment, ...] = ()

    def __post_init__(self):
        if self.base_speed < 0:
            raise ValueError("base_speed must be >= 0")
        for seg in self.segments:
            if isinstance(seg, Brake) and seg.target >= self.base_speed:
                raise ValueError("brake target must be below base speed")


def head_speed(elapsed: float, profile: HeadProfile) -> float:
    """Profile speed at `elapsed` seconds since the trigger (< 0: not yet)."""
    if elapsed < 0:
        return profile.base_speed
    u = elapsed
    for seg in profile.segments:
        span = seg.total(profile.base_speed)
        if u < span:
            return max(0.0, seg.value(profile.base_speed, u))
        u -= span
    return profile.base_speed


class TriggerLatch:
    """Fires exactly once when cumulative travel reaches a named point.

    Crossing is detected on cumulative arc progress, so a coarse tick that
    jumps past the point still fires, and later laps never re-fire.
    """

    def __init__(self, track: Track, point: str, lap: int = 1):
        if lap < 1:
            raise ValueError("trigger lap counts from 1")
        self.track = track
        self.point_arc = track.named_point_arc(point)
        self.lap = lap
        self._needed: Optional[float] = None
        self._prev: Optional[float] = None
        self._travel = 0.0
        self.fired = False

    @property
    def armed(self) -> bool:
        return self._needed is not None

    def arm(self, current_arc: float) -> None:
        """Start counting travel from the head's current arc position."""
        lap_len = self.track.lap_length
        self._needed = (arc_gap(current_arc, self.point_arc, lap_len)
                        + (self.lap - 1) * lap_len)
        self._prev = current_arc
        self._travel = 0.0

    def update(self, arc: float) -> bool:
        """Feed the head's latest arc position; True exactly once, on crossing."""
        if self._needed is None or self.fired:
            if self._prev is not None:
                self._prev = arc
            return False
        # signed shortest step: position noise that jitters the projected
        # arc backward must not wrap into almost a full lap of progress
        self._travel += signed_arc_delta(self._prev, arc, self.track.lap_length)
        self._prev = arc
        if self._travel >= self._needed:
            self.fired = True
            return True
        return False

    def check(self, state: VehicleState) -> bool:
        """update() taking a unified state with arc_position set."""
        if state.arc_position is None:
            raise ValueError("trigger check needs a located state")
        return self.update(state.arc_position)
