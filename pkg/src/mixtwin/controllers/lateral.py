"""Lane keeping on the loop: pure pursuit with speed-scheduled lookahead."""

import math
from dataclasses import dataclass

from ..core import Track, VehicleState, normalize_heading


@dataclass(frozen=True)
class LateralParams:
    lookahead_base: float = 4.0  # m
    lookahead_gain: float = 0.5  # s; lookahead = base + gain * speed
    wheelbase: float = 2.6  # m

    def __post_init__(self):
        if self.lookahead_base <= 0:
            raise ValueError("lookahead_base must be > 0")
        if self.lookahead_gain < 0:
            raise ValueError("lookahead_gain must be >= 0")
        if self.wheelbase <= 0:
            raise ValueError("wheelbase must be > 0")


def lateral_angle(
    state: VehicleState,
    track: Track,
    params: LateralParams,
    max_angle: float = 0.52,
) -> float:
    """Front wheel angle chasing the track point one lookahead ahead."""
    arc = state.arc_position
    if arc is None:
        arc, _ = track.project(state.pose.x, state.pose.y)
    lookahead = params.lookahead_base + params.lookahead_gain * state.speed
    tx, ty = track.point_at(arc + lookahead)
    alpha = normalize_heading(
        math.atan2(ty - state.pose.y, tx - state.pose.x) - state.pose.heading)
    delta = math.atan(2.0 * params.wheelbase * math.sin(alpha) / lookahead)
    return min(max(delta, -max_angle), max_angle)
