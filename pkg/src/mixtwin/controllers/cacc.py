"""CACC longitudinal law: spacing + leader/predecessor speed feedback.

The desired acceleration for follower i is

    a_i = k_p (gap_i - d_des) + k_v1 (v_head - v_i) + k_v2 (v_pred - v_i)

clamped to [a_min, a_max], then converted to the velocity command the
vehicles actually consume: v_cmd = max(0, v_prev + a dt).
"""

from dataclasses import dataclass
from typing import Optional

from ..core import Track, VehicleState, signed_gap
from ..errors import MissingPredecessor

# Defaults validated against the lockstep string-stability suite: a platoon
# of five followers behind the half-sine head profile settles inside the
# 60 s gate and shows amplification ratios <= 1.001 down the chain. The
# speed-command conversion plus the first-order actuator scale the loop
# gain by roughly (1 - exp(-dt/tau))/dt, so usable gains sit well above
# what the continuous-time law alone would suggest.
DEFAULT_K_P = 2.4  # 1/s^2
DEFAULT_K_V1 = 4.0  # 1/s
DEFAULT_K_V2 = 4.4  # 1/s


@dataclass(frozen=True)
class CaccParams:
    k_p: float = DEFAULT_K_P
    k_v1: float = DEFAULT_K_V1
    k_v2: float = DEFAULT_K_V2
    d_des: float = 20.0  # m
    a_min: float = -2.0  # m/s^2
    a_max: float = 2.0  # m/s^2

    def __post_init__(self):
        if self.k_p <= 0 or self.k_v1 <= 0 or self.k_v2 <= 0:
            raise ValueError("feedback gains must be > 0")
        if not self.a_min < 0 < self.a_max:
            raise ValueError("need a_min < 0 < a_max")
        if self.d_des <= 0:
            raise ValueError("d_des must be > 0")


def cacc_accel(
    self_state: VehicleState,
    predecessor: Optional[VehicleState],
    head: VehicleState,
    params: CaccParams,
    track: Track,
) -> float:
    """Desired acceleration for one follower, clamped to the comfort range."""
    if predecessor is None:
        raise MissingPredecessor(f"{self_state.vehicle_id} has no predecessor state")
    gap = signed_gap(self_state, predecessor, track)
    a = (params.k_p * (gap - params.d_des)
         + params.k_v1 * (head.speed - self_state.speed)
         + params.k_v2 * (predecessor.speed - self_state.speed))
    return min(max(a, params.a_min), params.a_max)


def accel_to_speed_cmd(a: float, v_prev: float, dt: float) -> float:
    """Velocity command from a desired acceleration, floored at standstill."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if v_prev < 0:
        raise ValueError(f"v_prev must be >= 0, got {v_prev}")
    return max(0.0, v_prev + a * dt)
