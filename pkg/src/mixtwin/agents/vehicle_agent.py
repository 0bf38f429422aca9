"""Vehicle agent: owns one vehicle's true state and publishes reports.

The agent integrates in its own frame, in its own units (a 1:14 miniature
really does drive at centimeter scale), holds the last dispatched command
between updates, and publishes noise-injected reports per its imperfection
model. An emergency-stop input lets a supervisor halt it regardless of the
commanded speed.
"""

from dataclasses import replace
from typing import Optional

import numpy as np

from ..core import (
    ControlInstruction,
    Frame,
    FrameTransform,
    Pose,
    VehicleSpec,
    VehicleState,
    bicycle_step,
)
from .imperfection import ImperfectionModel


def scale_spec(spec: VehicleSpec, scale_to_unified: float) -> VehicleSpec:
    """Express a full-scale spec in a frame with the given scale.

    Lengths and speeds divide by the scale; angles and time constants are
    scale-free, so steering limits and the actuator constant carry over.
    """
    s = scale_to_unified
    return replace(
        spec,
        body_length=spec.body_length / s,
        wheelbase=spec.wheelbase / s,
        max_speed=spec.max_speed / s,
        max_accel=spec.max_accel / s,
        max_decel=spec.max_decel / s,
    )


class VehicleAgent:
    """One vehicle process: integrate, obey dispatches, publish state."""

    def __init__(
        self,
        spec: VehicleSpec,
        transform: FrameTransform,
        initial_state: VehicleState,
        imperfections: Optional[ImperfectionModel] = None,
        rng: Optional[np.random.Generator] = None,
        dt: float = 0.02,
    ):
        imp = imperfections or ImperfectionModel()
        if initial_state.frame != transform.frame:
            raise ValueError(
                f"initial state frame {initial_state.frame.value} does not match "
                f"transform frame {transform.frame.value}")
        if rng is None:
            rng = np.random.default_rng(imp.rng_seed)

        self.spec = spec
        self.frame: Frame = transform.frame
        self.imperfections = imp
        self._rng = rng
        self._dt = dt

        local = scale_spec(spec, transform.scale_to_unified)
        if imp.actuation_lag_tau is not None:
            local = replace(local, actuator_tau=imp.actuation_lag_tau)
        self._local_spec = local

        self._true = initial_state
        # until the first dispatch arrives, hold the initial motion
        self._command = ControlInstruction(
            spec.vehicle_id, desired_speed=initial_state.speed,
            desired_front_wheel_angle=initial_state.front_wheel_angle,
            source_id="agent.init", source_frame=transform.frame)
        self._pending: Optional[ControlInstruction] = None
        self._stopped = False
        self._publish_every = max(1, round(1.0 / (imp.state_publish_hz * dt)))
        self._step_count = 0
        self._publish_seq = 0

    @property
    def vehicle_id(self) -> str:
        return self.spec.vehicle_id

    @property
    def true_state(self) -> VehicleState:
        return self._true

    @property
    def current_command(self) -> ControlInstruction:
        return self._command

    def deliver(self, command: ControlInstruction) -> None:
        """Accept a dispatched command (agent-frame units); applied next step."""
        self._pending = command

    def emergency_stop(self, active: bool) -> None:
        self._stopped = active

    @property
    def stopped(self) -> bool:
        return self._stopped

    def _effective(self, command: ControlInstruction) -> ControlInstruction:
        if self._stopped:
            return replace(command, desired_speed=0.0)
        return command

    def step(self, dt: Optional[float] = None) -> Optional[VehicleState]:
        """Advance one tick; returns the published report, if due this tick."""
        dt = self._dt if dt is None else dt
        if self._pending is not None:
            split = 0.0
            if self.imperfections.command_jitter > 0:
                split = float(self._rng.uniform(-self.imperfections.command_jitter,
                                                self.imperfections.command_jitter))
            split = min(max(split, 0.0), dt * 0.5)
            if split > 0.0:
                # the new command lands mid-tick; finish the old one first
                self._true = bicycle_step(self._true, self._local_spec,
                                          self._effective(self._command), split)
            self._command = self._pending
            self._pending = None
            self._true = bicycle_step(self._true, self._local_spec,
                                      self._effective(self._command), dt - split)
        else:
            self._true = bicycle_step(self._true, self._local_spec,
                                      self._effective(self._command), dt)

        self._step_count += 1
        if self._step_count % self._publish_every != 0:
            return None
        return self._publish()

    def _publish(self) -> VehicleState:
        imp = self.imperfections
        nx = float(self._rng.normal(0.0, imp.position_noise_sigma))
        ny = float(self._rng.normal(0.0, imp.position_noise_sigma))
        nv = float(self._rng.normal(0.0, imp.speed_noise_sigma))
        self._publish_seq += 1
        true = self._true
        return replace(
            true,
            pose=Pose(true.pose.x + nx, true.pose.y + ny, true.pose.heading),
            speed=max(0.0, true.speed + nv),
            seq=self._publish_seq,
        )
