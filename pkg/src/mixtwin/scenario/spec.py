"""Scenario description: platoon composition, perturbation, run settings.

Scenario files are JSON. Speeds cross the config boundary in km/h and are
converted here once; everything in memory is SI. Unknown keys are rejected
by name so a typo cannot silently disable a setting.
"""

import json
from dataclasses import dataclass, field
from typing import Any, Optional, Union

from ..agents.imperfection import ImperfectionModel, perfect, physical_default
from ..agents.profile import BASE_SPEED, Brake, HalfSine, HeadProfile
from ..controllers.cacc import CaccParams
from ..controllers.lateral import LateralParams
from ..controllers.scripted import (
    ScriptedDriverParams,
    aggressive_params,
    briefed_params,
    default_params,
)
from ..core import Track, VehicleKind, VehicleRole, VehicleSpec, load_track, stadium_track
from ..errors import ConfigError

KMH = 1.0 / 3.6

SOURCE_KINDS = ("HeadProfile", "CACC", "Scripted", "Human")


@dataclass(frozen=True)
class PerturbationSpec:
    segment: Union[HalfSine, Brake]
    trigger_point: str = "C"
    trigger_lap: int = 1

    @property
    def kind(self) -> str:
        return "HalfSine" if isinstance(self.segment, HalfSine) else "Brake"


@dataclass(frozen=True)
class SettleSpec:
    band_frac: float = 0.05  # of the desired spacing
    hold_s: float = 10.0
    timeout_s: float = 60.0

    def __post_init__(self):
        if not 0 < self.band_frac < 1:
            raise ValueError("band_frac must be in (0, 1)")
        if self.hold_s <= 0 or self.timeout_s <= 0:
            raise ValueError("settle durations must be > 0")


@dataclass(frozen=True)
class PlatoonEntry:
    spec: VehicleSpec
    source_kind: str
    imperfections: ImperfectionModel
    driver: Optional[ScriptedDriverParams] = None
    cacc: Optional[CaccParams] = None


@dataclass
class ScenarioSpec:
    name: str
    platoon: list[PlatoonEntry]
    perturbation: PerturbationSpec
    seed: int = 0
    tick_hz: float = 50.0
    laps: int = 4
    base_speed: float = BASE_SPEED
    collision_threshold: float = 4.6  # m
    interlock: bool = True
    initial_gap: float = 20.0  # m
    straight_line_gaps: bool = False
    cacc: CaccParams = field(default_factory=CaccParams)
    lateral: LateralParams = field(default_factory=LateralParams)
    settle: SettleSpec = field(default_factory=SettleSpec)
    track_file: Optional[str] = None

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_hz

    def build_track(self) -> Track:
        return load_track(self.track_file) if self.track_file else stadium_track()

    def head_profile(self) -> HeadProfile:
        return HeadProfile(self.base_speed, (self.perturbation.segment,))

    def validate(self) -> list[str]:
        """Every statically checkable invariant; empty list means clean."""
        problems = []
        if not self.platoon:
            problems.append("platoon is empty")
            return problems
        heads = [e for e in self.platoon if e.spec.role == VehicleRole.HEAD]
        if len(heads) != 1:
            problems.append(f"exactly one Head entry required, found {len(heads)}")
        elif self.platoon[0].spec.role != VehicleRole.HEAD:
            problems.append("the Head entry must be first in the platoon")
        if self.platoon and self.platoon[0].source_kind != "HeadProfile":
            problems.append("the head vehicle's source must be HeadProfile")
        for entry in self.platoon[1:]:
            if entry.source_kind == "HeadProfile":
                problems.append(
                    f"{entry.spec.vehicle_id}: HeadProfile source on a non-head vehicle")
        ids = [e.spec.vehicle_id for e in self.platoon]
        if len(set(ids)) != len(ids):
            problems.append("vehicle ids must be unique")
        if self.initial_gap < self.collision_threshold:
            problems.append(
                f"initial gap {self.initial_gap} below collision threshold "
                f"{self.collision_threshold}")
        if len(self.platoon) * self.initial_gap >= self.build_track().lap_length:
            problems.append("platoon does not fit on one lap at the initial gap")
        if self.laps < 1:
            problems.append("laps must be >= 1")
        if not 1 <= self.perturbation.trigger_lap <= self.laps:
            problems.append(
                f"trigger lap {self.perturbation.trigger_lap} outside 1..{self.laps}")
        seg = self.perturbation.segment
        if isinstance(seg, Brake) and seg.target >= self.base_speed:
            problems.append("brake target must be below base speed")
        for entry in self.platoon:
            if entry.source_kind not in SOURCE_KINDS:
                problems.append(
                    f"{entry.spec.vehicle_id}: unknown source kind {entry.source_kind!r}")
            if entry.spec.max_speed <= self.base_speed:
                problems.append(
                    f"{entry.spec.vehicle_id}: max_speed {entry.spec.max_speed:.2f} "
                    f"cannot sustain the base speed")
        return problems


# JSON parsing. Every helper names the offending field on failure.

def _take(obj: dict, path: str, allowed: dict[str, Any]) -> dict:
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown key {sorted(unknown)[0]!r}")
    out = dict(allowed)
    out.update(obj)
    return out


def _build(cls, kwargs, path: str):
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


_DRIVER_PRESETS = {
    "default": default_params,
    "aggressive": aggressive_params,
    "briefed": briefed_params,
}

_IMPERFECTION_PRESETS = {
    "none": perfect,
    "physical": physical_default,
}


def _parse_driver(raw, path: str) -> ScriptedDriverParams:
    if isinstance(raw, str):
        try:
            return _DRIVER_PRESETS[raw]()
        except KeyError:
            raise ConfigError(
                f"{path}: unknown driver preset {raw!r}; "
                f"expected one of {sorted(_DRIVER_PRESETS)}") from None
    fields = _take(raw, path, {"v_free": 3.64, "gap_stop": 5.0, "gap_free": 25.0,
                               "k_h": 0.6, "tau_h": 0.8})
    return _build(ScriptedDriverParams, fields, path)


def _parse_imperfections(raw, path: str) -> ImperfectionModel:
    if isinstance(raw, str):
        try:
            return _IMPERFECTION_PRESETS[raw]()
        except KeyError:
            raise ConfigError(
                f"{path}: unknown imperfection preset {raw!r}; "
                f"expected one of {sorted(_IMPERFECTION_PRESETS)}") from None
    defaults = {"position_noise_sigma": 0.0, "speed_noise_sigma": 0.0,
                "actuation_lag_tau": None, "command_jitter": 0.0,
                "state_publish_hz": 50.0, "rng_seed": None}
    return _build(ImperfectionModel, _take(raw, path, defaults), path)


def _parse_cacc(raw, path: str) -> CaccParams:
    base = CaccParams()
    defaults = {"k_p": base.k_p, "k_v1": base.k_v1, "k_v2": base.k_v2,
                "d_des": base.d_des, "a_min": base.a_min, "a_max": base.a_max}
    return _build(CaccParams, _take(raw, path, defaults), path)


def _parse_lateral(raw, path: str) -> LateralParams:
    base = LateralParams()
    defaults = {"lookahead_base": base.lookahead_base,
                "lookahead_gain": base.lookahead_gain, "wheelbase": base.wheelbase}
    return _build(LateralParams, _take(raw, path, defaults), path)


def _parse_settle(raw, path: str) -> SettleSpec:
    defaults = {"band_frac": 0.05, "hold_s": 10.0, "timeout_s": 60.0}
    return _build(SettleSpec, _take(raw, path, defaults), path)


def _parse_perturbation(raw, path: str) -> PerturbationSpec:
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ConfigError(f"{path}: perturbation needs a kind")
    kind = raw["kind"]
    if kind == "HalfSine":
        fields = _take(raw, path, {"kind": None, "trigger_point": "C", "trigger_lap": 1,
                                   "duration": 3.5, "amplitude_kmh": 3.02})
        segment = _build(HalfSine, {"duration": fields["duration"],
                                    "amplitude": fields["amplitude_kmh"] * KMH}, path)
    elif kind == "Brake":
        fields = _take(raw, path, {"kind": None, "trigger_point": "D", "trigger_lap": 1,
                                   "target_kmh": 1.01, "rate": 0.28,
                                   "hold_s": 20.0, "recover_s": 12.0})
        segment = _build(Brake, {"target": fields["target_kmh"] * KMH,
                                 "rate": fields["rate"], "hold": fields["hold_s"],
                                 "recover": fields["recover_s"]}, path)
    else:
        raise ConfigError(f"{path}: unknown perturbation kind {kind!r}")
    return PerturbationSpec(segment, fields["trigger_point"], int(fields["trigger_lap"]))


def _parse_entry(raw, path: str) -> PlatoonEntry:
    defaults = {"vehicle_id": None, "kind": None, "role": None, "source": None,
                "imperfections": None, "driver": None, "cacc": None, "spec": {}}
    fields = _take(raw, path, defaults)
    for key in ("vehicle_id", "kind", "role", "source"):
        if fields[key] is None:
            raise ConfigError(f"{path}: missing {key}")
    try:
        kind = VehicleKind(fields["kind"])
        role = VehicleRole(fields["role"])
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None

    spec_defaults = {"body_length": 4.6, "wheelbase": 2.6, "max_speed": 30.0 * KMH,
                     "max_accel": 2.0, "max_decel": 4.0, "max_front_wheel_angle": 0.52,
                     "actuator_tau": 0.15}
    spec_fields = _take(fields["spec"], f"{path}.spec", spec_defaults)
    spec = _build(VehicleSpec, {"vehicle_id": str(fields["vehicle_id"]),
                                "kind": kind, "role": role, **spec_fields},
                  f"{path}.spec")

    if fields["imperfections"] is None:
        imperfections = physical_default() if kind == VehicleKind.EMULATED_PHYSICAL else perfect()
    else:
        imperfections = _parse_imperfections(fields["imperfections"],
                                             f"{path}.imperfections")
    driver = None
    if fields["source"] in ("Scripted", "Human"):
        driver = _parse_driver(fields["driver"] if fields["driver"] is not None
                               else "default", f"{path}.driver")
    cacc = None
    if fields["cacc"] is not None:
        cacc = _parse_cacc(fields["cacc"], f"{path}.cacc")
    return PlatoonEntry(spec, fields["source"], imperfections, driver, cacc)


def scenario_from_dict(data: dict) -> ScenarioSpec:
    if not isinstance(data, dict):
        raise ConfigError("scenario: top level must be an object")
    defaults = {"name": None, "seed": 0, "tick_hz": 50.0, "laps": 4,
                "base_speed_kmh": 10.08, "collision_threshold": 4.6,
                "interlock": True, "initial_gap": 20.0, "straight_line_gaps": False,
                "perturbation": None, "platoon": None, "cacc": {}, "lateral": {},
                "settle": {}, "track_file": None}
    fields = _take(data, "scenario", defaults)
    if fields["name"] is None:
        raise ConfigError("scenario: missing name")
    if not isinstance(fields["platoon"], list) or not fields["platoon"]:
        raise ConfigError("scenario.platoon: must be a non-empty list")
    if fields["perturbation"] is None:
        raise ConfigError("scenario: missing perturbation")

    base_speed = float(fields["base_speed_kmh"]) * KMH
    platoon = [_parse_entry(e, f"scenario.platoon[{i}]")
               for i, e in enumerate(fields["platoon"])]
    cacc = _parse_cacc(fields["cacc"], "scenario.cacc")
    spec = ScenarioSpec(
        name=str(fields["name"]),
        platoon=platoon,
        perturbation=_parse_perturbation(fields["perturbation"],
                                         "scenario.perturbation"),
        seed=int(fields["seed"]),
        tick_hz=float(fields["tick_hz"]),
        laps=int(fields["laps"]),
        base_speed=base_speed,
        collision_threshold=float(fields["collision_threshold"]),
        interlock=bool(fields["interlock"]),
        initial_gap=float(fields["initial_gap"]),
        straight_line_gaps=bool(fields["straight_line_gaps"]),
        cacc=cacc,
        lateral=_parse_lateral(fields["lateral"], "scenario.lateral"),
        settle=_parse_settle(fields["settle"], "scenario.settle"),
        track_file=fields["track_file"],
    )
    if spec.tick_hz <= 0:
        raise ConfigError("scenario.tick_hz: must be > 0")
    return spec


def load_scenario(path) -> ScenarioSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: "
            f"{exc.msg}") from None
    return scenario_from_dict(data)
