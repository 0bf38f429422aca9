"""Hub state machine: pool aggregation, instruction routing, hot-swapping.

HubCore is transport-free and single-owner. The lockstep runner drives it
directly with a virtual clock; the network server wraps it in one task and
feeds it wall-clock times. All times passed in are "hub clock" seconds.
"""

import csv
import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

from ..core import (
    ControlInstruction,
    Frame,
    FrameTransform,
    Pose,
    Track,
    VehicleKind,
    VehicleSpec,
    VehicleState,
    arc_gap,
    default_transforms,
    from_unified,
    instruction_to_unified,
    to_unified,
)
from ..errors import (
    ConflictingSource,
    DuplicateRegistration,
    IoFailure,
    UnknownSource,
    UnknownVehicle,
)

log = logging.getLogger(__name__)


class Channel(str, enum.Enum):
    LATERAL = "lateral"
    LONGITUDINAL = "longitudinal"
    BOTH = "both"

    def expands_to(self) -> tuple["Channel", ...]:
        if self == Channel.BOTH:
            return (Channel.LATERAL, Channel.LONGITUDINAL)
        return (self,)


@dataclass(frozen=True)
class PoolEntry:
    raw: VehicleState  # as received, sender frame
    unified: VehicleState  # aligned + delay-compensated
    receive_time: float  # hub clock
    estimated_delay: float  # seconds, >= 0


@dataclass
class VehicleChannels:
    lateral: Optional[str] = None
    longitudinal: Optional[str] = None


class CorrespondenceTable:
    """Which control source drives which vehicle, per channel.

    Remaps swap the whole mapping in one assignment so a concurrent reader
    (the tick task) never sees a half-applied change.
    """

    def __init__(self):
        self._source_to_vehicle: dict[str, str] = {}
        self._vehicle_channels: dict[str, VehicleChannels] = {}

    def vehicle_for(self, source_id: str) -> Optional[str]:
        return self._source_to_vehicle.get(source_id)

    def channels_of(self, source_id: str) -> tuple[Channel, ...]:
        vehicle = self._source_to_vehicle.get(source_id)
        if vehicle is None:
            return ()
        ch = self._vehicle_channels[vehicle]
        out = []
        if ch.lateral == source_id:
            out.append(Channel.LATERAL)
        if ch.longitudinal == source_id:
            out.append(Channel.LONGITUDINAL)
        return tuple(out)

    def sources_of(self, vehicle_id: str) -> VehicleChannels:
        ch = self._vehicle_channels.get(vehicle_id)
        return VehicleChannels() if ch is None else VehicleChannels(ch.lateral, ch.longitudinal)

    def remap(self, source_id: str, vehicle_id: str, channel: Channel, force: bool = False):
        """Point source_id at vehicle_id on the given channel(s), atomically."""
        new_sources = dict(self._source_to_vehicle)
        new_channels = {v: VehicleChannels(c.lateral, c.longitudinal)
                        for v, c in self._vehicle_channels.items()}
        target = new_channels.setdefault(vehicle_id, VehicleChannels())

        for ch in channel.expands_to():
            holder = target.lateral if ch == Channel.LATERAL else target.longitudinal
            if holder is not None and holder != source_id and not force:
                raise ConflictingSource(
                    f"{vehicle_id} already takes {ch.value} control from {holder}")

        # a source drives one vehicle: moving to a new one detaches it fully
        old_vehicle = new_sources.get(source_id)
        if old_vehicle is not None and old_vehicle != vehicle_id:
            old = new_channels[old_vehicle]
            if old.lateral == source_id:
                old.lateral = None
            if old.longitudinal == source_id:
                old.longitudinal = None

        for ch in channel.expands_to():
            if ch == Channel.LATERAL:
                if target.lateral not in (None, source_id):
                    new_sources.pop(target.lateral, None)
                target.lateral = source_id
            else:
                if target.longitudinal not in (None, source_id):
                    new_sources.pop(target.longitudinal, None)
                target.longitudinal = source_id

        # a source with no remaining channel anywhere drops out of the map
        still_points = {}
        for vid, ch in new_channels.items():
            for src in (ch.lateral, ch.longitudinal):
                if src is not None:
                    still_points[src] = vid
        new_sources = still_points

        self._source_to_vehicle = new_sources
        self._vehicle_channels = new_channels


@dataclass
class _MergedCommand:
    """Last commanded values per vehicle, unified frame."""

    speed: float = 0.0
    angle: float = 0.0
    has_longitudinal: bool = False
    last_longitudinal_time: float = -math.inf
    watchdog_tripped: bool = False
    dispatch_seq: int = 0


@dataclass
class _LogRow:
    tick: int
    time: float
    vehicle_id: str
    arc_position: float
    speed: float
    frame: str
    gap_to_predecessor: Optional[float]


POOL_LOG_HEADER = ["tick", "time", "vehicle_id", "arc_position", "speed",
                   "frame", "gap_to_predecessor"]


@dataclass
class HubCounters:
    stale_state_drops: int = 0
    stale_instruction_drops: int = 0
    unmapped_drops: int = 0
    clamp_events: int = 0
    watchdog_trips: int = 0


class HubCore:
    """Unified pool, instruction router, and correspondence administration."""

    def __init__(
        self,
        track: Track,
        transforms: Optional[dict[Frame, FrameTransform]] = None,
        tick_hz: float = 50.0,
        watchdog_s: float = 2.0,
        record: bool = True,
    ):
        self.track = track
        self.transforms = transforms or default_transforms()
        self.tick_hz = tick_hz
        self.tick_period = 1.0 / tick_hz
        self.watchdog_s = watchdog_s
        self.record = record

        self.table = CorrespondenceTable()
        self.counters = HubCounters()
        self.tick = 0

        self._specs: dict[str, VehicleSpec] = {}
        self._vehicle_frames: dict[str, Frame] = {}
        self._pool: dict[str, PoolEntry] = {}
        self._last_state_seq: dict[str, int] = {}
        self._last_instruction_seq: dict[str, int] = {}
        self._merged: dict[str, _MergedCommand] = {}
        self._clock_offsets: dict[str, float] = {}
        self._entities: dict[str, str] = {}  # entity_id -> kind string
        self._log_rows: list[_LogRow] = []

    # Registration

    def register_vehicle(self, spec: VehicleSpec, frame: Optional[Frame] = None) -> None:
        if spec.vehicle_id in self._specs:
            raise DuplicateRegistration(f"vehicle {spec.vehicle_id} already registered")
        if frame is None:
            frame = (Frame.PHYSICAL if spec.kind == VehicleKind.EMULATED_PHYSICAL
                     else Frame.VIRTUAL)
        if frame not in self.transforms:
            raise UnknownVehicle(f"no transform configured for frame {frame.value}")
        self._specs[spec.vehicle_id] = spec
        self._vehicle_frames[spec.vehicle_id] = frame
        self._entities[spec.vehicle_id] = "VehicleAgent"

    def register_entity(self, entity_id: str, kind: str) -> None:
        if entity_id in self._entities:
            raise DuplicateRegistration(f"entity {entity_id} already registered")
        self._entities[entity_id] = kind

    def unregister(self, entity_id: str) -> None:
        """Retire an entity; a vehicle leaves the pool and may register anew."""
        self._entities.pop(entity_id, None)
        self._clock_offsets.pop(entity_id, None)
        self._specs.pop(entity_id, None)
        self._vehicle_frames.pop(entity_id, None)
        self._pool.pop(entity_id, None)
        self._merged.pop(entity_id, None)
        self._last_state_seq.pop(entity_id, None)

    def is_registered(self, entity_id: str) -> bool:
        return entity_id in self._entities

    def spec_of(self, vehicle_id: str) -> VehicleSpec:
        try:
            return self._specs[vehicle_id]
        except KeyError:
            raise UnknownVehicle(f"vehicle {vehicle_id} not registered") from None

    def frame_of(self, vehicle_id: str) -> Frame:
        try:
            return self._vehicle_frames[vehicle_id]
        except KeyError:
            raise UnknownVehicle(f"vehicle {vehicle_id} not registered") from None

    @property
    def vehicle_ids(self) -> list[str]:
        return list(self._specs)

    # Clock sync

    def note_heartbeat(self, entity_id: str, ping_sent: float, remote_time: float,
                       pong_received: float) -> float:
        """Record a clock offset (hub minus sender) from one ping/pong pair."""
        offset = (ping_sent + pong_received) / 2.0 - remote_time
        self._clock_offsets[entity_id] = offset
        return offset

    def clock_offset(self, entity_id: str) -> float:
        return self._clock_offsets.get(entity_id, 0.0)

    # State ingestion

    def ingest_state(self, raw: VehicleState, receive_time: float) -> Optional[PoolEntry]:
        """Align one raw report into the pool; None when dropped as stale."""
        vehicle_id = raw.vehicle_id
        if vehicle_id not in self._specs:
            raise UnknownVehicle(f"state from unregistered vehicle {vehicle_id}")
        last = self._last_state_seq.get(vehicle_id)
        if last is not None and raw.seq <= last:
            self.counters.stale_state_drops += 1
            log.warning("dropping stale state seq %d <= %d from %s", raw.seq, last, vehicle_id)
            return None
        self._last_state_seq[vehicle_id] = raw.seq

        unified = to_unified(raw, self.transforms[raw.frame])
        sender_ts_on_hub_clock = raw.timestamp + self._clock_offsets.get(vehicle_id, 0.0)
        delay = max(0.0, receive_time - sender_ts_on_hub_clock)
        if delay > 0.0:
            # position-only dead reckoning along the reported heading
            pose = unified.pose
            unified = replace(unified, pose=Pose(
                pose.x + unified.speed * math.cos(pose.heading) * delay,
                pose.y + unified.speed * math.sin(pose.heading) * delay,
                pose.heading,
            ))
        arc, _ = self.track.project(unified.pose.x, unified.pose.y)
        unified = replace(unified, arc_position=arc)

        entry = PoolEntry(raw=raw, unified=unified, receive_time=receive_time,
                          estimated_delay=delay)
        self._pool[vehicle_id] = entry
        return entry

    # Broadcast

    def broadcast_pool(self, now: float) -> tuple[int, float, list[VehicleState]]:
        """Snapshot the pool for one tick: (tick, pool_timestamp, states)."""
        self.tick += 1
        states = [self._pool[v].unified for v in sorted(self._pool)]
        if self.record:
            self._log_rows.extend(self._pool_rows(self.tick, now, states))
        return self.tick, now, states

    def _pool_rows(self, tick: int, now: float, states: list[VehicleState]) -> list[_LogRow]:
        arcs = {s.vehicle_id: s.arc_position for s in states}
        rows = []
        for s in states:
            gap = None
            if len(states) > 1:
                gap = min(
                    arc_gap(arcs[s.vehicle_id], a, self.track.lap_length)
                    for v, a in arcs.items() if v != s.vehicle_id
                )
            rows.append(_LogRow(tick, now, s.vehicle_id, s.arc_position, s.speed,
                                self._vehicle_frames[s.vehicle_id].value, gap))
        return rows

    def pool_entry(self, vehicle_id: str) -> Optional[PoolEntry]:
        return self._pool.get(vehicle_id)

    def max_staleness(self, now: float) -> Optional[float]:
        """Age of the oldest pooled report, seconds; None while pool empty."""
        if not self._pool:
            return None
        return max(now - entry.receive_time for entry in self._pool.values())

    # Instruction routing

    def route_instruction(self, instr: ControlInstruction,
                          receive_time: float) -> Optional[ControlInstruction]:
        """Clamp, merge, and convert one instruction for its mapped vehicle.

        Returns the dispatch in the target vehicle's frame, or None when the
        instruction was dropped (stale seq or unmapped source). Out-of-range
        components are clamped, never dropped.
        """
        source = instr.source_id
        last = self._last_instruction_seq.get(source)
        if last is not None and instr.seq <= last:
            self.counters.stale_instruction_drops += 1
            log.warning("dropping stale instruction seq %d <= %d from %s",
                        instr.seq, last, source)
            return None
        self._last_instruction_seq[source] = instr.seq

        vehicle_id = self.table.vehicle_for(source)
        if vehicle_id is None:
            self.counters.unmapped_drops += 1
            log.warning("dropping instruction from unmapped source %s", source)
            return None
        if vehicle_id not in self._specs:
            raise UnknownVehicle(f"source {source} mapped to unregistered vehicle {vehicle_id}")
        channels = self.table.channels_of(source)
        spec = self._specs[vehicle_id]

        unified = instr
        if instr.source_frame != Frame.UNIFIED:
            unified = instruction_to_unified(instr, self.transforms[instr.source_frame])

        speed = min(max(unified.desired_speed, 0.0), spec.max_speed)
        angle = min(max(unified.desired_front_wheel_angle, -spec.max_front_wheel_angle),
                    spec.max_front_wheel_angle)
        if speed != unified.desired_speed or angle != unified.desired_front_wheel_angle:
            self.counters.clamp_events += 1

        merged = self._merged.get(vehicle_id)
        if merged is None:
            merged = self._seed_merged(vehicle_id)
        if Channel.LONGITUDINAL in channels:
            merged.speed = speed
            merged.has_longitudinal = True
            merged.last_longitudinal_time = receive_time
            merged.watchdog_tripped = False
        if Channel.LATERAL in channels:
            merged.angle = angle
        merged.dispatch_seq += 1

        return self._dispatch(vehicle_id, merged, source, receive_time)

    def _seed_merged(self, vehicle_id: str) -> _MergedCommand:
        # first command for this vehicle: hold whatever it is already doing
        merged = _MergedCommand()
        entry = self._pool.get(vehicle_id)
        if entry is not None:
            merged.speed = entry.unified.speed
            merged.angle = entry.unified.front_wheel_angle
        self._merged[vehicle_id] = merged
        return merged

    def _dispatch(self, vehicle_id: str, merged: _MergedCommand, source: str,
                  now: float) -> ControlInstruction:
        unified = ControlInstruction(
            target_vehicle_id=vehicle_id,
            desired_speed=merged.speed,
            desired_front_wheel_angle=merged.angle,
            source_id=source,
            source_frame=Frame.UNIFIED,
            timestamp=now,
            seq=merged.dispatch_seq,
        )
        return from_unified(unified, self.transforms[self._vehicle_frames[vehicle_id]])

    def watchdog_sweep(self, now: float) -> list[ControlInstruction]:
        """Zero-speed dispatches for vehicles whose longitudinal source went quiet."""
        out = []
        for vehicle_id, merged in self._merged.items():
            if (merged.has_longitudinal and not merged.watchdog_tripped
                    and now - merged.last_longitudinal_time >= self.watchdog_s):
                merged.speed = 0.0
                merged.watchdog_tripped = True
                merged.dispatch_seq += 1
                self.counters.watchdog_trips += 1
                log.warning("watchdog: commanding %s to stop", vehicle_id)
                out.append(self._dispatch(vehicle_id, merged, "hub.watchdog", now))
        return out

    def remap(self, source_id: str, vehicle_id: str, channel: Channel,
              force: bool = False) -> None:
        if source_id not in self._entities:
            raise UnknownSource(f"source {source_id} not registered")
        if vehicle_id not in self._specs:
            raise UnknownVehicle(f"vehicle {vehicle_id} not registered")
        self.table.remap(source_id, vehicle_id, channel, force=force)

    def map_logical_source(self, source_id: str, vehicle_id: str, channel: Channel,
                           force: bool = False) -> None:
        """Bind a hub-internal source id (no network entity behind it)."""
        if source_id not in self._entities:
            self._entities[source_id] = "Controller"
        self.remap(source_id, vehicle_id, channel, force=force)

    # Recording

    def export_pool_log(self, path) -> int:
        try:
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(POOL_LOG_HEADER)
                for row in self._log_rows:
                    writer.writerow([
                        row.tick,
                        repr(row.time),
                        row.vehicle_id,
                        repr(row.arc_position),
                        repr(row.speed),
                        row.frame,
                        "" if row.gap_to_predecessor is None else repr(row.gap_to_predecessor),
                    ])
        except OSError as exc:
            raise IoFailure(f"cannot write pool log {path}: {exc}") from None
        return len(self._log_rows)

    @property
    def log_rows(self):
        return self._log_rows
