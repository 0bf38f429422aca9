"""Hub pool, routing, hot-swap, watchdog, and CSV export."""

import csv
import math

import pytest

from mixtwin.core import (
    ControlInstruction,
    Frame,
    Pose,
    VehicleKind,
    VehicleRole,
    VehicleSpec,
    VehicleState,
    arc_gap,
    bicycle_step,
    stadium_track,
)
from mixtwin.errors import ConflictingSource, DuplicateRegistration, UnknownVehicle
from mixtwin.hub import Channel, HubCore, POOL_LOG_HEADER


def spec_for(vehicle_id, kind=VehicleKind.VIRTUAL, **kw):
    return VehicleSpec(vehicle_id, kind, VehicleRole.CAV, **kw)


def state_on_track(track, vehicle_id, arc, speed, frame=Frame.VIRTUAL, ts=0.0, seq=1):
    x, y = track.point_at(arc)
    return VehicleState(vehicle_id, frame, Pose(x, y, track.heading_at(arc)),
                        speed=speed, timestamp=ts, seq=seq)


@pytest.fixture
def track():
    return stadium_track()


@pytest.fixture
def hub(track):
    h = HubCore(track)
    h.register_vehicle(spec_for("v1"))
    h.register_vehicle(spec_for("v2"))
    return h


class TestIngest:
    def test_delay_compensation_arithmetic(self, hub, track):
        raw = state_on_track(track, "v1", 10.0, 2.8, ts=1.0)
        entry = hub.ingest_state(raw, receive_time=1.1)
        assert entry.estimated_delay == pytest.approx(0.1)
        assert entry.unified.arc_position == pytest.approx(10.28, abs=1e-9)
        assert entry.unified.frame == Frame.UNIFIED

    def test_zero_delay_is_identity(self, hub, track):
        raw = state_on_track(track, "v1", 10.0, 2.8, ts=1.0)
        entry = hub.ingest_state(raw, receive_time=1.0)
        assert entry.estimated_delay == 0.0
        assert entry.unified.pose.x == raw.pose.x
        assert entry.unified.arc_position == pytest.approx(10.0, abs=1e-9)

    def test_clock_offset_enters_delay(self, hub, track):
        # sender clock runs 0.5 s behind hub clock
        hub.note_heartbeat("v1", ping_sent=10.0, remote_time=9.5, pong_received=10.0)
        assert hub.clock_offset("v1") == pytest.approx(0.5)
        raw = state_on_track(track, "v1", 10.0, 2.8, ts=9.6)
        entry = hub.ingest_state(raw, receive_time=10.2)
        # 9.6 on the sender clock is 10.1 on the hub clock
        assert entry.estimated_delay == pytest.approx(0.1)

    def test_stale_seq_dropped_and_counted(self, hub, track):
        hub.ingest_state(state_on_track(track, "v1", 10.0, 2.8, seq=5), 0.0)
        assert hub.ingest_state(state_on_track(track, "v1", 11.0, 2.8, seq=5), 0.1) is None
        assert hub.ingest_state(state_on_track(track, "v1", 11.0, 2.8, seq=4), 0.2) is None
        assert hub.counters.stale_state_drops == 2
        assert hub.pool_entry("v1").raw.seq == 5

    def test_unregistered_vehicle_rejected(self, hub, track):
        with pytest.raises(UnknownVehicle):
            hub.ingest_state(state_on_track(track, "ghost", 0.0, 1.0), 0.0)

    def test_physical_frame_scaling(self, track):
        hub = HubCore(track)
        hub.register_vehicle(spec_for("p1", VehicleKind.EMULATED_PHYSICAL))
        raw = VehicleState("p1", Frame.PHYSICAL, Pose(1.0, 0.0, 0.0), speed=0.2,
                           timestamp=0.0, seq=1)
        entry = hub.ingest_state(raw, 0.0)
        assert entry.unified.pose.x == pytest.approx(14.0)
        assert entry.unified.speed == pytest.approx(2.8)
        assert entry.unified.arc_position == pytest.approx(14.0, abs=1e-9)

    def test_compensation_beats_raw_against_ground_truth(self, track):
        # constant 100 ms wire delay, constant speed, straight segment
        hub = HubCore(track)
        spec = spec_for("v1")
        hub.register_vehicle(spec)
        state = state_on_track(track, "v1", 5.0, 2.8)
        cmd = ControlInstruction("v1", desired_speed=2.8)
        lag_ticks = 5  # 100 ms at 50 Hz
        history = [state]
        comp_err, raw_err = [], []
        for _ in range(400):
            state = bicycle_step(state, spec, cmd, 0.02)
            history.append(state)
            if len(history) <= lag_ticks:
                continue
            emitted = history[-1 - lag_ticks]
            true_arc, _ = track.project(state.pose.x, state.pose.y)
            entry = hub.ingest_state(emitted, receive_time=state.timestamp)
            comp_err.append(abs(entry.unified.arc_position - true_arc))
            raw_arc, _ = track.project(emitted.pose.x, emitted.pose.y)
            raw_err.append(abs(raw_arc - true_arc))
        mean_comp = sum(comp_err) / len(comp_err)
        mean_raw = sum(raw_err) / len(raw_err)
        assert mean_raw - mean_comp >= 0.2, (
            f"compensated {mean_comp:.3f} m vs raw {mean_raw:.3f} m")


class TestBroadcast:
    def test_cardinality(self, hub, track):
        hub.ingest_state(state_on_track(track, "v1", 10.0, 2.8), 0.0)
        hub.ingest_state(state_on_track(track, "v2", 30.0, 2.8), 0.0)
        tick, ts, states = hub.broadcast_pool(0.02)
        assert tick == 1
        assert len(states) == 2
        assert all(s.frame == Frame.UNIFIED for s in states)

    def test_empty_pool_still_ticks(self, track):
        hub = HubCore(track)
        t1, _, states = hub.broadcast_pool(0.02)
        t2, _, _ = hub.broadcast_pool(0.04)
        assert states == []
        assert (t1, t2) == (1, 2)

    def test_tick_increments_by_one(self, hub, track):
        for k in range(100):
            tick, _, _ = hub.broadcast_pool(0.02 * (k + 1))
        assert tick == 100


class TestRouting:
    def test_unified_to_physical_scale(self, track):
        hub = HubCore(track)
        hub.register_vehicle(spec_for("p1", VehicleKind.EMULATED_PHYSICAL))
        hub.map_logical_source("c1", "p1", Channel.BOTH)
        out = hub.route_instruction(
            ControlInstruction("p1", 2.8, 0.1, "c1", Frame.UNIFIED, 0.0, 1), 0.0)
        assert out.desired_speed == pytest.approx(0.2)
        assert out.desired_front_wheel_angle == pytest.approx(0.1)
        assert out.source_frame == Frame.PHYSICAL

    def test_clamp_floor_and_ceiling(self, hub):
        hub.map_logical_source("c1", "v1", Channel.BOTH)
        out = hub.route_instruction(
            ControlInstruction("v1", -1.0, 0.0, "c1", Frame.UNIFIED, 0.0, 1), 0.0)
        assert out.desired_speed == 0.0
        out = hub.route_instruction(
            ControlInstruction("v1", 99.0, 0.0, "c1", Frame.UNIFIED, 0.0, 2), 0.0)
        assert out.desired_speed == pytest.approx(30.0 / 3.6)
        out = hub.route_instruction(
            ControlInstruction("v1", 1.0, 9.0, "c1", Frame.UNIFIED, 0.0, 3), 0.0)
        assert out.desired_front_wheel_angle == pytest.approx(0.52)
        assert hub.counters.clamp_events == 3

    def test_unmapped_source_dropped_counted(self, hub):
        out = hub.route_instruction(
            ControlInstruction("v1", 1.0, 0.0, "nobody", Frame.UNIFIED, 0.0, 1), 0.0)
        assert out is None
        assert hub.counters.unmapped_drops == 1

    def test_stale_instruction_seq_dropped(self, hub):
        hub.map_logical_source("c1", "v1", Channel.BOTH)
        hub.route_instruction(ControlInstruction("v1", 1.0, 0.0, "c1", Frame.UNIFIED, 0.0, 7), 0.0)
        out = hub.route_instruction(
            ControlInstruction("v1", 2.0, 0.0, "c1", Frame.UNIFIED, 0.0, 7), 0.1)
        assert out is None
        assert hub.counters.stale_instruction_drops == 1

    def test_table_overrides_instruction_target(self, hub):
        hub.map_logical_source("c1", "v2", Channel.BOTH)
        out = hub.route_instruction(
            ControlInstruction("v1", 1.0, 0.0, "c1", Frame.UNIFIED, 0.0, 1), 0.0)
        assert out.target_vehicle_id == "v2"

    def test_channel_merge(self, hub, track):
        hub.ingest_state(state_on_track(track, "v1", 10.0, 2.0), 0.0)
        hub.map_logical_source("steer", "v1", Channel.LATERAL)
        hub.map_logical_source("gas", "v1", Channel.LONGITUDINAL)
        # lateral-only command holds the vehicle's current speed
        out = hub.route_instruction(
            ControlInstruction("v1", 9.9, 0.2, "steer", Frame.UNIFIED, 0.0, 1), 0.0)
        assert out.desired_front_wheel_angle == pytest.approx(0.2)
        assert out.desired_speed == pytest.approx(2.0)
        # longitudinal command keeps the merged angle
        out = hub.route_instruction(
            ControlInstruction("v1", 3.0, -0.5, "gas", Frame.UNIFIED, 0.1, 1), 0.1)
        assert out.desired_speed == pytest.approx(3.0)
        assert out.desired_front_wheel_angle == pytest.approx(0.2)


class TestWatchdog:
    def test_trips_after_quiet_period(self, hub):
        hub.map_logical_source("c1", "v1", Channel.BOTH)
        hub.route_instruction(ControlInstruction("v1", 2.0, 0.1, "c1", Frame.UNIFIED, 0.0, 1), 0.0)
        assert hub.watchdog_sweep(1.9) == []
        out = hub.watchdog_sweep(2.0)
        assert len(out) == 1
        assert out[0].desired_speed == 0.0
        assert out[0].desired_front_wheel_angle == pytest.approx(0.1)
        assert out[0].source_id == "hub.watchdog"
        assert hub.counters.watchdog_trips == 1
        # trips once, not every sweep
        assert hub.watchdog_sweep(2.1) == []

    def test_fresh_command_resets(self, hub):
        hub.map_logical_source("c1", "v1", Channel.BOTH)
        hub.route_instruction(ControlInstruction("v1", 2.0, 0.0, "c1", Frame.UNIFIED, 0.0, 1), 0.0)
        hub.route_instruction(ControlInstruction("v1", 2.0, 0.0, "c1", Frame.UNIFIED, 1.5, 2), 1.5)
        assert hub.watchdog_sweep(2.5) == []
        assert len(hub.watchdog_sweep(3.5)) == 1

    def test_never_commands_untouched_vehicle(self, hub):
        assert hub.watchdog_sweep(100.0) == []


class TestRemap:
    def test_midrun_switch(self, hub):
        hub.map_logical_source("c1", "v1", Channel.BOTH)
        hub.route_instruction(ControlInstruction("v1", 1.0, 0.0, "c1", Frame.UNIFIED, 0.0, 1), 0.0)
        hub.remap("c1", "v2", Channel.BOTH)
        out = hub.route_instruction(
            ControlInstruction("v1", 1.5, 0.0, "c1", Frame.UNIFIED, 0.1, 2), 0.1)
        assert out.target_vehicle_id == "v2"
        # v1 keeps its last merged command; no source drives it now
        assert hub.table.sources_of("v1").longitudinal is None

    def test_idempotent(self, hub):
        hub.map_logical_source("c1", "v1", Channel.BOTH)
        hub.remap("c1", "v1", Channel.BOTH)
        assert hub.table.vehicle_for("c1") == "v1"

    def test_conflict_needs_force(self, hub):
        hub.map_logical_source("c1", "v1", Channel.BOTH)
        hub.map_logical_source("c2", "v2", Channel.BOTH)
        with pytest.raises(ConflictingSource):
            hub.remap("c2", "v1", Channel.LONGITUDINAL)
        hub.remap("c2", "v1", Channel.LONGITUDINAL, force=True)
        assert hub.table.sources_of("v1").longitudinal == "c2"
        assert hub.table.sources_of("v1").lateral == "c1"
        # c1 lost nothing on v1 lateral; c2 left v2 entirely
        assert hub.table.vehicle_for("c2") == "v1"
        assert hub.table.sources_of("v2").longitudinal is None

    def test_swap_is_atomic_per_channel(self, hub):
        hub.map_logical_source("a", "v1", Channel.BOTH)
        hub.map_logical_source("b", "v2", Channel.BOTH)
        hub.remap("a", "v2", Channel.BOTH, force=True)
        hub.remap("b", "v1", Channel.BOTH, force=True)
        assert hub.table.vehicle_for("a") == "v2"
        assert hub.table.vehicle_for("b") == "v1"
        ch1, ch2 = hub.table.sources_of("v1"), hub.table.sources_of("v2")
        assert (ch1.lateral, ch1.longitudinal) == ("b", "b")
        assert (ch2.lateral, ch2.longitudinal) == ("a", "a")

    def test_unknown_ids(self, hub):
        with pytest.raises(Exception):
            hub.remap("ghost", "v1", Channel.BOTH)


class TestRegistration:
    def test_duplicate_vehicle_rejected(self, hub):
        with pytest.raises(DuplicateRegistration):
            hub.register_vehicle(spec_for("v1"))

    def test_duplicate_entity_rejected(self, hub):
        hub.register_entity("obs", "Observer")
        with pytest.raises(DuplicateRegistration):
            hub.register_entity("obs", "Observer")


class TestPoolLog:
    def test_export_and_reimport(self, hub, track, tmp_path):
        for k in range(100):
            t = 0.02 * (k + 1)
            hub.ingest_state(state_on_track(track, "v1", 10.0 + 2.8 * t, 2.8,
                                            ts=t, seq=k + 1), t)
            hub.ingest_state(state_on_track(track, "v2", 30.0 + 2.8 * t, 2.8,
                                            ts=t, seq=k + 1), t)
            hub.broadcast_pool(t)
        path = tmp_path / "pool.csv"
        n = hub.export_pool_log(path)
        assert n == 200

        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == POOL_LOG_HEADER
        assert len(rows) == 201
        for row, mem in zip(rows[1:], hub.log_rows):
            assert int(row[0]) == mem.tick
            assert row[2] == mem.vehicle_id
            assert float(row[1]) == pytest.approx(mem.time, abs=1e-9)
            assert float(row[3]) == pytest.approx(mem.arc_position, abs=1e-9)
            assert float(row[4]) == pytest.approx(mem.speed, abs=1e-9)
            assert row[5] == mem.frame
            assert float(row[6]) == pytest.approx(mem.gap_to_predecessor, abs=1e-9)

    def test_gap_to_predecessor_is_nearest_ahead(self, hub, track):
        hub.ingest_state(state_on_track(track, "v1", 10.0, 2.8), 0.0)
        hub.ingest_state(state_on_track(track, "v2", 30.0, 2.8), 0.0)
        hub.broadcast_pool(0.02)
        by_id = {r.vehicle_id: r for r in hub.log_rows}
        assert by_id["v1"].gap_to_predecessor == pytest.approx(20.0)
        # the head wraps around the lap to the tail
        assert by_id["v2"].gap_to_predecessor == pytest.approx(track.lap_length - 20.0)
