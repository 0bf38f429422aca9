"""Wire codec: fixtures, round trips, framing under arbitrary chunking."""

import json
import struct
from pathlib import Path

import pytest

import mixtwin.errors as errors
from mixtwin.core import ControlInstruction, Frame, Pose, VehicleState
from mixtwin.protocol import (
    MAX_FRAME_BYTES,
    EntityKind,
    MessageEnvelope,
    MsgType,
    StreamDecoder,
    decode,
    encode,
    instruction_from_wire,
    instruction_to_wire,
    make_heartbeat_ping,
    make_register,
    make_state_pool,
    state_from_wire,
    state_to_wire,
)
from mixtwin.errors import MalformedFrame, OversizeFrame, SchemaViolation

FIXTURES = Path(__file__).parent / "fixtures" / "wire_frames.json"


def fixture_cases():
    return json.loads(FIXTURES.read_text())


class TestFixtureCorpus:
    @pytest.mark.parametrize("case", [c for c in fixture_cases() if "expect" in c],
                             ids=lambda c: c["note"])
    def test_valid_frames(self, case):
        raw = bytes.fromhex(case["hex"])
        envelope, consumed = decode(raw)
        assert consumed == len(raw)
        assert envelope.msg_type.value == case["expect"]["msg_type"]
        assert envelope.seq == case["expect"]["seq"]
        assert envelope.timestamp == case["expect"]["timestamp"]
        assert envelope.payload == case["expect"]["payload"]
        # canonical form survives decode -> encode byte for byte
        assert encode(envelope) == raw

    @pytest.mark.parametrize("case", [c for c in fixture_cases() if "error" in c],
                             ids=lambda c: c["note"])
    def test_invalid_frames(self, case):
        expected = getattr(errors, case["error"])
        with pytest.raises(expected):
            decode(bytes.fromhex(case["hex"]))


class TestFraming:
    def test_prefix_is_body_length(self):
        raw = encode(make_heartbeat_ping(1, 0.0))
        (length,) = struct.unpack(">I", raw[:4])
        assert length == len(raw) - 4

    def test_truncated_frame_consumes_nothing(self):
        raw = encode(make_heartbeat_ping(1, 0.0))
        for cut in (0, 1, 3, 4, len(raw) - 1):
            envelope, consumed = decode(raw[:cut])
            assert envelope is None and consumed == 0

    def test_back_to_back_frames(self):
        a = encode(make_heartbeat_ping(1, 0.0))
        b = encode(make_register(2, 0.1, EntityKind.OBSERVER, "obs"))
        stream = a + b
        e1, n1 = decode(stream)
        e2, n2 = decode(stream[n1:])
        assert e1.msg_type == MsgType.HEARTBEAT
        assert e2.msg_type == MsgType.REGISTER
        assert n1 + n2 == len(stream)

    def test_oversize_rejected_on_encode(self):
        big = MessageEnvelope(MsgType.ADMIN_ACK, 1, 0.0,
                              {"ok": True, "blob": "x" * (MAX_FRAME_BYTES + 10)})
        with pytest.raises(OversizeFrame):
            encode(big)

    def test_oversize_rejected_before_body_arrives(self):
        with pytest.raises(OversizeFrame):
            decode(struct.pack(">I", MAX_FRAME_BYTES + 1) + b"{}")

    def test_nan_rejected_both_ways(self):
        with pytest.raises(SchemaViolation):
            encode(MessageEnvelope(MsgType.HEARTBEAT, 1, float("nan"), {"kind": "ping"}))
        body = b'{"msg_type":"Heartbeat","payload":{"kind":"ping"},"seq":1,"timestamp":NaN}'
        with pytest.raises(MalformedFrame):
            decode(struct.pack(">I", len(body)) + body)


class TestStreamDecoder:
    def _stream(self):
        st = VehicleState("v1", Frame.VIRTUAL, Pose(1, 2, 0.3), 2.8, arc_position=7.0,
                          timestamp=0.12, seq=6)
        envs = [
            make_heartbeat_ping(1, 0.0),
            make_register(2, 0.1, EntityKind.VEHICLE_AGENT, "v1", frame=Frame.VIRTUAL),
            make_state_pool(3, 0.2, 10, [st]),
        ]
        return envs, b"".join(encode(e) for e in envs)

    def test_single_feed(self):
        envs, raw = self._stream()
        got = StreamDecoder().feed(raw)
        assert [e.msg_type for e in got] == [e.msg_type for e in envs]
        assert [e.seq for e in got] == [1, 2, 3]

    def test_byte_at_a_time(self):
        envs, raw = self._stream()
        dec = StreamDecoder()
        got = []
        for i in range(len(raw)):
            got.extend(dec.feed(raw[i:i + 1]))
        assert len(got) == len(envs)
        assert got[-1].payload == envs[-1].payload
        assert dec.pending_bytes == 0

    def test_every_split_point_of_two_frames(self):
        _, raw = self._stream()
        whole = StreamDecoder().feed(raw)
        for cut in range(1, len(raw)):
            dec = StreamDecoder()
            got = dec.feed(raw[:cut]) + dec.feed(raw[cut:])
            assert got == whole, f"split at byte {cut} changed the decoded sequence"

    def test_poisoned_after_garbage(self):
        dec = StreamDecoder()
        with pytest.raises(MalformedFrame):
            dec.feed(struct.pack(">I", 4) + b"}{[(")
        with pytest.raises(MalformedFrame):
            dec.feed(b"")


class TestRandomizedRoundTrip:
    def test_corpus_round_trips_field_identically(self):
        import numpy as np

        rng = np.random.default_rng(0xC0DEC)
        frames = list(Frame)
        kinds = list(EntityKind)
        for i in range(1000):
            choice = i % 4
            seq = int(rng.integers(0, 2**31))
            ts = float(np.round(rng.uniform(0, 1e6), 6))
            if choice == 0:
                env = make_register(seq, ts, kinds[int(rng.integers(len(kinds)))],
                                    f"ent{i}", frame=frames[int(rng.integers(len(frames)))],
                                    capabilities=["a"] * int(rng.integers(0, 3)))
            elif choice == 1:
                st = VehicleState(
                    f"v{i}", frames[int(rng.integers(len(frames)))],
                    Pose(float(rng.normal(0, 100)), float(rng.normal(0, 100)),
                         float(rng.uniform(-3.14, 3.14))),
                    speed=float(rng.uniform(0, 30)),
                    acceleration=float(rng.normal(0, 2)),
                    front_wheel_angle=float(rng.uniform(-0.52, 0.52)),
                    arc_position=None if rng.random() < 0.3 else float(rng.uniform(0, 245)),
                    timestamp=ts, seq=seq)
                env = make_state_pool(seq, ts, int(rng.integers(0, 10**6)), [st])
            elif choice == 2:
                instr = ControlInstruction(
                    f"v{i}", desired_speed=float(rng.uniform(0, 10)),
                    desired_front_wheel_angle=float(rng.uniform(-0.6, 0.6)),
                    source_id=f"src{i}", source_frame=Frame.UNIFIED,
                    timestamp=ts, seq=seq)
                env = MessageEnvelope(MsgType.INSTRUCTION, seq, ts,
                                      {"instruction": instruction_to_wire(instr)})
            else:
                env = MessageEnvelope(MsgType.ADMIN_COMMAND, seq, ts,
                                      {"command": "halt", "args": {"n": int(rng.integers(100))}})
            decoded, consumed = decode(encode(env))
            assert decoded == env, f"round trip changed envelope {i}"
            assert encode(decoded) == encode(env)


class TestValueTypeWireShape:
    def test_state_round_trip(self):
        st = VehicleState("v9", Frame.PHYSICAL, Pose(0.1, 0.2, -1.0), 0.33,
                          acceleration=-0.02, front_wheel_angle=0.2,
                          arc_position=None, timestamp=9.5, seq=42)
        assert state_from_wire(state_to_wire(st)) == st

    def test_instruction_round_trip(self):
        instr = ControlInstruction("v9", 2.5, -0.1, "driver.1", Frame.UNIFIED, 3.25, 17)
        assert instruction_from_wire(instruction_to_wire(instr)) == instr

    def test_state_bad_frame(self):
        wire = state_to_wire(VehicleState("v", Frame.VIRTUAL, Pose(0, 0, 0), 1.0))
        wire["frame"] = "Narnia"
        with pytest.raises(SchemaViolation):
            state_from_wire(wire)
