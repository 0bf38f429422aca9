"""Network front end for the hub: stream sessions, 50 Hz broadcast, admin.

One `HubServer` wraps a single `HubCore` and serves two carriers:

* a TCP endpoint with length-prefixed JSON frames for vehicle agents and
  controllers, and
* an optional browser-socket endpoint carrying the identical JSON envelope
  bodies for driver stations and observers.

Every session starts with a Register/RegisterAck handshake. State updates
flow into the unified pool; the broadcast task snapshots the pool on a wall
clock timer and fans it out to every controller, driver station, and
observer. Instructions route through the correspondence table and come out
as dispatches on the target agent's session. Slow consumers are disconnected
once their send backlog fills rather than being allowed to stall the tick.
"""

import asyncio
import contextlib
import json
import logging
import time
from dataclasses import dataclass
from typing import Any, Callable, Optional

from ..core import Frame
from ..errors import MixtwinError, SchemaViolation
from ..protocol import (
    EntityKind,
    MessageEnvelope,
    MsgType,
    StreamDecoder,
    encode,
    instruction_from_wire,
    make_error,
    make_heartbeat_ping,
    make_heartbeat_pong,
    make_instruction,
    make_state_pool,
    spec_from_wire,
    state_from_wire,
)
from .core import Channel, HubCore

log = logging.getLogger(__name__)

SEND_BACKLOG = 256  # frames queued per session before it counts as slow
HEARTBEAT_INTERVAL_S = 1.0

_POOL_CONSUMERS = (EntityKind.CONTROLLER.value, EntityKind.DRIVER_STATION.value,
                   EntityKind.OBSERVER.value, EntityKind.ADMIN.value)


@dataclass
class _Session:
    """One connected peer, carrier-agnostic."""

    send_bytes: Callable[[bytes], None]  # enqueue; raises asyncio.QueueFull
    close: Callable[[], None]  # graceful: the handler flushes, then closes
    abort: Callable[[], None]  # hard: wake a blocked reader and tear down
    peer: str
    entity_id: str = ""
    kind: str = ""
    frame: Optional[Frame] = None
    out_seq: int = 0
    last_in_seq: Optional[int] = None
    outstanding_ping: Optional[float] = None

    def next_seq(self) -> int:
        self.out_seq += 1
        return self.out_seq

    def send(self, envelope: MessageEnvelope) -> None:
        self.send_bytes(encode(envelope))


class HubServer:
    """Serve one HubCore over loopback or LAN."""

    def __init__(
        self,
        core: HubCore,
        host: str = "127.0.0.1",
        stream_port: int = 0,
        socket_port: Optional[int] = None,
        heartbeat_interval: float = HEARTBEAT_INTERVAL_S,
        send_backlog: int = SEND_BACKLOG,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.core = core
        self.host = host
        self._stream_port = stream_port
        self._socket_port = socket_port
        self.heartbeat_interval = heartbeat_interval
        self.send_backlog = send_backlog
        self.clock = clock

        self._sessions: dict[str, _Session] = {}  # entity_id -> session
        self._server: Optional[asyncio.base_events.Server] = None
        self._socket_server = None
        self._tasks: list[asyncio.Task] = []
        self._started = False
        self._epoch = 0.0

        # introspection for soft real-time checks
        self.broadcast_times: list[float] = []
        self.staleness_samples: list[float] = []  # oldest pooled report age
        self.slow_consumer_drops = 0
        self.lost_agents: list[str] = []

    # lifecycle

    async def start(self) -> None:
        self._epoch = self.clock()
        self._server = await asyncio.start_server(
            self._handle_stream, self.host, self._stream_port)
        self._stream_port = self._server.sockets[0].getsockname()[1]
        if self._socket_port is not None:
            import websockets

            self._socket_server = await websockets.serve(
                self._handle_socket, self.host, self._socket_port)
            bound = next(iter(self._socket_server.sockets))
            self._socket_port = bound.getsockname()[1]
        self._tasks.append(asyncio.create_task(self._broadcast_loop()))
        self._tasks.append(asyncio.create_task(self._heartbeat_loop()))
        self._started = True
        log.info("hub serving stream on %s:%d%s", self.host, self._stream_port,
                 f", socket on :{self._socket_port}" if self._socket_port else "")

    async def stop(self) -> None:
        for task in self._tasks:
            task.cancel()
        for task in self._tasks:
            with contextlib.suppress(asyncio.CancelledError):
                await task
        self._tasks.clear()
        for session in list(self._sessions.values()):
            session.abort()
        self._sessions.clear()
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
        if self._socket_server is not None:
            self._socket_server.close()
            await self._socket_server.wait_closed()
        self._started = False

    @property
    def stream_port(self) -> int:
        return self._stream_port

    @property
    def socket_port(self) -> Optional[int]:
        return self._socket_port

    def now(self) -> float:
        """Hub clock: seconds since the server started."""
        return self.clock() - self._epoch

    # periodic tasks

    async def _broadcast_loop(self) -> None:
        period = self.core.tick_period
        next_due = self.clock() + period
        while True:
            delay = next_due - self.clock()
            if delay > 0:
                await asyncio.sleep(delay)
            next_due += period
            now = self.now()
            tick, pool_ts, states = self.core.broadcast_pool(now)
            self.broadcast_times.append(now)
            staleness = self.core.max_staleness(now)
            if staleness is not None:
                self.staleness_samples.append(staleness)
            for dispatch in self.core.watchdog_sweep(now):
                self._send_dispatch(dispatch)
            targets = [s for s in self._sessions.values()
                       if s.kind in _POOL_CONSUMERS]
            for session in targets:
                envelope = make_state_pool(session.next_seq(), pool_ts, tick, states)
                self._offer(session, envelope)

    async def _heartbeat_loop(self) -> None:
        while True:
            await asyncio.sleep(self.heartbeat_interval)
            for session in list(self._sessions.values()):
                session.outstanding_ping = self.now()
                self._offer(session, make_heartbeat_ping(
                    session.next_seq(), session.outstanding_ping))

    def _offer(self, session: _Session, envelope: MessageEnvelope) -> None:
        try:
            session.send(envelope)
        except asyncio.QueueFull:
            self.slow_consumer_drops += 1
            log.warning("disconnecting slow consumer %s", session.entity_id)
            session.abort()

    def _send_dispatch(self, dispatch) -> None:
        session = self._sessions.get(dispatch.target_vehicle_id)
        if session is None:
            return
        self._offer(session, make_instruction(
            session.next_seq(), self.now(), dispatch, dispatch=True))

    # session plumbing, stream carrier

    async def _handle_stream(self, reader: asyncio.StreamReader,
                             writer: asyncio.StreamWriter) -> None:
        peer = "%s:%s" % (writer.get_extra_info("peername") or ("?", "?"))[:2]
        queue: asyncio.Queue[bytes] = asyncio.Queue(self.send_backlog)
        closed = asyncio.Event()

        def send_bytes(data: bytes) -> None:
            if closed.is_set():
                return
            queue.put_nowait(data)

        def close() -> None:
            closed.set()

        def abort() -> None:
            closed.set()
            with contextlib.suppress(Exception):
                writer.transport.abort()

        session = _Session(send_bytes=send_bytes, close=close, abort=abort,
                           peer=peer)

        async def pump() -> None:
            while True:
                data = await queue.get()
                writer.write(data)
                await writer.drain()

        pump_task = asyncio.create_task(pump())
        decoder = StreamDecoder()
        try:
            while not closed.is_set():
                data = await reader.read(65536)
                if not data:
                    break
                try:
                    envelopes = decoder.feed(data)
                except MixtwinError as exc:
                    log.warning("%s: framing error: %s", peer, exc)
                    break
                for envelope in envelopes:
                    self._on_envelope(session, envelope)
        except (ConnectionError, asyncio.IncompleteReadError):
            pass
        finally:
            pump_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await pump_task
            while not queue.empty():  # flush e.g. a handshake-reject ack
                data = queue.get_nowait()
                if not writer.is_closing():
                    writer.write(data)
            writer.close()
            with contextlib.suppress(Exception):
                await asyncio.wait_for(writer.wait_closed(), timeout=1.0)
            self._drop_session(session)

    # session plumbing, browser-socket carrier

    async def _handle_socket(self, websocket) -> None:
        peer = str(getattr(websocket, "remote_address", "socket"))
        queue: asyncio.Queue[bytes] = asyncio.Queue(self.send_backlog)
        closed = asyncio.Event()

        def send_bytes(data: bytes) -> None:
            if closed.is_set():
                return
            # the socket carrier sends the JSON body without the length prefix
            queue.put_nowait(data[4:])

        def close() -> None:
            closed.set()

        def abort() -> None:
            closed.set()
            transport = getattr(websocket, "transport", None)
            if transport is not None:
                with contextlib.suppress(Exception):
                    transport.abort()

        session = _Session(send_bytes=send_bytes, close=close, abort=abort,
                           peer=peer)

        async def pump() -> None:
            while True:
                data = await queue.get()
                await websocket.send(data.decode("utf-8"))

        pump_task = asyncio.create_task(pump())
        try:
            async for message in websocket:
                if isinstance(message, bytes):
                    message = message.decode("utf-8")
                try:
                    envelope = self._envelope_from_json(message)
                except MixtwinError as exc:
                    log.warning("%s: bad socket envelope: %s", peer, exc)
                    continue
                self._on_envelope(session, envelope)
                if closed.is_set():
                    break
        except Exception:  # connection tore down mid-read
            pass
        finally:
            pump_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await pump_task
            with contextlib.suppress(Exception):
                while not queue.empty():  # flush e.g. a handshake-reject ack
                    await asyncio.wait_for(
                        websocket.send(queue.get_nowait().decode("utf-8")), 1.0)
            with contextlib.suppress(Exception):
                await websocket.close()
            self._drop_session(session)

    @staticmethod
    def _envelope_from_json(text: str) -> MessageEnvelope:
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"socket envelope is not JSON: {exc}") from None
        body = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
        from ..protocol import decode

        envelope, _ = decode(len(body).to_bytes(4, "big") + body)
        assert envelope is not None
        return envelope

    def _drop_session(self, session: _Session) -> None:
        session.close()
        if not session.entity_id:
            return
        current = self._sessions.get(session.entity_id)
        if current is not session:
            return  # a duplicate-registration reject, not the live session
        del self._sessions[session.entity_id]
        self.core.unregister(session.entity_id)
        if session.kind == EntityKind.VEHICLE_AGENT.value:
            self.lost_agents.append(session.entity_id)
            log.warning("vehicle agent %s lost", session.entity_id)
            notice = make_error(0, self.now(), "agent_lost", session.entity_id)
            for other in self._sessions.values():
                if other.kind in _POOL_CONSUMERS:
                    self._offer(other, MessageEnvelope(
                        MsgType.ERROR, other.next_seq(), notice.timestamp,
                        notice.payload))

    # envelope dispatch

    def _on_envelope(self, session: _Session, envelope: MessageEnvelope) -> None:
        if session.last_in_seq is not None and envelope.seq <= session.last_in_seq:
            log.warning("%s: dropping stale envelope seq %d <= %d",
                        session.peer, envelope.seq, session.last_in_seq)
            return
        session.last_in_seq = envelope.seq

        if not session.entity_id:
            if envelope.msg_type != MsgType.REGISTER:
                log.warning("%s: first message must be Register, got %s",
                            session.peer, envelope.msg_type.value)
                session.close()
                return
            self._register(session, envelope)
            return

        handler = {
            MsgType.STATE_UPDATE: self._on_state_update,
            MsgType.INSTRUCTION: self._on_instruction,
            MsgType.HEARTBEAT: self._on_heartbeat,
            MsgType.ADMIN_COMMAND: self._on_admin,
        }.get(envelope.msg_type)
        if handler is None:
            log.warning("%s: unexpected %s from %s", session.peer,
                        envelope.msg_type.value, session.entity_id)
            return
        handler(session, envelope)

    def _register(self, session: _Session, envelope: MessageEnvelope) -> None:
        payload = envelope.payload
        entity_id = payload["entity_id"]
        kind = payload["entity_kind"]
        try:
            if kind == EntityKind.VEHICLE_AGENT.value:
                if "spec" not in payload:
                    raise SchemaViolation("VehicleAgent registration needs a spec")
                spec = spec_from_wire(payload["spec"])
                if spec.vehicle_id != entity_id:
                    raise SchemaViolation("spec.vehicle_id must equal entity_id")
                frame = Frame(payload["frame"])
                self.core.register_vehicle(spec, frame)
                session.frame = frame
            else:
                self.core.register_entity(entity_id, kind)
        except (MixtwinError, ValueError) as exc:
            session.send(MessageEnvelope(
                MsgType.REGISTER_ACK, session.next_seq(), self.now(),
                {"accepted": False, "entity_id": entity_id, "reason": str(exc)}))
            log.warning("rejected registration of %s: %s", entity_id, exc)
            session.close()
            return
        session.entity_id = entity_id
        session.kind = kind
        self._sessions[entity_id] = session
        session.send(MessageEnvelope(
            MsgType.REGISTER_ACK, session.next_seq(), self.now(),
            {"accepted": True, "entity_id": entity_id,
             "tick_hz": self.core.tick_hz}))
        log.info("registered %s as %s", entity_id, kind)

    def _on_state_update(self, session: _Session, envelope: MessageEnvelope) -> None:
        try:
            state = state_from_wire(envelope.payload["state"])
            self.core.ingest_state(state, self.now())
        except MixtwinError as exc:
            self._offer(session, make_error(session.next_seq(), self.now(),
                                            "bad_state", str(exc)))

    def _on_instruction(self, session: _Session, envelope: MessageEnvelope) -> None:
        try:
            instr = instruction_from_wire(envelope.payload["instruction"])
        except MixtwinError as exc:
            self._offer(session, make_error(session.next_seq(), self.now(),
                                            "bad_instruction", str(exc)))
            return
        try:
            dispatch = self.core.route_instruction(instr, self.now())
        except MixtwinError as exc:
            # e.g. the mapped vehicle dropped between broadcasts; keep the session
            self._offer(session, make_error(session.next_seq(), self.now(),
                                            "route_failed", str(exc)))
            return
        if dispatch is not None:
            self._send_dispatch(dispatch)

    def _on_heartbeat(self, session: _Session, envelope: MessageEnvelope) -> None:
        payload = envelope.payload
        if payload["kind"] == "ping":
            self._offer(session, make_heartbeat_pong(
                session.next_seq(), self.now(), envelope.timestamp))
            return
        ping_sent = payload.get("echo_timestamp")
        if ping_sent is None or session.outstanding_ping != ping_sent:
            return
        session.outstanding_ping = None
        self.core.note_heartbeat(session.entity_id, float(ping_sent),
                                 envelope.timestamp, self.now())

    def _on_admin(self, session: _Session, envelope: MessageEnvelope) -> None:
        payload = envelope.payload
        command = payload.get("command")
        echo = {k: payload[k] for k in ("source_id", "vehicle_id", "channel")
                if k in payload}
        ack: dict[str, Any] = {"ok": True, "command": command, **echo}
        try:
            if command == "remap":
                for key in ("source_id", "vehicle_id", "channel"):
                    if key not in payload:
                        raise SchemaViolation(f"remap needs {key}")
                self.core.remap(payload["source_id"], payload["vehicle_id"],
                                Channel(payload["channel"]),
                                force=bool(payload.get("force", False)))
            elif command == "map_logical":
                self.core.map_logical_source(
                    payload["source_id"], payload["vehicle_id"],
                    Channel(payload["channel"]),
                    force=bool(payload.get("force", False)))
            else:
                raise SchemaViolation(f"unknown admin command {command!r}")
        except (MixtwinError, ValueError, KeyError) as exc:
            ack = {"ok": False, "command": command, "error": str(exc), **echo}
        self._offer(session, MessageEnvelope(
            MsgType.ADMIN_ACK, session.next_seq(), self.now(), ack))

    # helpers for tests and the conductor

    @property
    def session_ids(self) -> list[str]:
        return sorted(self._sessions)
