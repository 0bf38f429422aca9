"""Stream-carrier clients: vehicle agents, controllers, and observers.

`HubClient` owns one TCP session: the Register handshake, outbound seq
numbering, heartbeat replies, and a background reader that queues every
other inbound envelope. The role classes on top of it run the wall-clock
loops of the distributed mode; their construction mirrors the lockstep
harness exactly (same placement, same seeds, same controllers), so the two
modes differ only in clocking and transport.
"""

import asyncio
import contextlib
import logging
import time
from dataclasses import replace
from typing import Callable, Optional

from ..agents import VehicleAgent
from ..controllers import InstructionSource
from ..controllers.sources import HeadProfileSource, PurePursuitSource
from ..core import ControlInstruction, Track, VehicleState, native_frame
from ..errors import RegistrationRefused, UnmappedSource
from ..protocol import (
    EntityKind,
    MessageEnvelope,
    MsgType,
    StreamDecoder,
    encode,
    instruction_from_wire,
    make_heartbeat_pong,
    make_instruction,
    make_register,
    make_state_update,
    spec_to_wire,
    state_from_wire,
)
from ..scenario.assembly import ExperimentTracker
from ..scenario.spec import ScenarioSpec

log = logging.getLogger(__name__)


class HubClient:
    """One registered session with the hub over the stream carrier."""

    def __init__(self, host: str, port: int,
                 clock: Callable[[], float] = time.monotonic):
        self.host = host
        self.port = port
        self.clock = clock
        self._epoch = 0.0
        self._reader: Optional[asyncio.StreamReader] = None
        self._writer: Optional[asyncio.StreamWriter] = None
        self._inbound: asyncio.Queue[MessageEnvelope] = asyncio.Queue()
        self._reader_task: Optional[asyncio.Task] = None
        self._seq = 0
        self.entity_id = ""
        self.hub_tick_hz: Optional[float] = None
        self.closed = asyncio.Event()

    def now(self) -> float:
        """Client clock, seconds since connect; stamps states and pongs."""
        return self.clock() - self._epoch

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    async def connect(self) -> None:
        self._epoch = self.clock()
        self._reader, self._writer = await asyncio.open_connection(
            self.host, self.port)

    async def register(
        self,
        kind: EntityKind,
        entity_id: str,
        frame=None,
        spec=None,
        capabilities: Optional[list[str]] = None,
    ) -> dict:
        """Run the handshake; raises RegistrationRefused when rejected."""
        envelope = make_register(self._next_seq(), self.now(), kind, entity_id,
                                 frame=frame, capabilities=capabilities)
        if spec is not None:
            envelope.payload["spec"] = spec_to_wire(spec)
        self._writer.write(encode(envelope))
        await self._writer.drain()

        decoder = StreamDecoder()
        ack: Optional[MessageEnvelope] = None
        while ack is None:
            data = await self._reader.read(65536)
            if not data:
                raise RegistrationRefused("hub closed the connection mid-handshake")
            for env in decoder.feed(data):
                if env.msg_type == MsgType.REGISTER_ACK and ack is None:
                    ack = env
                else:
                    self._inbound.put_nowait(env)
        if not ack.payload.get("accepted"):
            raise RegistrationRefused(
                ack.payload.get("reason", "registration rejected"))
        self.entity_id = entity_id
        self.hub_tick_hz = ack.payload.get("tick_hz")
        self._reader_task = asyncio.create_task(self._read_loop(decoder))
        return ack.payload

    async def _read_loop(self, decoder: StreamDecoder) -> None:
        try:
            while True:
                data = await self._reader.read(65536)
                if not data:
                    break
                for env in decoder.feed(data):
                    if (env.msg_type == MsgType.HEARTBEAT
                            and env.payload.get("kind") == "ping"):
                        self.send(make_heartbeat_pong(
                            self._next_seq(), self.now(), env.timestamp))
                        continue
                    self._inbound.put_nowait(env)
        except (ConnectionError, asyncio.CancelledError):
            pass
        finally:
            self.closed.set()

    def send(self, envelope: MessageEnvelope) -> None:
        if self._writer is None or self._writer.is_closing():
            return
        self._writer.write(encode(envelope))

    def send_state(self, state: VehicleState) -> None:
        self.send(make_state_update(self._next_seq(), self.now(), state))

    def send_instruction(self, instr: ControlInstruction) -> None:
        self.send(make_instruction(self._next_seq(), self.now(), instr))

    def send_admin(self, payload: dict) -> None:
        self.send(MessageEnvelope(MsgType.ADMIN_COMMAND, self._next_seq(),
                                  self.now(), payload))

    async def recv(self, timeout: Optional[float] = None) -> MessageEnvelope:
        if timeout is None:
            return await self._inbound.get()
        return await asyncio.wait_for(self._inbound.get(), timeout)

    def drain_inbound(self) -> list[MessageEnvelope]:
        out = []
        while True:
            try:
                out.append(self._inbound.get_nowait())
            except asyncio.QueueEmpty:
                return out

    async def close(self) -> None:
        if self._reader_task is not None:
            self._reader_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await self._reader_task
        if self._writer is not None:
            self._writer.close()
            with contextlib.suppress(ConnectionError, OSError):
                await self._writer.wait_closed()
        self.closed.set()


class AgentProcess:
    """Wall-clock loop for one vehicle agent connected to a live hub."""

    def __init__(self, scenario: ScenarioSpec, index: int, track: Track,
                 transforms, host: str, port: int):
        from ..scenario.assembly import build_agent

        self.scenario = scenario
        self.entry = scenario.platoon[index]
        self.agent: VehicleAgent = build_agent(scenario, index, track,
                                               transforms, scenario.dt)
        self.client = HubClient(host, port)
        self.states_sent = 0

    async def run(self, stop: asyncio.Event,
                  duration: Optional[float] = None) -> None:
        spec = self.entry.spec
        await self.client.connect()
        await self.client.register(
            EntityKind.VEHICLE_AGENT, spec.vehicle_id,
            frame=native_frame(spec.kind), spec=spec)
        dt = self.scenario.dt
        deadline = None if duration is None else self.client.clock() + duration
        next_due = self.client.clock() + dt
        try:
            while not stop.is_set() and not self.client.closed.is_set():
                delay = next_due - self.client.clock()
                if delay > 0:
                    await asyncio.sleep(delay)
                next_due += dt
                if deadline is not None and self.client.clock() >= deadline:
                    break
                for env in self.client.drain_inbound():
                    if env.msg_type == MsgType.INSTRUCTION_DISPATCH:
                        self.agent.deliver(
                            instruction_from_wire(env.payload["instruction"]))
                raw = self.agent.step()
                if raw is not None:
                    self.client.send_state(replace(raw,
                                                   timestamp=self.client.now()))
                    self.states_sent += 1
        finally:
            await self.client.close()


class ControllerProcess:
    """Wall-clock loop hosting control sources fed by pool broadcasts.

    The process that hosts the head profile source also runs the settle
    gate and the trigger latch from the same broadcasts, so the experiment
    needs no extra coordinator: every role derives the phase timing from
    the identical pool stream.
    """

    def __init__(self, scenario: ScenarioSpec, track: Track,
                 sources: list[InstructionSource], host: str, port: int,
                 entity_id: str):
        self.scenario = scenario
        self.track = track
        self.sources = sources
        self.client = HubClient(host, port)
        self.entity_id = entity_id
        self._head_source: Optional[HeadProfileSource] = next(
            (s for s in sources if isinstance(s, HeadProfileSource)), None)
        self._tracker: Optional[ExperimentTracker] = None
        self._t0: Optional[float] = None
        self.pools_seen = 0
        self.instructions_sent = 0

    async def _bind_sources(self, give_up_after: float = 10.0) -> None:
        """Map every hosted source; retries cover agents not yet registered."""
        deadline = self.client.clock() + give_up_after
        pending = list(self.sources)
        while pending:
            src = pending[0]
            channel = ("lateral" if isinstance(src, PurePursuitSource)
                       else "longitudinal")
            self.client.send_admin({"command": "map_logical",
                                    "source_id": src.source_id,
                                    "vehicle_id": src.vehicle_id,
                                    "channel": channel})
            verdict: Optional[bool] = None
            while verdict is None:
                remaining = deadline - self.client.clock()
                if remaining <= 0:
                    raise UnmappedSource(
                        f"hub kept refusing to bind {src.source_id} "
                        f"to {src.vehicle_id}")
                try:
                    env = await self.client.recv(timeout=min(0.5, remaining))
                except asyncio.TimeoutError:
                    break  # ack lost in the noise; ask again
                if (env.msg_type == MsgType.ADMIN_ACK
                        and env.payload.get("source_id") == src.source_id):
                    verdict = bool(env.payload.get("ok"))
            if verdict:
                pending.pop(0)
            elif verdict is False:
                await asyncio.sleep(0.2)  # the vehicle may register shortly

    async def run(self, stop: asyncio.Event,
                  duration: Optional[float] = None) -> None:
        await self.client.connect()
        await self.client.register(EntityKind.CONTROLLER, self.entity_id)
        await self._bind_sources()
        if self._head_source is not None:
            self._tracker = ExperimentTracker(self.scenario, self.track,
                                              1.0 / self.scenario.tick_hz)
        deadline = None if duration is None else self.client.clock() + duration
        dt = 1.0 / self.scenario.tick_hz
        try:
            while not stop.is_set() and not self.client.closed.is_set():
                if deadline is not None and self.client.clock() >= deadline:
                    break
                try:
                    env = await self.client.recv(timeout=0.25)
                except asyncio.TimeoutError:
                    continue
                if env.msg_type != MsgType.STATE_POOL:
                    continue
                self.pools_seen += 1
                pool = {s["vehicle_id"]: state_from_wire(s)
                        for s in env.payload["states"]}
                t = float(env.payload["pool_timestamp"])
                if self._tracker is not None:
                    if self._t0 is None:
                        self._t0 = t
                    phase = self._tracker.update(t - self._t0, pool)
                    if phase.triggered_now:
                        self._head_source.set_trigger(t)
                for src in self.sources:
                    instr = src.step(pool, t, dt)
                    if instr is not None:
                        self.client.send_instruction(instr)
                        self.instructions_sent += 1
        finally:
            await self.client.close()


class ObserverTap:
    """Collects pool broadcasts; the conductor and tests read from it."""

    def __init__(self, host: str, port: int, entity_id: str = "observer"):
        self.client = HubClient(host, port)
        self.entity_id = entity_id

    async def start(self) -> None:
        await self.client.connect()
        await self.client.register(EntityKind.OBSERVER, self.entity_id)

    async def next_pool(self, timeout: float = 2.0):
        """(tick, pool_timestamp, {vehicle_id: unified VehicleState}).

        Raises asyncio.TimeoutError when no pool arrives in time and
        ConnectionError when the hub reports a lost agent.
        """
        while True:
            env = await self.client.recv(timeout=timeout)
            if env.msg_type == MsgType.ERROR:
                if env.payload.get("code") == "agent_lost":
                    raise ConnectionError(env.payload.get("detail", "agent lost"))
                continue
            if env.msg_type != MsgType.STATE_POOL:
                continue
            pool = {s["vehicle_id"]: state_from_wire(s)
                    for s in env.payload["states"]}
            return int(env.payload["tick"]), float(env.payload["pool_timestamp"]), pool

    async def close(self) -> None:
        await self.client.close()
