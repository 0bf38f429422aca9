"""Rebroadcast a recorded pool log to live observers.

The hub writes its broadcast history as a CSV pool log. This module loads
such a log, rebuilds the unified states frame by frame, and serves them to
any connected observer exactly like a live hub would: Register handshake,
then StatePool envelopes on the log's own timeline scaled by a playback
factor. Factor 0 degenerates to a single broadcast of the final frame.
"""

import asyncio
import contextlib
import csv
import logging
import time
from dataclasses import dataclass
from typing import Optional

from ..core import Frame, Pose, Track, VehicleState
from ..errors import BadLog
from ..protocol import (
    MessageEnvelope,
    MsgType,
    StreamDecoder,
    encode,
    make_state_pool,
)
from .core import POOL_LOG_HEADER

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReplayFrame:
    tick: int
    time: float
    states: list[VehicleState]


def load_pool_log(path, track: Track) -> list[ReplayFrame]:
    """Parse a pool log into broadcast-ready frames; raises BadLog."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise BadLog(f"{path}: empty file") from None
            if header != POOL_LOG_HEADER:
                shown = ",".join(header[:4])[:60]
                raise BadLog(f"{path}: not a pool log (header begins "
                             f"{shown!r}, expected "
                             f"{','.join(POOL_LOG_HEADER)!r})")
            rows = list(reader)
    except OSError as exc:
        raise BadLog(f"cannot read pool log {path}: {exc}") from None

    frames: list[ReplayFrame] = []
    current: Optional[ReplayFrame] = None
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(POOL_LOG_HEADER):
            raise BadLog(f"{path}:{lineno}: expected "
                         f"{len(POOL_LOG_HEADER)} fields, got {len(row)}")
        try:
            tick = int(row[0])
            t = float(row[1])
            vehicle_id = row[2]
            arc = float(row[3])
            speed = float(row[4])
        except ValueError as exc:
            raise BadLog(f"{path}:{lineno}: {exc}") from None
        if current is None or tick != current.tick:
            if current is not None and tick < current.tick:
                raise BadLog(f"{path}:{lineno}: tick {tick} goes backwards")
            current = ReplayFrame(tick, t, [])
            frames.append(current)
        x, y = track.point_at(arc)
        current.states.append(VehicleState(
            vehicle_id, Frame.UNIFIED, Pose(x, y, track.heading_at(arc)),
            speed, arc_position=arc, timestamp=t, seq=tick))
    if not frames:
        raise BadLog(f"{path}: log holds no rows")
    return frames


class ReplayServer:
    """Serve one recorded broadcast sequence over the stream carrier."""

    def __init__(self, frames: list[ReplayFrame], factor: float = 1.0,
                 host: str = "127.0.0.1", port: int = 0):
        if factor < 0:
            raise BadLog(f"playback factor must be >= 0, got {factor}")
        self.frames = frames
        self.factor = factor
        self.host = host
        self._port = port
        self._server: Optional[asyncio.base_events.Server] = None
        self._writers: dict[int, tuple[asyncio.StreamWriter, list[int]]] = {}
        self._next_session = 0
        self.observer_count = 0
        self.broadcast_count = 0

    @property
    def port(self) -> int:
        return self._port

    async def start(self) -> None:
        self._server = await asyncio.start_server(
            self._handle, self.host, self._port)
        self._port = self._server.sockets[0].getsockname()[1]
        log.info("replay serving on %s:%d (%d frames, factor %s)",
                 self.host, self._port, len(self.frames), self.factor)

    async def _handle(self, reader: asyncio.StreamReader,
                      writer: asyncio.StreamWriter) -> None:
        key = self._next_session
        self._next_session += 1
        decoder = StreamDecoder()
        registered = False
        try:
            while True:
                data = await reader.read(65536)
                if not data:
                    break
                for env in decoder.feed(data):
                    if env.msg_type == MsgType.REGISTER and not registered:
                        registered = True
                        writer.write(encode(MessageEnvelope(
                            MsgType.REGISTER_ACK, 1, 0.0,
                            {"accepted": True,
                             "entity_id": env.payload["entity_id"],
                             "tick_hz": None})))
                        await writer.drain()
                        self._writers[key] = (writer, [1])
                        self.observer_count += 1
                    # anything else from a replay viewer is ignored
        except Exception:
            pass
        finally:
            self._writers.pop(key, None)
            writer.close()
            with contextlib.suppress(Exception):
                await writer.wait_closed()

    async def _broadcast(self, frame: ReplayFrame) -> None:
        dead = []
        for key, (writer, seq_box) in list(self._writers.items()):
            seq_box[0] += 1
            envelope = make_state_pool(seq_box[0], frame.time, frame.tick,
                                       frame.states)
            try:
                writer.write(encode(envelope))
                await writer.drain()
            except (ConnectionError, OSError):
                dead.append(key)
        for key in dead:
            self._writers.pop(key, None)
        self.broadcast_count += 1

    async def play(self, wait_for: int = 0, wait_timeout: float = 30.0) -> int:
        """Broadcast the loaded frames on schedule; returns frames sent.

        `wait_for` holds playback until that many observers registered.
        """
        deadline = time.monotonic() + wait_timeout
        while self.observer_count < wait_for:
            if time.monotonic() > deadline:
                raise asyncio.TimeoutError(
                    f"no observer connected within {wait_timeout:.0f} s")
            await asyncio.sleep(0.01)

        if self.factor == 0:
            await self._broadcast(self.frames[-1])
            return 1

        start_wall = time.monotonic()
        t0 = self.frames[0].time
        for frame in self.frames:
            due = start_wall + (frame.time - t0) / self.factor
            delay = due - time.monotonic()
            if delay > 0:
                await asyncio.sleep(delay)
            await self._broadcast(frame)
        return len(self.frames)

    async def stop(self) -> None:
        for key, (writer, _) in list(self._writers.items()):
            writer.close()
            with contextlib.suppress(Exception):
                await writer.wait_closed()
        self._writers.clear()
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
