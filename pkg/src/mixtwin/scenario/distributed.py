"""Wall-clock experiment conductor: hub, agents, and controllers over TCP.

`run_distributed` stands up the full topology inside one process: a hub
server on a loopback socket, one agent task per vehicle, and the control
sources split across controller tasks. Every component talks to the others
only through the wire protocol, so the same code paths serve hand-started
multi-process topologies via the hub/agent/controller launchers.

The conductor itself is a pool observer. It runs the same settle and
trigger bookkeeping as the head controller, records the broadcast series,
and assembles the identical report payload the lockstep runner produces.
Wall-clock runs are not byte-reproducible; reproducibility is the lockstep
runner's contract.
"""

import asyncio
import contextlib
import dataclasses
import logging
import time
from typing import Optional

from ..core import default_transforms
from ..errors import AgentLost, ConfigError
from ..hub import AgentProcess, ControllerProcess, HubCore, HubServer, ObserverTap
from .assembly import (
    ExperimentTracker,
    build_lateral_source,
    build_longitudinal_source,
)
from .lockstep import HORIZON_MARGIN_S, RunResult, build_result
from .spec import ScenarioSpec

log = logging.getLogger(__name__)

STALE_AFTER_S = 2.0  # a vehicle whose reports stop this long counts as lost


def split_sources(scenario: ScenarioSpec, track, dt: float,
                  controllers: int) -> list[list]:
    """Partition control sources into controller-process loads.

    The head profile source always rides alone in the first load so the
    process that owns the perturbation also owns its trigger bookkeeping;
    follower sources spread round-robin over the rest. A vehicle's lateral
    source lives with its longitudinal one.
    """
    if controllers < 1:
        raise ConfigError("need at least one controller process")
    n = len(scenario.platoon)
    loads: list[list] = [[] for _ in range(min(controllers, max(1, n)))]
    loads[0].append(build_longitudinal_source(scenario, 0, track, dt))
    loads[0].append(build_lateral_source(scenario, 0, track))
    for i in range(1, n):
        bucket = loads[1 + (i - 1) % (len(loads) - 1)] if len(loads) > 1 else loads[0]
        bucket.append(build_longitudinal_source(scenario, i, track, dt))
        bucket.append(build_lateral_source(scenario, i, track))
    return [load for load in loads if load]


def parse_endpoint(endpoint: str) -> tuple[str, int]:
    """Split "host:port"; raises ConfigError on anything else."""
    host, sep, port_text = endpoint.rpartition(":")
    if not sep or not host:
        raise ConfigError(f"endpoint {endpoint!r} must look like host:port")
    try:
        return host, int(port_text)
    except ValueError:
        raise ConfigError(f"endpoint {endpoint!r} has a non-numeric port") from None


async def run_distributed_async(
    scenario: ScenarioSpec,
    host: str = "127.0.0.1",
    port: int = 0,
    hub_endpoint: Optional[str] = None,
    controllers: int = 2,
    wall_cap_s: Optional[float] = None,
    stale_after_s: float = STALE_AFTER_S,
) -> RunResult:
    """Execute one scenario over live transport; returns the result.

    Without `hub_endpoint` the conductor owns everything: it binds its own
    loopback hub, then spawns the agents and controllers against it. With
    `hub_endpoint` ("host:port") it attaches the agents, controllers, and
    its observer to an already-running hub instead; that hub's pool log and
    counters are out of reach, so the report carries only the observed series.

    Raises SettlingTimeout when the platoon never reaches formation within
    the scenario's budget and AgentLost when a vehicle agent drops out or
    stops publishing mid-run.
    """
    problems = scenario.validate()
    if problems:
        raise ConfigError("scenario invalid: " + "; ".join(problems))
    track = scenario.build_track()
    transforms = default_transforms()
    dt = scenario.dt
    ids = [e.spec.vehicle_id for e in scenario.platoon]

    core: Optional[HubCore] = None
    server: Optional[HubServer] = None
    if hub_endpoint is None:
        core = HubCore(track, transforms=transforms, tick_hz=scenario.tick_hz)
        server = HubServer(core, host=host, stream_port=port)
        await server.start()
        hub_host, hub_port = host, server.stream_port
    else:
        hub_host, hub_port = parse_endpoint(hub_endpoint)

    stop = asyncio.Event()
    tasks: list[asyncio.Task] = []
    tap: Optional[ObserverTap] = None
    try:
        agents = [AgentProcess(scenario, i, track, transforms,
                               hub_host, hub_port)
                  for i in range(len(ids))]
        for proc in agents:
            tasks.append(asyncio.create_task(proc.run(stop)))

        if core is not None:
            deadline = time.monotonic() + 10.0
            while not all(core.is_registered(v) for v in ids):
                for task in tasks:
                    if task.done() and task.exception() is not None:
                        raise task.exception()
                if time.monotonic() > deadline:
                    raise AgentLost("vehicle agents never finished registering")
                await asyncio.sleep(0.01)

        for k, load in enumerate(split_sources(scenario, track, dt, controllers)):
            proc = ControllerProcess(scenario, track, load, hub_host,
                                     hub_port, entity_id=f"ctl.{k}")
            tasks.append(asyncio.create_task(proc.run(stop)))

        tap = ObserverTap(hub_host, hub_port, "run.observer")
        await tap.start()

        tracker = ExperimentTracker(scenario, track, dt)
        horizon_s = (scenario.settle.timeout_s
                     + scenario.laps * track.lap_length / scenario.base_speed
                     + scenario.perturbation.segment.total(scenario.base_speed)
                     + HORIZON_MARGIN_S)
        start_wall = time.monotonic()
        t0: Optional[float] = None
        freshness: dict[str, tuple[int, float]] = {}  # vid -> (seq, wall)

        while True:
            try:
                _, pool_ts, pool = await tap.next_pool(timeout=stale_after_s)
            except asyncio.TimeoutError:
                raise AgentLost("pool broadcasts stopped arriving") from None
            except ConnectionError as exc:
                raise AgentLost(str(exc)) from None
            wall = time.monotonic()

            for vid in ids:
                state = pool.get(vid)
                if state is None:
                    if vid in freshness:
                        raise AgentLost(f"vehicle {vid} vanished from the pool")
                    if wall - start_wall > stale_after_s:
                        raise AgentLost(f"vehicle {vid} never reported a state")
                    continue
                last = freshness.get(vid)
                if last is None or state.seq > last[0]:
                    freshness[vid] = (state.seq, wall)
                elif wall - last[1] > stale_after_s:
                    raise AgentLost(f"vehicle {vid} stopped publishing")

            if t0 is None:
                if any(vid not in pool for vid in ids):
                    continue
                t0 = pool_ts
            tracker.update(pool_ts - t0, pool)

            if tracker.done:
                break
            if wall_cap_s is not None and wall - start_wall >= wall_cap_s:
                log.info("wall-clock cap reached after %.1f s", wall - start_wall)
                break
            if pool_ts - t0 > horizon_s:
                log.warning("horizon exceeded at sim t=%.1f s", pool_ts - t0)
                break
    finally:
        stop.set()
        if tap is not None:
            await tap.close()
        if tasks:
            _, laggards = await asyncio.wait(tasks, timeout=1.0)
            for task in laggards:
                task.cancel()
            for task in tasks:
                with contextlib.suppress(asyncio.CancelledError, Exception):
                    await task
        if server is not None:
            await server.stop()

    counters = dataclasses.asdict(core.counters) if core is not None else {}
    return build_result(tracker, [], counters, core)


def run_distributed(scenario: ScenarioSpec, **kwargs) -> RunResult:
    """Synchronous wrapper around `run_distributed_async`."""
    return asyncio.run(run_distributed_async(scenario, **kwargs))
