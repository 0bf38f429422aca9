"""Operator command line: run experiments, validate specs, serve, replay.

One binary, one role per invocation:

    mixtwin run SPEC        execute a scenario and write its report
    mixtwin validate SPEC   static checks only, print every violation
    mixtwin replay LOG      rebroadcast a recorded pool log to observers
    mixtwin hub             serve a standalone hub
    mixtwin agent SPEC      run vehicle agents against a hub
    mixtwin controller SPEC run one controller load against a hub

Exit codes: 0 success; 1 configuration or input problem (message names the
offending file, line, or field); 2 the platoon never settled; 3 a vehicle
agent was lost mid-run.

Every flag with a MIXTWIN_* name below can also come from the environment;
an explicit flag wins over the environment value.

    --mode  MIXTWIN_MODE      --hub  MIXTWIN_HUB    --seed MIXTWIN_SEED
    --out   MIXTWIN_OUT       --host MIXTWIN_HOST   --port MIXTWIN_PORT
    --factor MIXTWIN_FACTOR
"""

import argparse
import asyncio
import contextlib
import dataclasses
import logging
import os
import sys
from typing import Optional

from .core import default_transforms, stadium_track
from .errors import AgentLost, ConfigError, MixtwinError, SettlingTimeout
from .hub import AgentProcess, ControllerProcess, HubCore, HubServer
from .hub.replay import ReplayServer, load_pool_log
from .scenario import load_scenario, run_scenario, write_report
from .scenario.distributed import (
    parse_endpoint,
    run_distributed,
    split_sources,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SETTLE = 2
EXIT_AGENT_LOST = 3

ENV_PREFIX = "MIXTWIN_"


def _env(name: str, fallback: Optional[str] = None) -> Optional[str]:
    return os.environ.get(ENV_PREFIX + name, fallback)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixtwin",
        description="Mixed virtual/emulated-physical platooning testbed.",
        epilog="Environment overrides: MIXTWIN_MODE, MIXTWIN_HUB, "
               "MIXTWIN_SEED, MIXTWIN_OUT, MIXTWIN_HOST, MIXTWIN_PORT, "
               "MIXTWIN_FACTOR (flags win).")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for info, -vv for debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scenario and write a report")
    run_p.add_argument("spec", help="scenario JSON file")
    run_p.add_argument("--mode", choices=("lockstep", "distributed"),
                       default=_env("MODE", "lockstep"),
                       help="lockstep: deterministic in-process clock; "
                            "distributed: wall clock over TCP")
    run_p.add_argument("--hub", default=_env("HUB"),
                       help="host:port of a running hub (distributed mode); "
                            "omit to spawn one internally")
    run_p.add_argument("--seed", default=_env("SEED"),
                       help="override the scenario seed")
    run_p.add_argument("--out", default=_env("OUT"),
                       help="report directory (default runs/<scenario name>)")
    run_p.add_argument("--controllers", type=int, default=2,
                       help="controller processes in distributed mode")

    val_p = sub.add_parser("validate", help="static checks, no execution")
    val_p.add_argument("spec", help="scenario JSON file")

    rep_p = sub.add_parser("replay", help="rebroadcast a recorded pool log")
    rep_p.add_argument("pool_log", help="pool_log.csv from a previous run")
    rep_p.add_argument("--factor", type=float,
                       default=float(_env("FACTOR", "1.0")),
                       help="playback speed multiplier; 0 sends only the "
                            "final frame and exits")
    rep_p.add_argument("--host", default=_env("HOST", "127.0.0.1"))
    rep_p.add_argument("--port", type=int, default=int(_env("PORT", "0")))
    rep_p.add_argument("--wait", type=int, default=1,
                       help="observers to wait for before playback starts")
    rep_p.add_argument("--scenario", default=None,
                       help="scenario JSON supplying the track geometry "
                            "(default: the standard oval)")

    hub_p = sub.add_parser("hub", help="serve a standalone hub until Ctrl-C")
    hub_p.add_argument("--host", default=_env("HOST", "127.0.0.1"))
    hub_p.add_argument("--port", type=int, default=int(_env("PORT", "0")))
    hub_p.add_argument("--socket-port", type=int, default=None,
                       help="also serve browser clients on this port "
                            "(0 picks a free one)")
    hub_p.add_argument("--scenario", default=None,
                       help="scenario JSON supplying track and tick rate")

    agent_p = sub.add_parser("agent", help="run vehicle agents against a hub")
    agent_p.add_argument("spec", help="scenario JSON file")
    agent_p.add_argument("--hub", default=_env("HUB"), required=_env("HUB") is None,
                         help="host:port of the hub")
    agent_p.add_argument("--index", type=int, default=None,
                         help="platoon index of the one vehicle to run "
                              "(default: all vehicles in this process)")
    agent_p.add_argument("--seed", default=_env("SEED"),
                         help="override the scenario seed")

    ctl_p = sub.add_parser("controller",
                           help="run one controller load against a hub")
    ctl_p.add_argument("spec", help="scenario JSON file")
    ctl_p.add_argument("--hub", default=_env("HUB"), required=_env("HUB") is None,
                       help="host:port of the hub")
    ctl_p.add_argument("--controllers", type=int, default=2,
                       help="total controller processes in the topology")
    ctl_p.add_argument("--rank", type=int, default=0,
                       help="which of the controller loads this process takes")

    return parser


def _load_spec(path: str, seed_override: Optional[str]):
    scenario = load_scenario(path)
    if seed_override is not None:
        try:
            seed = int(seed_override)
        except ValueError:
            raise ConfigError(f"--seed: {seed_override!r} is not an integer")
        scenario = dataclasses.replace(scenario, seed=seed)
    return scenario


def cmd_run(args) -> int:
    scenario = _load_spec(args.spec, args.seed)
    if args.mode == "lockstep":
        result = run_scenario(scenario)
    else:
        result = run_distributed(scenario, hub_endpoint=args.hub,
                                 controllers=args.controllers)
    out_dir = args.out or os.path.join("runs", scenario.name)
    paths = write_report(result, out_dir)
    print(f"run complete: {result.tick_count} ticks, "
          f"{result.laps_completed:.2f} laps, "
          f"{len(result.collisions)} collision event(s)")
    print(f"report: {paths['summary']}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        scenario = load_scenario(args.spec)
    except ConfigError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    problems = scenario.validate()
    for problem in problems:
        print(f"violation: {problem}")
    if problems:
        return EXIT_CONFIG
    print(f"{args.spec}: ok")
    return EXIT_OK


def cmd_replay(args) -> int:
    track = (load_scenario(args.scenario).build_track()
             if args.scenario else stadium_track())
    frames = load_pool_log(args.pool_log, track)

    async def serve() -> int:
        server = ReplayServer(frames, factor=args.factor,
                              host=args.host, port=args.port)
        await server.start()
        print(f"replaying {len(frames)} frames on "
              f"{server.host}:{server.port} at factor {args.factor}",
              flush=True)
        try:
            sent = await server.play(wait_for=args.wait)
        finally:
            await server.stop()
        print(f"replay done: {sent} broadcast(s)")
        return EXIT_OK

    try:
        return asyncio.run(serve())
    except asyncio.TimeoutError as exc:
        print(f"replay aborted: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def cmd_hub(args) -> int:
    if args.scenario:
        scenario = load_scenario(args.scenario)
        track, tick_hz = scenario.build_track(), scenario.tick_hz
    else:
        track, tick_hz = stadium_track(), 50.0

    async def serve() -> int:
        core = HubCore(track, tick_hz=tick_hz)
        server = HubServer(core, host=args.host, stream_port=args.port,
                           socket_port=args.socket_port)
        await server.start()
        endpoint = f"{server.host}:{server.stream_port}"
        extra = (f", browser socket {server.socket_port}"
                 if server.socket_port else "")
        print(f"hub serving on {endpoint}{extra} "
              f"at {tick_hz:g} Hz (Ctrl-C to stop)", flush=True)
        try:
            await asyncio.Event().wait()
        finally:
            await server.stop()
        return EXIT_OK

    try:
        return asyncio.run(serve())
    except KeyboardInterrupt:
        print("hub stopped")
        return EXIT_OK


def cmd_agent(args) -> int:
    scenario = _load_spec(args.spec, args.seed)
    host, port = parse_endpoint(args.hub)
    track = scenario.build_track()
    transforms = default_transforms()
    n = len(scenario.platoon)
    if args.index is not None and not 0 <= args.index < n:
        raise ConfigError(f"--index: {args.index} outside platoon 0..{n - 1}")
    indices = [args.index] if args.index is not None else list(range(n))

    async def serve() -> int:
        stop = asyncio.Event()
        procs = [AgentProcess(scenario, i, track, transforms, host, port)
                 for i in indices]
        names = ", ".join(p.entry.spec.vehicle_id for p in procs)
        print(f"agents {names} joining {args.hub} (Ctrl-C to stop)", flush=True)
        tasks = [asyncio.create_task(p.run(stop)) for p in procs]
        hub_lost = False
        try:
            await asyncio.gather(*tasks)
            # run() returns without an operator stop: the hub went away
            hub_lost = not stop.is_set()
        finally:
            stop.set()
            for task in tasks:
                task.cancel()
            for task in tasks:
                with contextlib.suppress(asyncio.CancelledError, Exception):
                    await task
        return EXIT_AGENT_LOST if hub_lost else EXIT_OK

    try:
        return asyncio.run(serve())
    except KeyboardInterrupt:
        print("agents stopped")
        return EXIT_OK


def cmd_controller(args) -> int:
    scenario = _load_spec(args.spec, None)
    host, port = parse_endpoint(args.hub)
    track = scenario.build_track()
    loads = split_sources(scenario, track, scenario.dt, args.controllers)
    if not 0 <= args.rank < len(loads):
        raise ConfigError(f"--rank: {args.rank} outside 0..{len(loads) - 1}")
    sources = loads[args.rank]

    async def serve() -> int:
        stop = asyncio.Event()
        proc = ControllerProcess(scenario, track, sources, host, port,
                                 entity_id=f"ctl.{args.rank}")
        names = ", ".join(s.source_id for s in sources)
        print(f"controller rank {args.rank} hosting {names} "
              f"against {args.hub} (Ctrl-C to stop)", flush=True)
        await proc.run(stop)
        return EXIT_AGENT_LOST if not stop.is_set() else EXIT_OK

    try:
        return asyncio.run(serve())
    except KeyboardInterrupt:
        print("controller stopped")
        return EXIT_OK


_COMMANDS = {
    "run": cmd_run,
    "validate": cmd_validate,
    "replay": cmd_replay,
    "hub": cmd_hub,
    "agent": cmd_agent,
    "controller": cmd_controller,
}


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SettlingTimeout as exc:
        print(f"settling timeout: {exc}", file=sys.stderr)
        return EXIT_SETTLE
    except AgentLost as exc:
        print(f"agent lost: {exc}", file=sys.stderr)
        return EXIT_AGENT_LOST
    except MixtwinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"connection error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
