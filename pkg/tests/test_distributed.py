"""Wall-clock conductor: topology split, health checks, full small runs."""

import asyncio
import json

import pytest

from mixtwin.errors import AgentLost, ConfigError
from mixtwin.hub import AgentProcess, HubCore, HubServer
from mixtwin.scenario import scenario_from_dict
from mixtwin.scenario import distributed
from mixtwin.scenario.distributed import (
    parse_endpoint,
    run_distributed,
    run_distributed_async,
    split_sources,
)
from mixtwin.core import stadium_track


def run(coro, timeout=90.0):
    return asyncio.run(asyncio.wait_for(coro, timeout))


def small_track_file(tmp_path):
    """A 60 m oval so full laps finish in seconds of wall time."""
    track = stadium_track(lap_length=60.0, straight_length=15.0)
    pts = [list(p) for p in track.waypoints.tolist()]
    pts.append(pts[0])
    path = tmp_path / "short_oval.json"
    path.write_text(json.dumps({"waypoints": pts,
                                "named_points": track.named_points}))
    return str(path)


def mini_scenario(tmp_path=None, vehicles=2, laps=4, **overrides):
    platoon = [{"vehicle_id": "1", "kind": "EmulatedPhysical",
                "role": "Head", "source": "HeadProfile"}]
    for i in range(2, vehicles + 1):
        platoon.append({"vehicle_id": str(i), "kind": "Virtual",
                        "role": "CAV", "source": "CACC"})
    doc = {
        "name": "dist-mini",
        "seed": 17,
        "laps": laps,
        "base_speed_kmh": 10.08,
        "settle": {"band_frac": 0.05, "hold_s": 1.0, "timeout_s": 30.0},
        "perturbation": {
            "kind": "HalfSine", "trigger_point": "C", "trigger_lap": 1,
            "duration": 3.5, "amplitude_kmh": 3.02,
        },
        "platoon": platoon,
    }
    if tmp_path is not None:
        doc["track_file"] = small_track_file(tmp_path)
    doc.update(overrides)
    return scenario_from_dict(doc)


class TestParseEndpoint:
    def test_host_port(self):
        assert parse_endpoint("example.test:8040") == ("example.test", 8040)

    def test_no_colon(self):
        with pytest.raises(ConfigError):
            parse_endpoint("nowhere")

    def test_bad_port(self):
        with pytest.raises(ConfigError):
            parse_endpoint("host:abc")


class TestSplitSources:
    def make(self, vehicles=5):
        scenario = mini_scenario(vehicles=vehicles)
        track = scenario.build_track()
        return scenario, track

    def coverage(self, loads):
        """Vehicles per load; a vehicle's sources must stay together."""
        return [sorted({s.vehicle_id for s in load}) for load in loads]

    def test_zero_controllers_rejected(self):
        scenario, track = self.make()
        with pytest.raises(ConfigError):
            split_sources(scenario, track, scenario.dt, 0)

    def test_head_sources_in_first_load(self):
        scenario, track = self.make()
        loads = split_sources(scenario, track, scenario.dt, 2)
        assert all(s.vehicle_id == "1" for s in loads[0]), (
            f"load 0 must hold only head sources, got "
            f"{[(s.source_id, s.vehicle_id) for s in loads[0]]}")

    def test_followers_round_robin(self):
        scenario, track = self.make(vehicles=5)
        loads = split_sources(scenario, track, scenario.dt, 3)
        assert len(loads) == 3
        assert self.coverage(loads)[1:] == [["2", "4"], ["3", "5"]]

    def test_single_controller_takes_everything(self):
        scenario, track = self.make(vehicles=4)
        loads = split_sources(scenario, track, scenario.dt, 1)
        assert len(loads) == 1
        assert self.coverage(loads) == [["1", "2", "3", "4"]]

    def test_every_vehicle_exactly_once(self):
        scenario, track = self.make(vehicles=5)
        loads = split_sources(scenario, track, scenario.dt, 4)
        flat = [vid for load in self.coverage(loads) for vid in load]
        assert sorted(flat) == ["1", "2", "3", "4", "5"], (
            "each vehicle's sources must land in exactly one load")


class TestConductor:
    def test_wall_cap_partial_run_is_healthy(self, tmp_path):
        scenario = mini_scenario(tmp_path, laps=4)
        result = run_distributed(scenario, wall_cap_s=2.5)
        assert result.tick_count >= 80, (
            f"expected ~125 pools in 2.5 s at 50 Hz, saw {result.tick_count}")
        assert result.counters.get("watchdog_trips", 0) == 0
        assert result.counters.get("stale_state_drops", 0) == 0
        assert result.series.vehicle_ids == ["1", "2"]
        final_gap = result.series.gaps[-1, 0]
        assert 15.0 < final_gap < 25.0, (
            f"follower gap should stay near 20 m, got {final_gap:.2f}")

    def test_completion_on_short_track(self, tmp_path):
        scenario = mini_scenario(tmp_path, laps=1)
        result = run_distributed(scenario)
        assert result.laps_completed >= 1.0, (
            f"run returned before the lap finished: {result.laps_completed}")
        assert result.settle_time is not None and result.settle_time < 10.0
        assert result.trigger_time is not None
        assert result.collisions == []
        # the half-sine should be visible in the head's recorded speeds
        assert float(result.series.speeds[:, 0].max()) > 3.2
        assert result.counters.get("watchdog_trips", 0) == 0

    def test_attach_to_external_hub(self, tmp_path):
        scenario = mini_scenario(tmp_path, laps=4)

        async def scenario_run():
            core = HubCore(scenario.build_track(), tick_hz=scenario.tick_hz,
                           record=False)
            server = HubServer(core)
            await server.start()
            try:
                endpoint = f"{server.host}:{server.stream_port}"
                return await run_distributed_async(
                    scenario, hub_endpoint=endpoint, wall_cap_s=2.5)
            finally:
                await server.stop()

        result = run(scenario_run())
        assert result.tick_count >= 80
        assert result.hub is None, "an attached hub is not owned by the run"

    def test_agent_vanishing_raises_agent_lost(self, tmp_path, monkeypatch):
        scenario = mini_scenario(tmp_path, laps=4)

        class DyingAgent(AgentProcess):
            async def run(self, stop, duration=None):
                await super().run(stop, duration=1.2)

        def factory(spec, index, track, transforms, host, port):
            cls = DyingAgent if index == len(spec.platoon) - 1 else AgentProcess
            return cls(spec, index, track, transforms, host, port)

        monkeypatch.setattr(distributed, "AgentProcess", factory)
        with pytest.raises(AgentLost):
            run_distributed(scenario, wall_cap_s=15.0)

    def test_rejects_zero_controllers(self, tmp_path):
        scenario = mini_scenario(tmp_path)
        with pytest.raises(ConfigError):
            run_distributed(scenario, controllers=0)
