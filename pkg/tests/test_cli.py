"""Console entry points: argument wiring, YAML configs, subprocess runs."""
import json
import socket
import subprocess
import sys

import pytest

from capshare.configio import ServicePorts, dump_scenario, load_scenario
from capshare.cli import bench_main, main, odu_sim_main, policy_main, rapp_main
from capshare.nrm import ConfigurationError
from capshare.odu.sim import read_truth
from capshare.rapp.loop import read_loop_log

from conftest import reference_scenario


def free_ports() -> ServicePorts:
    """Three currently-free loopback ports for an isolated server trio."""
    sockets = [socket.socket() for _ in range(3)]
    try:
        for sock in sockets:
            sock.bind(("127.0.0.1", 0))
        netconf, pm_files, callback = (s.getsockname()[1] for s in sockets)
    finally:
        for sock in sockets:
            sock.close()
    return ServicePorts(netconf=netconf, pm_files=pm_files, callback=callback)


def write_wire_config(path, noise_std=0.0):
    ports = free_ports()
    path.write_text(dump_scenario(reference_scenario(noise_std=noise_std), ports))
    return ports


@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory):
    """Small-budget policies shared by the CLI tests needing real files."""
    root = tmp_path_factory.mktemp("cli_policies")
    config = root / "scenario.yaml"
    config.write_text(dump_scenario(reference_scenario()))
    out = root / "policies"
    code = policy_main(
        [
            "train",
            "--config",
            str(config),
            "--out",
            str(out),
            "--seed",
            "3",
            "--restarts",
            "1",
            "--train-steps",
            "250",
        ]
    )
    assert code == 0
    return out


class TestConfigIO:
    def test_shipped_scenario_parses(self):
        scenario, ports = load_scenario("configs/scenario.yaml")
        assert scenario.cell.capacity_mbps == 117.0
        assert [t.sla.sagbr_mbps for t in scenario.tenants] == [70.2, 46.8]
        assert (ports.netconf, ports.pm_files, ports.callback) == (8300, 8301, 8302)

    def test_round_trip(self, tmp_path):
        ports = ServicePorts(netconf=1111, pm_files=2222, callback=3333)
        scenario = reference_scenario()
        path = tmp_path / "s.yaml"
        path.write_text(dump_scenario(scenario, ports))
        loaded, loaded_ports = load_scenario(path)
        assert loaded == scenario and loaded_ports == ports

    def test_missing_key_reported(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("cell:\n  cell_id: c\n  capacity_mbps: 10\n")
        with pytest.raises(ConfigurationError, match="total_prb"):
            load_scenario(path)

    def test_invalid_yaml_reported(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("cell: [unclosed\n")
        with pytest.raises(ConfigurationError, match="YAML"):
            load_scenario(path)

    def test_invalid_scenario_values_reported(self, tmp_path):
        path = tmp_path / "bad.yaml"
        text = dump_scenario(reference_scenario())
        path.write_text(text.replace("initial_ratio: 60", "initial_ratio: 90"))
        with pytest.raises(ConfigurationError, match="initial"):
            load_scenario(path)


class TestPolicyCli:
    def test_train_writes_policy_files(self, trained_dir):
        names = sorted(p.name for p in trained_dir.iterdir())
        assert names == ["policy_snssai_1.json", "policy_snssai_2.json"]

    def test_eval_prints_comparison(self, trained_dir, tmp_path, capsys):
        config = tmp_path / "scenario.yaml"
        config.write_text(dump_scenario(reference_scenario()))
        code = policy_main(
            [
                "eval",
                "--policy",
                str(trained_dir),
                "--steps",
                "80",
                "--config",
                str(config),
            ]
        )
        out = capsys.readouterr().out
        assert code == 0
        assert "trained mean reward" in out and "ratio:" in out


class TestDispatcher:
    def test_unknown_program_rejected(self, capsys):
        assert main(["no-such-tool"]) == 2
        assert "usage" in capsys.readouterr().err

    def test_programs_reachable_via_module(self):
        result = subprocess.run(
            [sys.executable, "-m", "capshare.cli", "policy", "--help"],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
        assert "train" in result.stdout and "eval" in result.stdout


class TestWirePair:
    def test_odu_and_rapp_subprocesses_complete_a_run(self, trained_dir, tmp_path):
        config = tmp_path / "scenario.yaml"
        write_wire_config(config)
        truth_path = tmp_path / "truth.jsonl"
        log_path = tmp_path / "loop.jsonl"
        steps = 4
        odu = subprocess.Popen(
            [
                sys.executable,
                "-m",
                "capshare.cli",
                "odu-sim",
                "serve",
                "--config",
                str(config),
                "--seed",
                "2",
                "--accel",
                "0",
                "--steps",
                str(steps),
                "--truth-out",
                str(truth_path),
            ]
        )
        rapp = subprocess.Popen(
            [
                sys.executable,
                "-m",
                "capshare.cli",
                "rapp",
                "run",
                "--config",
                str(config),
                "--policies",
                str(trained_dir),
                "--log",
                str(log_path),
                "--steps",
                str(steps),
            ]
        )
        assert odu.wait(timeout=60) == 0
        assert rapp.wait(timeout=60) == 0
        with open(truth_path) as handle:
            truth = read_truth(handle)
        records = read_loop_log(log_path)
        assert len(truth) == steps
        assert len(records) == steps
        # The controller's ratio choices are what the simulator ran with
        # on the following step.
        for chosen, next_step in zip(records, truth[1:]):
            assert next_step.ratios == tuple(
                chosen.ratios[sid] for sid in next_step.snssai_ids
            )


class TestBenchCli:
    def test_run_then_report(self, trained_dir, tmp_path, capsys):
        config = tmp_path / "scenario.yaml"
        write_wire_config(config)
        out_dir = tmp_path / "out"
        code = bench_main(
            [
                "run",
                "--config",
                str(config),
                "--policies",
                str(trained_dir),
                "--days",
                str(4 / 480),
                "--seed",
                "1",
                "--out",
                str(out_dir),
            ]
        )
        run_output = capsys.readouterr().out
        assert code == 0
        assert "satisfaction ratio tenant 1" in run_output
        assert "capacity utilization" in run_output

        code = bench_main(["report", "--csv", str(out_dir / "timeseries.csv")])
        report_output = capsys.readouterr().out
        assert code == 0
        # The recomputation prints the same metric values the run printed.
        for line in report_output.strip().splitlines():
            assert line in run_output
