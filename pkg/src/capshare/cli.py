"""Command-line front ends: odu-sim, rapp, policy, bench.

Each console script gets its own main; ``python3 -m capshare.cli`` also
works, with the program name as the first argument, which is how the
bench orchestrator spawns its children without relying on installed
scripts.
"""
from __future__ import annotations

import argparse
import json
import logging
import signal
import socket
import sys
import threading
import time
from pathlib import Path
from typing import Optional

import numpy as np

log = logging.getLogger(__name__)


def _setup_logging(verbose: bool = False):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


def _stop_on_signals() -> threading.Event:
    stop = threading.Event()

    def handler(signum, frame):
        log.info("signal %d, shutting down", signum)
        stop.set()

    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, handler)
    return stop


def _wait_for_port(
    host: str, port: int, timeout_s: float, stop: Optional[threading.Event] = None
) -> bool:
    """Poll a TCP endpoint until it accepts, the timeout passes, or stop."""
    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        if stop is not None and stop.is_set():
            return False
        try:
            with socket.create_connection((host, port), timeout=0.25):
                return True
        except OSError:
            time.sleep(0.1)
    return False


# ---------------------------------------------------------------- odu-sim


def odu_sim_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="odu-sim", description="Simulated O-DU: NETCONF-lite + PM file services."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    serve = sub.add_parser("serve", help="run the O-DU for a number of periods")
    serve.add_argument("--config", required=True, help="scenario YAML")
    serve.add_argument("--seed", type=int, default=0)
    serve.add_argument(
        "--accel",
        type=float,
        default=0.0,
        help="wall seconds per control period; 0 runs flat out",
    )
    serve.add_argument(
        "--steps", type=int, default=3360, help="periods to simulate (default: one week)"
    )
    serve.add_argument("--truth-out", default=None, help="per-step ground truth JSONL")
    serve.add_argument(
        "--wait-rapp",
        type=float,
        default=30.0,
        help="seconds to wait for the callback listener before starting",
    )
    serve.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)

    from capshare.configio import load_scenario
    from capshare.netconf.server import NetconfServer
    from capshare.odu.sim import make_odu_state, run_serve_loop
    from capshare.pm.transport import PmFileServer
    from capshare.rapp.callback import CALLBACK_ROUTE

    scenario, ports = load_scenario(args.config)
    state = make_odu_state(scenario, seed=args.seed, acceleration=args.accel)
    netconf = NetconfServer(state.datastore, host=ports.host, port=ports.netconf)
    pm_server = PmFileServer(host=ports.host, port=ports.pm_files)
    stop = _stop_on_signals()

    notify_endpoint = f"http://{ports.host}:{ports.callback}{CALLBACK_ROUTE}"
    netconf.start()
    pm_server.start()
    truth_stream = None
    try:
        if args.wait_rapp > 0 and not _wait_for_port(
            ports.host, ports.callback, args.wait_rapp, stop
        ):
            log.warning(
                "no callback listener on %s:%d after %.0fs; running open-loop",
                ports.host,
                ports.callback,
                args.wait_rapp,
            )
        if args.truth_out:
            Path(args.truth_out).parent.mkdir(parents=True, exist_ok=True)
            truth_stream = open(args.truth_out, "w", encoding="utf-8")

        def on_step(record):
            if truth_stream is not None:
                truth_stream.write(json.dumps(record.to_dict()) + "\n")
                truth_stream.flush()

        records = run_serve_loop(
            state,
            pm_server,
            steps=args.steps,
            notify_endpoint=notify_endpoint,
            stop=stop,
            on_step=on_step,
        )
        log.info("served %d periods", len(records))
        return 0 if len(records) == args.steps or stop.is_set() else 1
    finally:
        if truth_stream is not None:
            truth_stream.close()
        pm_server.stop()
        netconf.stop()


# ------------------------------------------------------------------- rapp


def rapp_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rapp", description="Capacity-sharing rApp: the inference control loop."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the control loop against an O-DU")
    run.add_argument("--config", required=True, help="scenario YAML")
    run.add_argument("--policies", required=True, help="directory of trained policies")
    run.add_argument("--log", required=True, help="JSONL loop trace destination")
    run.add_argument(
        "--steps", type=int, default=None, help="stop after this many periods"
    )
    run.add_argument(
        "--wait-odu",
        type=float,
        default=30.0,
        help="seconds to wait for the NETCONF port before starting",
    )
    run.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)

    from capshare.configio import load_scenario
    from capshare.pm.transport import FILE_ROUTE
    from capshare.rapp.loop import RappConfig, run_inference_loop

    scenario, ports = load_scenario(args.config)
    config = RappConfig(
        scenario=scenario,
        netconf_host=ports.host,
        netconf_port=ports.netconf,
        callback_host=ports.host,
        callback_port=ports.callback,
        pm_base_url=f"http://{ports.host}:{ports.pm_files}{FILE_ROUTE}",
        policy_dir=Path(args.policies),
        log_path=Path(args.log),
    )
    stop = _stop_on_signals()
    if args.wait_odu > 0 and not _wait_for_port(
        ports.host, ports.netconf, args.wait_odu, stop
    ):
        log.error("no NETCONF server on %s:%d", ports.host, ports.netconf)
        return 1
    records = run_inference_loop(config, steps=args.steps, stop=stop)
    log.info("completed %d control periods", len(records))
    if args.steps is not None and len(records) < args.steps and not stop.is_set():
        return 1
    return 0


# ----------------------------------------------------------------- policy


def policy_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="policy", description="Train and evaluate per-tenant DQN policies."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train one policy per tenant")
    train.add_argument("--config", required=True, help="scenario YAML")
    train.add_argument("--out", required=True, help="output directory for policy files")
    train.add_argument("--seed", type=int, default=0)
    train.add_argument(
        "--restarts",
        type=int,
        default=6,
        help="independent training runs to select from",
    )
    train.add_argument(
        "--paper-scale",
        action="store_true",
        help="use the published training budget instead of the desk-scale one",
    )
    train.add_argument(
        "--train-steps",
        type=int,
        default=None,
        help="override the per-run optimization budget (smoke tests)",
    )
    train.add_argument("--verbose", action="store_true")

    evaluate = sub.add_parser("eval", help="score trained policies against random")
    evaluate.add_argument("--policy", required=True, help="directory of policy files")
    evaluate.add_argument("--steps", type=int, default=500)
    evaluate.add_argument("--config", required=True, help="scenario YAML")
    evaluate.add_argument("--seed", type=int, default=0)
    evaluate.add_argument("--verbose", action="store_true")

    args = parser.parse_args(argv)
    _setup_logging(args.verbose)

    from capshare.configio import load_scenario
    from capshare.policy import (
        CapacityEnv,
        Hyperparameters,
        evaluate_policy,
        load_policies,
        save_policies,
        tracking_score,
        train_best_policy,
    )

    scenario, _ = load_scenario(args.config)
    if args.command == "train":
        hyper = Hyperparameters() if args.paper_scale else Hyperparameters.desk_scale()
        if args.train_steps is not None:
            import dataclasses

            hyper = dataclasses.replace(
                hyper,
                max_train_steps=args.train_steps,
                epsilon_decay_steps=min(hyper.epsilon_decay_steps, args.train_steps // 2),
                validation_period=min(hyper.validation_period, args.train_steps // 2),
            )
        started = time.monotonic()
        policies = train_best_policy(
            scenario, hyper, seed=args.seed, restarts=args.restarts
        )
        paths = save_policies(policies, Path(args.out))
        score = tracking_score(scenario, policies, start_day=0, steps=3360)
        print(f"trained {len(paths)} policies in {time.monotonic() - started:.1f}s")
        for path in paths:
            print(f"  {path}")
        print(f"held-out tracking score: {score:.3f}")
        return 0

    snssai_ids = [t.snssai.id for t in scenario.tenants]
    policies = load_policies(Path(args.policy), snssai_ids)
    action_set = next(iter(policies.values())).actions

    def fresh_env():
        return CapacityEnv(
            scenario,
            seed=args.seed,
            stationary_only=True,
            curriculum=False,
            action_set=action_set,
        )

    trained = evaluate_policy(fresh_env(), policies, args.steps)
    baseline = evaluate_policy(
        fresh_env(), None, args.steps, rng=np.random.default_rng(args.seed + 1)
    )
    print(f"trained mean reward:  {trained:.4f}")
    print(f"random mean reward:   {baseline:.4f}")
    print(f"ratio:                {trained / baseline:.3f}")
    return 0


# ------------------------------------------------------------------ bench


def bench_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bench", description="End-to-end runs and SLA reports."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="orchestrate odu-sim + rapp and report")
    run.add_argument("--config", required=True, help="scenario YAML")
    run.add_argument("--policies", required=True, help="directory of policy files")
    run.add_argument("--days", type=float, required=True, help="virtual days to run")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", required=True, help="report output directory")
    run.add_argument(
        "--accel",
        type=float,
        default=0.0,
        help="wall seconds per control period; 0 runs flat out",
    )
    run.add_argument("--verbose", action="store_true")

    report = sub.add_parser("report", help="recompute metrics from an emitted CSV")
    report.add_argument("--csv", required=True, help="timeseries.csv from a run")
    report.add_argument("--verbose", action="store_true")

    args = parser.parse_args(argv)
    _setup_logging(args.verbose)

    from capshare.monitor import (
        capacity_utilization,
        orchestrate_run,
        read_series,
        satisfaction_ratio,
    )

    if args.command == "run":
        result = orchestrate_run(
            args.config,
            args.policies,
            days=args.days,
            seed=args.seed,
            out_dir=args.out,
            acceleration=args.accel,
        )
        for sid, value in sorted(result.satisfaction.items()):
            print(f"satisfaction ratio tenant {sid}: {value:.4f}")
        print(f"capacity utilization: {result.utilization:.4f}")
        print(f"report: {result.metrics_path}")
        if result.partial:
            print("WARNING: partial run (a component stopped early)")
            return 1
        return 0

    series = read_series(args.csv)
    for sid in series.snssai_ids:
        print(f"satisfaction ratio tenant {sid}: {satisfaction_ratio(series, sid):.4f}")
    print(f"capacity utilization: {capacity_utilization(series):.4f}")
    return 0


_PROGRAMS = {
    "odu-sim": odu_sim_main,
    "rapp": rapp_main,
    "policy": policy_main,
    "bench": bench_main,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] not in _PROGRAMS:
        print(
            f"usage: python3 -m capshare.cli {{{','.join(_PROGRAMS)}}} ...",
            file=sys.stderr,
        )
        return 2
    return _PROGRAMS[argv[0]](argv[1:])


if __name__ == "__main__":
    sys.exit(main())
