"""SLA monitoring: run metrics, CSV/plot reporting, and the run orchestrator.

The evaluation contract is a per-step, per-tenant time series of offered,
served, and assigned rate plus a satisfaction flag.  Two scalar metrics
summarize a run: the per-tenant satisfaction ratio and the joint capacity
utilization.  Reports are static artifacts (CSV + SVG); the metrics must
be recomputable bit-exactly from the emitted CSV.
"""
from __future__ import annotations

import csv
import json
import signal
import subprocess
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from capshare.odu.sim import StepRecord

__all__ = [
    "MetricsError",
    "SlaTimeSeries",
    "RunReport",
    "satisfaction_ratio",
    "capacity_utilization",
    "emit_report",
    "read_series",
    "orchestrate_run",
]


class MetricsError(ValueError):
    """A metric was asked of a series that cannot support it."""


@dataclass(frozen=True)
class SlaTimeSeries:
    """Per-step, per-tenant record of one run.

    Arrays are (steps, tenants), columns ordered by ``snssai_ids``.
    ``assigned`` is the nominal claim ratio*capacity/100, so it can sit
    above served when a tenant reserves more than it uses.
    """

    snssai_ids: tuple
    steps: np.ndarray
    offered: np.ndarray
    served: np.ndarray
    assigned: np.ndarray
    satisfied: np.ndarray
    capacity_mbps: Optional[float] = None

    def __post_init__(self):
        ids = tuple(int(i) for i in self.snssai_ids)
        object.__setattr__(self, "snssai_ids", ids)
        shape = (len(self.steps), len(ids))
        for name in ("offered", "served", "assigned"):
            column = np.asarray(getattr(self, name), dtype=float)
            if column.shape != shape:
                raise MetricsError(f"{name} must have shape {shape}, got {column.shape}")
            object.__setattr__(self, name, column)
        flags = np.asarray(self.satisfied, dtype=bool)
        if flags.shape != shape:
            raise MetricsError(f"satisfied must have shape {shape}, got {flags.shape}")
        object.__setattr__(self, "satisfied", flags)
        object.__setattr__(self, "steps", np.asarray(self.steps, dtype=int))
        if self.capacity_mbps is not None and len(self.steps):
            top = float(np.max(self.assigned))
            if top > self.capacity_mbps * (1 + 1e-12):
                raise MetricsError(
                    f"assigned {top} exceeds cell capacity {self.capacity_mbps}"
                )

    def __len__(self) -> int:
        return len(self.steps)

    def column(self, snssai_id: int) -> int:
        try:
            return self.snssai_ids.index(snssai_id)
        except ValueError:
            raise MetricsError(
                f"S-NSSAI {snssai_id} not in series {self.snssai_ids}"
            ) from None

    @classmethod
    def from_step_records(
        cls, records: Sequence[StepRecord], capacity_mbps: Optional[float] = None
    ) -> "SlaTimeSeries":
        if not records:
            raise MetricsError("empty record list")
        ids = records[0].snssai_ids
        for record in records:
            if record.snssai_ids != ids:
                raise MetricsError("tenant set changed mid-run")
        return cls(
            snssai_ids=ids,
            steps=np.array([r.step for r in records]),
            offered=np.array([r.offered for r in records]),
            served=np.array([r.served for r in records]),
            assigned=np.array([r.assigned for r in records]),
            satisfied=np.array([r.satisfied for r in records]),
            capacity_mbps=capacity_mbps,
        )


def satisfaction_ratio(series: SlaTimeSeries, snssai_id: int) -> float:
    """Fraction of steps on which the tenant's SLA held; a time average."""
    if len(series) == 0:
        raise MetricsError("satisfaction ratio of an empty series")
    column = series.column(snssai_id)
    return float(np.count_nonzero(series.satisfied[:, column])) / len(series)


def capacity_utilization(series: SlaTimeSeries) -> float:
    """Mean over steps of total served / total assigned, each step clamped to 1.

    Steps with zero assigned capacity carry no information about usage of
    an assignment and are excluded; a series with only such steps has no
    defined utilization.
    """
    if len(series) == 0:
        raise MetricsError("capacity utilization of an empty series")
    assigned = series.assigned.sum(axis=1)
    served = series.served.sum(axis=1)
    mask = assigned > 0
    if not mask.any():
        raise MetricsError("every step has zero assigned capacity")
    per_step = np.minimum(1.0, served[mask] / assigned[mask])
    return float(per_step.mean())


@dataclass
class RunReport:
    satisfaction: dict
    utilization: float
    csv_path: Path
    metrics_path: Path
    plot_paths: list = field(default_factory=list)
    # set when a component died before the requested duration completed
    partial: bool = False


def _format(value: float) -> str:
    # repr round-trips doubles exactly, which is what makes metrics
    # recomputable from the CSV bit-for-bit
    return repr(float(value))


def emit_report(series: SlaTimeSeries, out_dir, partial: bool = False) -> RunReport:
    """Write timeseries.csv, metrics.json, and per-tenant SVG plots."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    csv_path = out_dir / "timeseries.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["step", "tenant", "offered", "served", "assigned", "satisfied"])
        for row in range(len(series)):
            for col, sid in enumerate(series.snssai_ids):
                writer.writerow(
                    [
                        int(series.steps[row]),
                        sid,
                        _format(series.offered[row, col]),
                        _format(series.served[row, col]),
                        _format(series.assigned[row, col]),
                        int(series.satisfied[row, col]),
                    ]
                )

    satisfaction = {sid: satisfaction_ratio(series, sid) for sid in series.snssai_ids}
    utilization = capacity_utilization(series)
    metrics_path = out_dir / "metrics.json"
    payload = {
        "satisfaction_ratio": {str(k): v for k, v in satisfaction.items()},
        "capacity_utilization": utilization,
        "steps": len(series),
        "partial": partial,
    }
    metrics_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")

    plot_paths = _plot_tenant_curves(series, out_dir)
    return RunReport(
        satisfaction=satisfaction,
        utilization=utilization,
        csv_path=csv_path,
        metrics_path=metrics_path,
        plot_paths=plot_paths,
        partial=partial,
    )


def _plot_tenant_curves(series: SlaTimeSeries, out_dir: Path) -> list:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = []
    hours = series.steps * 1.0
    for col, sid in enumerate(series.snssai_ids):
        fig, ax = plt.subplots(figsize=(8, 3))
        ax.plot(hours, series.offered[:, col], label="offered", linewidth=0.9)
        ax.plot(
            hours,
            series.assigned[:, col],
            label="assigned (ratio * c / 100)",
            linewidth=0.9,
        )
        ax.set_xlabel("step")
        ax.set_ylabel("Mb/s")
        ax.set_title(f"S-NSSAI {sid}: offered load vs dedicated assignment")
        ax.legend(loc="upper right", fontsize=8)
        fig.tight_layout()
        path = out_dir / f"tenant_{sid}_offered_vs_assigned.svg"
        fig.savefig(path)
        plt.close(fig)
        paths.append(path)
    return paths


def read_series(csv_path, capacity_mbps: Optional[float] = None) -> SlaTimeSeries:
    """Rebuild a series from an emitted CSV, bit-exact."""
    rows = {}
    ids = []
    with open(csv_path, newline="", encoding="utf-8") as handle:
        for entry in csv.DictReader(handle):
            step = int(entry["step"])
            sid = int(entry["tenant"])
            if sid not in ids:
                ids.append(sid)
            rows.setdefault(step, {})[sid] = (
                float(entry["offered"]),
                float(entry["served"]),
                float(entry["assigned"]),
                bool(int(entry["satisfied"])),
            )
    if not rows:
        raise MetricsError(f"no rows in {csv_path}")
    steps = sorted(rows)
    data = np.array(
        [[rows[s][sid][:3] for sid in ids] for s in steps], dtype=float
    )
    flags = np.array([[rows[s][sid][3] for sid in ids] for s in steps], dtype=bool)
    return SlaTimeSeries(
        snssai_ids=tuple(ids),
        steps=np.array(steps),
        offered=data[:, :, 0],
        served=data[:, :, 1],
        assigned=data[:, :, 2],
        satisfied=flags,
        capacity_mbps=capacity_mbps,
    )


def _terminate(process: subprocess.Popen, grace_s: float = 5.0):
    if process.poll() is None:
        process.send_signal(signal.SIGTERM)
        try:
            process.wait(timeout=grace_s)
        except subprocess.TimeoutExpired:
            process.kill()
            process.wait()


def orchestrate_run(
    config_path,
    policy_dir,
    days: float,
    seed: int,
    out_dir,
    acceleration: float = 0.0,
) -> RunReport:
    """Full testbed run: spawn odu-sim and rapp, wait, report.

    The simulator owns the ground truth; the report is computed from its
    truth stream, with the rApp acting purely over the wire.  ``days`` is
    virtual time at 480 steps per day.  A component crash terminates the
    partner process and flags the report as partial.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    steps = int(round(days * 480))
    truth_path = out_dir / "truth.jsonl"
    loop_log = out_dir / "rapp_loop.jsonl"

    odu_cmd = [
        sys.executable,
        "-m",
        "capshare.cli",
        "odu-sim",
        "serve",
        "--config",
        str(config_path),
        "--seed",
        str(seed),
        "--accel",
        str(acceleration),
        "--steps",
        str(steps),
        "--truth-out",
        str(truth_path),
    ]
    rapp_cmd = [
        sys.executable,
        "-m",
        "capshare.cli",
        "rapp",
        "run",
        "--config",
        str(config_path),
        "--policies",
        str(policy_dir),
        "--log",
        str(loop_log),
        "--steps",
        str(steps),
    ]

    partial = False
    odu = subprocess.Popen(odu_cmd)
    try:
        rapp = subprocess.Popen(rapp_cmd)
    except Exception:
        _terminate(odu)
        raise
    try:
        while True:
            odu_done = odu.poll() is not None
            rapp_done = rapp.poll() is not None
            if odu_done and rapp_done:
                break
            if odu_done and not rapp_done:
                # Simulator finished; give the rApp a moment to drain its
                # final period, then stop it.
                try:
                    rapp.wait(timeout=10.0)
                except subprocess.TimeoutExpired:
                    _terminate(rapp)
                break
            if rapp_done and not odu_done:
                if rapp.returncode != 0:
                    # Controller crash: the run degrades to static ratios;
                    # stop the simulator and flag the report.
                    partial = True
                    _terminate(odu)
                    break
            time.sleep(0.2)
    finally:
        _terminate(odu)
        _terminate(rapp)
    if odu.returncode not in (0, None) or (rapp.returncode not in (0, None)):
        partial = True

    from capshare.configio import load_scenario
    from capshare.odu.sim import read_truth

    scenario, _ = load_scenario(config_path)
    if not truth_path.exists():
        raise MetricsError(f"simulator produced no truth stream at {truth_path}")
    with open(truth_path, encoding="utf-8") as handle:
        records = read_truth(handle)
    if len(records) < steps:
        partial = True
    series = SlaTimeSeries.from_step_records(
        records, capacity_mbps=scenario.cell.capacity_mbps
    )
    return emit_report(series, out_dir, partial=partial)
