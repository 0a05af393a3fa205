"""Simulated O-DU: load generation, per-step allocation, PM publication.

One simulation step spans one granularity period.  Each step samples the
tenants' offered loads, allocates capacity according to the ratios
currently in the shared policy datastore, and accumulates the PM
counters; ``publish_pm`` then turns the accumulators into a PM file on
the embedded HTTP server and announces it.

The serve loop is revision gated: after announcing a PM file it waits
(bounded) for the management side to write new ratios before starting
the next period, which keeps an as-fast-as-possible run in lockstep with
the controller while surviving a controller that went away.
"""
from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from typing import Callable, Optional, TextIO

import numpy as np

from capshare import nrm
from capshare.netconf.datastore import PolicyDatastore
from capshare.pm import report as pm_report
from capshare.pm import transport as pm_transport

from .traffic import TrafficProfile, get_profile, offered_load

log = logging.getLogger(__name__)

# Virtual t=0; 2024-01-01 is a Monday, so day-of-week 0 in the traffic
# profiles lines up with the calendar dates stamped into PM files.
SCENARIO_EPOCH = datetime(2024, 1, 1, tzinfo=timezone.utc)

SATISFACTION_TOLERANCE = 1e-6


@dataclass
class SimClock:
    delta_t_s: float
    acceleration: float = 0.0  # wall seconds per virtual period; 0 = flat out
    t: float = 0.0

    def advance(self) -> float:
        self.t += self.delta_t_s
        return self.t

    @property
    def now(self) -> datetime:
        return SCENARIO_EPOCH + timedelta(seconds=self.t)


@dataclass
class StepRecord:
    """Ground truth for one simulation step, recorded before PM smoothing."""

    step: int
    t: float
    snssai_ids: tuple
    offered: tuple
    served: tuple
    assigned: tuple
    ratios: tuple
    satisfied: tuple

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "t": self.t,
            "snssai_ids": list(self.snssai_ids),
            "offered": list(self.offered),
            "served": list(self.served),
            "assigned": list(self.assigned),
            "ratios": list(self.ratios),
            "satisfied": list(self.satisfied),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "StepRecord":
        return cls(
            step=int(payload["step"]),
            t=float(payload["t"]),
            snssai_ids=tuple(int(i) for i in payload["snssai_ids"]),
            offered=tuple(float(v) for v in payload["offered"]),
            served=tuple(float(v) for v in payload["served"]),
            assigned=tuple(float(v) for v in payload["assigned"]),
            ratios=tuple(int(v) for v in payload["ratios"]),
            satisfied=tuple(bool(v) for v in payload["satisfied"]),
        )


@dataclass
class OduState:
    scenario: nrm.ScenarioConfig
    clock: SimClock
    datastore: PolicyDatastore
    rng: np.random.Generator
    profiles: list[TrafficProfile]
    volume_mbit: list[float] = field(default_factory=list)
    prb_integral: list[float] = field(default_factory=list)
    steps_since_publish: int = 0
    period_start_t: float = 0.0
    total_steps: int = 0

    def reset_accumulators(self):
        n = len(self.scenario.tenants)
        self.volume_mbit = [0.0] * n
        self.prb_integral = [0.0] * n
        self.steps_since_publish = 0
        self.period_start_t = self.clock.t


def make_odu_state(
    scenario: nrm.ScenarioConfig,
    seed: int,
    datastore: Optional[PolicyDatastore] = None,
    acceleration: float = 0.0,
) -> OduState:
    """Build the simulator state and seed the datastore with initial ratios."""
    problems = nrm.validate_scenario(scenario)
    if problems:
        raise nrm.ConfigurationError("; ".join(problems))
    if datastore is None:
        datastore = PolicyDatastore()
    if not datastore.snapshot():
        datastore.apply(
            [
                nrm.RRMPolicyRatio(t.snssai, t.initial_ratio)
                for t in scenario.tenants
            ]
        )
    # A named profile inherits the scenario's noise level; an explicit
    # TrafficProfile object keeps whatever noise it was built with.
    profiles = []
    for tenant in scenario.tenants:
        if isinstance(tenant.profile, TrafficProfile):
            profiles.append(tenant.profile)
        else:
            base = get_profile(tenant.profile)
            profiles.append(replace(base, noise_std=scenario.noise_std))
    state = OduState(
        scenario=scenario,
        clock=SimClock(delta_t_s=scenario.delta_t_s, acceleration=acceleration),
        datastore=datastore,
        rng=np.random.default_rng(seed),
        profiles=profiles,
    )
    state.reset_accumulators()
    return state


def current_ratios(state: OduState) -> list[nrm.RRMPolicyRatio]:
    """Datastore ratios in tenant order; a missing entry counts as zero."""
    snapshot = state.datastore.snapshot()
    ratios = []
    for tenant in state.scenario.tenants:
        entry = snapshot.get(tenant.snssai.id)
        if entry is None:
            log.warning("no policy for S-NSSAI %d, treating as 0", tenant.snssai.id)
            entry = nrm.RRMPolicyRatio(tenant.snssai, 0)
        ratios.append(entry)
    return ratios


def sim_step(state: OduState) -> StepRecord:
    """Advance one granularity period: sample loads, allocate, accumulate PM."""
    scenario = state.scenario
    cell = scenario.cell
    ratios = current_ratios(state)
    offered = [
        offered_load(profile, state.clock.t, cell.capacity_mbps, state.rng)
        for profile in state.profiles
    ]
    served = nrm.allocate_capacity(offered, ratios, cell, scenario.slas)
    # Assigned is the nominal claim (ratio * c / 100), not the share after
    # oversubscription scaling: the utilization metric and the reward both
    # charge a tenant for capacity it reserves, even while another
    # tenant's demand happens to absorb the excess.
    assigned = [r.dedicated_ratio * cell.capacity_mbps / 100.0 for r in ratios]

    # nrm guarantees these; re-checked here because PM files are built from
    # the accumulators and a violation must stop the run, not propagate.
    assert sum(served) <= cell.capacity_mbps * (1 + 1e-12)
    assert all(
        s <= sla.mcbr_mbps * (1 + 1e-12)
        for s, sla in zip(served, scenario.slas)
    )

    for k, rate in enumerate(served):
        state.volume_mbit[k] += rate * scenario.delta_t_s
        state.prb_integral[k] += cell.total_prb * rate / cell.capacity_mbps

    satisfied = tuple(
        s >= min(o, sla.sagbr_mbps) - SATISFACTION_TOLERANCE
        for s, o, sla in zip(served, offered, scenario.slas)
    )
    record = StepRecord(
        step=state.total_steps,
        t=state.clock.t,
        snssai_ids=tuple(t.snssai.id for t in scenario.tenants),
        offered=tuple(offered),
        served=tuple(served),
        assigned=tuple(assigned),
        ratios=tuple(r.dedicated_ratio for r in ratios),
        satisfied=satisfied,
    )
    state.steps_since_publish += 1
    state.total_steps += 1
    state.clock.advance()
    return record


def build_pm_report(state: OduState) -> pm_report.PmReport:
    """PM report for the period accumulated so far; does not reset anything."""
    if state.steps_since_publish < 1:
        raise ValueError("no completed simulation step since the last PM publication")
    scenario = state.scenario
    tenants = [
        pm_report.TenantMeasurement(
            snssai=t.snssai,
            mean_dl_prb_used=state.prb_integral[k] / state.steps_since_publish,
            dl_pdcp_volume_mbit=state.volume_mbit[k],
        )
        for k, t in enumerate(scenario.tenants)
    ]
    return pm_report.PmReport(
        cell_id=scenario.cell.cell_id,
        begin_time=SCENARIO_EPOCH + timedelta(seconds=state.period_start_t),
        granularity_s=scenario.delta_t_s * state.steps_since_publish,
        dl_total_available_prb=float(scenario.cell.total_prb),
        tenants=tenants,
    )


def publish_pm(
    state: OduState,
    file_server: pm_transport.PmFileServer,
    notify_endpoint: Optional[str] = None,
):
    """Serialize the period's PM report, host it, announce it, reset counters.

    Returns ``(report, notification, delivered)``.  A failed or skipped
    notification leaves the file available and the loop running.
    """
    report = build_pm_report(state)
    data = pm_report.serialize_pm_report(report)
    name = pm_report.pm_file_name(report.cell_id, report.begin_time)
    notification = file_server.publish(name, data)
    delivered = False
    if notify_endpoint:
        delivered = pm_transport.notify_file_ready(notify_endpoint, notification)
        if not delivered:
            log.warning("PM notification for %s undelivered; file stays available", name)
    state.reset_accumulators()
    return report, notification, delivered


def run_serve_loop(
    state: OduState,
    file_server: pm_transport.PmFileServer,
    steps: int,
    notify_endpoint: Optional[str] = None,
    rapp_wait_s: float = 5.0,
    stop: Optional[threading.Event] = None,
    on_step: Optional[Callable[[StepRecord], None]] = None,
) -> list[StepRecord]:
    """Step/publish/wait loop for ``steps`` periods; one PM file per period.

    After a delivered notification the loop blocks until the datastore
    revision moves (the controller's edit-config landing) or ``rapp_wait_s``
    expires, so ratio updates take effect on the very next period.
    """
    records = []
    for _ in range(steps):
        if stop is not None and stop.is_set():
            break
        wall_start = time.monotonic()
        record = sim_step(state)
        records.append(record)
        if on_step is not None:
            on_step(record)
        revision_before = state.datastore.revision
        _, _, delivered = publish_pm(state, file_server, notify_endpoint)
        if delivered:
            updated = state.datastore.wait_for_revision(
                above=revision_before, timeout=rapp_wait_s
            )
            if not updated:
                log.warning(
                    "no ratio update within %.1fs after step %d; continuing",
                    rapp_wait_s,
                    record.step,
                )
        pacing = state.clock.acceleration
        if pacing > 0:
            remaining = pacing - (time.monotonic() - wall_start)
            if remaining > 0:
                time.sleep(remaining)
    return records


def write_truth(records, stream: TextIO):
    for record in records:
        stream.write(json.dumps(record.to_dict()) + "\n")


def read_truth(stream: TextIO) -> list[StepRecord]:
    return [StepRecord.from_dict(json.loads(line)) for line in stream if line.strip()]
