"""Capacity-sharing rApp: the periodic notify - fetch - infer - provision loop.

The loop is notification-driven: the O-DU's PM clock paces it, not a
local timer.  Each period the rApp fetches the announced PM file,
computes one state vector per tenant, runs each tenant's greedy policy,
and writes all new ratios back in a single edit-config, recording
millisecond timestamps for every stage along the way.
"""
from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from capshare import nrm
from capshare.netconf.client import NetconfClient
from capshare.netconf.messages import Reply
from capshare.netconf.session import SessionError
from capshare.pm.report import PmParseError, parse_pm_report
from capshare.pm.transport import (
    FileReadyNotification,
    IntegrityError,
    MissingFileError,
    fetch_pm_file,
)
from capshare.policy.features import DegenerateInputError, featurize
from capshare.policy.agent import apply_action
from capshare.policy.store import load_policies

from .callback import NotificationListener

log = logging.getLogger(__name__)

__all__ = [
    "RappConfig",
    "LoopRecord",
    "push_policy_update",
    "run_inference_loop",
    "read_loop_log",
]


@dataclass
class RappConfig:
    """Everything one control loop needs for one managed cell."""

    scenario: nrm.ScenarioConfig
    netconf_host: str = "127.0.0.1"
    netconf_port: int = 8300
    callback_host: str = "127.0.0.1"
    callback_port: int = 8302
    # Informational; PM files are fetched from the URL each notification
    # carries, which points into this server.
    pm_base_url: Optional[str] = None
    policy_dir: Optional[Path] = None
    log_path: Optional[Path] = None
    # Reconnect-per-period reproduces the observed per-period session
    # setup and teardown on the wire; keep-alive holds one session open.
    keep_alive: bool = False
    # Wall-clock seconds to wait for a PM notification before flagging
    # the O-DU as late; defaults to two granularity periods.
    watchdog_s: Optional[float] = None

    def __post_init__(self):
        problems = nrm.validate_scenario(self.scenario)
        if problems:
            raise nrm.ConfigurationError("; ".join(problems))
        if self.policy_dir is not None:
            self.policy_dir = Path(self.policy_dir)
        if self.log_path is not None:
            self.log_path = Path(self.log_path)

    @property
    def effective_watchdog_s(self) -> float:
        if self.watchdog_s is not None:
            return self.watchdog_s
        return 2.0 * self.scenario.delta_t_s


@dataclass
class LoopRecord:
    """Millisecond timing trace of one completed control period."""

    step: int
    notification_received_ms: int
    file_fetched_ms: int
    state_computed_ms: int
    inference_done_ms: int
    edit_config_sent_ms: int
    rpc_reply_received_ms: int
    # S-NSSAI id -> dedicated ratio written this period
    ratios: dict = field(default_factory=dict)

    _STAGES = (
        "notification_received_ms",
        "file_fetched_ms",
        "state_computed_ms",
        "inference_done_ms",
        "edit_config_sent_ms",
        "rpc_reply_received_ms",
    )

    def timestamps(self) -> list[int]:
        return [getattr(self, name) for name in self._STAGES]

    def violations(self) -> list[str]:
        stamps = self.timestamps()
        problems = []
        if any(b < a for a, b in zip(stamps, stamps[1:])):
            problems.append(f"step {self.step}: timestamps not monotone: {stamps}")
        return problems

    def to_dict(self) -> dict:
        out = {"step": self.step}
        for name in self._STAGES:
            out[name] = getattr(self, name)
        out["ratios"] = {str(k): v for k, v in self.ratios.items()}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "LoopRecord":
        return cls(
            step=int(data["step"]),
            ratios={int(k): int(v) for k, v in data["ratios"].items()},
            **{name: int(data[name]) for name in cls._STAGES},
        )


def _now_ms() -> int:
    return int(time.time() * 1000)


def push_policy_update(
    client: NetconfClient, ratios: list[nrm.RRMPolicyRatio]
) -> Optional[Reply]:
    """One edit-config carrying every tenant's ratio.

    An empty list is a no-op and sends nothing.  On a transport failure
    the session is re-established and the RPC retried once; the second
    failure propagates.
    """
    if not ratios:
        return None
    try:
        return client.edit_config(ratios)
    except (SessionError, OSError) as exc:
        log.warning("edit-config transport failure, reconnecting: %s", exc)
        client.close()
        client.connect()
        return client.edit_config(ratios)


def run_inference_loop(
    config: RappConfig,
    policies: Optional[dict] = None,
    steps: Optional[int] = None,
    stop: Optional[threading.Event] = None,
    on_record: Optional[Callable[[LoopRecord], None]] = None,
    listener: Optional[NotificationListener] = None,
) -> list[LoopRecord]:
    """Drive the control loop until ``steps`` periods or ``stop``.

    ``steps`` counts received notifications, so a period whose PM fetch
    fails still consumes one step (it just produces no record and no
    edit-config).  Policies come from ``config.policy_dir`` unless passed
    in directly; a tenant without a policy aborts startup.  A caller that
    already runs a ``NotificationListener`` (to learn its ephemeral port
    up front) can hand it in; it stays under the caller's ownership.
    """
    scenario = config.scenario
    cell = scenario.cell
    snssai_ids = [t.snssai.id for t in scenario.tenants]
    if policies is None:
        if config.policy_dir is None:
            raise nrm.ConfigurationError("no policies given and no policy_dir set")
        policies = load_policies(config.policy_dir, snssai_ids)
    missing = [sid for sid in snssai_ids if sid not in policies]
    if missing:
        raise nrm.ConfigurationError(f"no policy for S-NSSAI ids {missing}")

    records: list[LoopRecord] = []
    log_file = None
    if config.log_path is not None:
        config.log_path.parent.mkdir(parents=True, exist_ok=True)
        log_file = open(config.log_path, "a", encoding="utf-8")

    client = NetconfClient(config.netconf_host, config.netconf_port)
    own_listener = listener is None
    if own_listener:
        listener = NotificationListener(config.callback_host, config.callback_port)
        listener.start()
    try:
        # The datastore is the authority on current ratios; start from
        # whatever the O-DU was provisioned with.
        client.connect()
        reply = client.get_config()
        current = {r.snssai.id: r for r in reply.policies}
        for tenant in scenario.tenants:
            if tenant.snssai.id not in current:
                log.warning(
                    "S-NSSAI %d missing from datastore, using configured start",
                    tenant.snssai.id,
                )
                current[tenant.snssai.id] = nrm.RRMPolicyRatio(
                    tenant.snssai, tenant.initial_ratio
                )
        if not config.keep_alive:
            client.close()

        completed = 0
        while (steps is None or completed < steps) and not (
            stop is not None and stop.is_set()
        ):
            notification = listener.take(timeout=config.effective_watchdog_s)
            if notification is None:
                if stop is not None and stop.is_set():
                    break
                log.warning(
                    "no PM notification in %.1f s, still waiting",
                    config.effective_watchdog_s,
                )
                continue
            completed += 1
            received_ms = _now_ms()
            try:
                data = fetch_pm_file(
                    notification.file_location, notification.file_size
                )
            except (MissingFileError, IntegrityError, OSError) as exc:
                log.warning(
                    "PM fetch failed, keeping ratios for this period: %s", exc
                )
                continue
            fetched_ms = _now_ms()
            try:
                report = parse_pm_report(data)
                states = {
                    tenant.snssai.id: featurize(
                        report,
                        tenant.sla,
                        current[tenant.snssai.id],
                        cell,
                        delta_t_s=scenario.delta_t_s,
                    )
                    for tenant in scenario.tenants
                }
            except (PmParseError, DegenerateInputError) as exc:
                log.warning(
                    "unusable PM file, keeping ratios for this period: %s", exc
                )
                continue
            state_ms = _now_ms()
            proposed = []
            for tenant in scenario.tenants:
                delta = policies[tenant.snssai.id].greedy_delta(
                    states[tenant.snssai.id]
                )
                proposed.append(
                    apply_action(
                        current[tenant.snssai.id], delta, tenant.sla, cell
                    )
                )
            inference_ms = _now_ms()

            if not client.connected:
                client.connect()
            sent_ms = _now_ms()
            try:
                reply = push_policy_update(client, proposed)
            except (SessionError, OSError) as exc:
                log.error("edit-config failed, datastore unchanged: %s", exc)
                continue
            finally:
                if not config.keep_alive:
                    client.close()
            reply_ms = _now_ms()
            if reply is None or not reply.ok:
                log.error(
                    "rpc-error for step %d, datastore presumed unchanged",
                    completed,
                )
                continue
            current = {r.snssai.id: r for r in proposed}

            record = LoopRecord(
                step=completed,
                notification_received_ms=received_ms,
                file_fetched_ms=fetched_ms,
                state_computed_ms=state_ms,
                inference_done_ms=inference_ms,
                edit_config_sent_ms=sent_ms,
                rpc_reply_received_ms=reply_ms,
                ratios={r.snssai.id: r.dedicated_ratio for r in proposed},
            )
            assert not record.violations()
            records.append(record)
            if log_file is not None:
                log_file.write(json.dumps(record.to_dict()) + "\n")
                log_file.flush()
            if on_record is not None:
                on_record(record)
    finally:
        if own_listener:
            listener.stop()
        client.close()
        if log_file is not None:
            log_file.close()
    return records


def read_loop_log(path) -> list[LoopRecord]:
    """Parse a JSONL loop log back into records."""
    records = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                records.append(LoopRecord.from_dict(json.loads(line)))
    return records
