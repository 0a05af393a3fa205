"""YAML scenario files: one tree describing the cell, tenants, and ports.

The on-disk shape mirrors the in-memory config types one to one, so a
file documents a runnable scenario completely: cell constants, per-tenant
SLA and traffic profile, the control period, and the three service ports.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml

from capshare import nrm
from capshare.netconf.server import DEFAULT_PORT as DEFAULT_NETCONF_PORT
from capshare.pm.transport import DEFAULT_FILE_PORT
from capshare.rapp.callback import DEFAULT_CALLBACK_PORT

__all__ = ["ServicePorts", "load_scenario", "dump_scenario"]


@dataclass(frozen=True)
class ServicePorts:
    netconf: int = DEFAULT_NETCONF_PORT
    pm_files: int = DEFAULT_FILE_PORT
    callback: int = DEFAULT_CALLBACK_PORT
    host: str = "127.0.0.1"


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise nrm.ConfigurationError(f"{context}: missing key '{key}'")
    return mapping[key]


def load_scenario(path) -> tuple[nrm.ScenarioConfig, ServicePorts]:
    """Parse and validate a scenario file; raises ConfigurationError."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise nrm.ConfigurationError(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(tree, dict):
        raise nrm.ConfigurationError(f"{path}: top level must be a mapping")

    cell_tree = _require(tree, "cell", str(path))
    cell = nrm.CellConfig(
        cell_id=str(_require(cell_tree, "cell_id", "cell")),
        capacity_mbps=float(_require(cell_tree, "capacity_mbps", "cell")),
        total_prb=int(_require(cell_tree, "total_prb", "cell")),
    )

    tenants = []
    for i, entry in enumerate(_require(tree, "tenants", str(path))):
        context = f"tenants[{i}]"
        sla = nrm.TenantSla(
            sagbr_mbps=float(_require(entry, "sagbr_mbps", context)),
            mcbr_mbps=float(_require(entry, "mcbr_mbps", context)),
        )
        tenants.append(
            nrm.TenantConfig(
                snssai=nrm.SNssai(int(_require(entry, "snssai", context))),
                sla=sla,
                profile=entry.get("profile"),
                initial_ratio=int(entry.get("initial_ratio", 0)),
            )
        )

    scenario = nrm.ScenarioConfig(
        cell=cell,
        tenants=tenants,
        delta_t_s=float(tree.get("delta_t_s", 180.0)),
        action_step_pct=int(tree.get("action_step_pct", 3)),
        noise_std=float(tree.get("noise_std", 0.02)),
    )
    problems = nrm.validate_scenario(scenario)
    if problems:
        raise nrm.ConfigurationError(f"{path}: " + "; ".join(problems))

    ports_tree = tree.get("ports", {}) or {}
    ports = ServicePorts(
        netconf=int(ports_tree.get("netconf", DEFAULT_NETCONF_PORT)),
        pm_files=int(ports_tree.get("pm_files", DEFAULT_FILE_PORT)),
        callback=int(ports_tree.get("callback", DEFAULT_CALLBACK_PORT)),
        host=str(ports_tree.get("host", "127.0.0.1")),
    )
    return scenario, ports


def dump_scenario(scenario: nrm.ScenarioConfig, ports: ServicePorts = ServicePorts()) -> str:
    """Inverse of load_scenario for profile-by-name scenarios."""
    tenants = []
    for tenant in scenario.tenants:
        if tenant.profile is not None and not isinstance(tenant.profile, str):
            raise nrm.ConfigurationError(
                f"tenant {tenant.snssai.id}: only named profiles serialize to YAML"
            )
        tenants.append(
            {
                "snssai": tenant.snssai.id,
                "sagbr_mbps": tenant.sla.sagbr_mbps,
                "mcbr_mbps": tenant.sla.mcbr_mbps,
                "profile": tenant.profile,
                "initial_ratio": tenant.initial_ratio,
            }
        )
    tree = {
        "cell": {
            "cell_id": scenario.cell.cell_id,
            "capacity_mbps": scenario.cell.capacity_mbps,
            "total_prb": scenario.cell.total_prb,
        },
        "delta_t_s": scenario.delta_t_s,
        "action_step_pct": scenario.action_step_pct,
        "noise_std": scenario.noise_std,
        "tenants": tenants,
        "ports": {
            "netconf": ports.netconf,
            "pm_files": ports.pm_files,
            "callback": ports.callback,
            "host": ports.host,
        },
    }
    return yaml.safe_dump(tree, sort_keys=False)
