"""Desk-scale O-RAN capacity-sharing testbed.

A simulated O-DU and a capacity-sharing rApp talk over real wire
protocols on loopback: NETCONF-style provisioning for slice ratios and
3GPP-style PM file reporting for measurements.  Per-tenant DQN policies
close the loop; the monitor computes SLA metrics and reports.

Subpackages:
    nrm       slice model, SLA types, the capacity allocation rule
    netconf   chunked framing, XML RPCs, datastore, client and server
    pm        PM report files, HTTP file server, file-ready callbacks
    odu       traffic profiles and the O-DU simulator
    policy    features, Q-networks, agents, training, persistence
    rapp      notification listener and the inference control loop
    monitor   run metrics, CSV/SVG reports, the end-to-end orchestrator
"""
from capshare.nrm import (
    CellConfig,
    ConfigurationError,
    RRMPolicyRatio,
    ScenarioConfig,
    SNssai,
    TenantConfig,
    TenantSla,
    allocate_capacity,
    validate_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "CellConfig",
    "ConfigurationError",
    "RRMPolicyRatio",
    "ScenarioConfig",
    "SNssai",
    "TenantConfig",
    "TenantSla",
    "allocate_capacity",
    "validate_scenario",
    "__version__",
]
