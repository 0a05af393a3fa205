"""Network resource model for slice capacity sharing.

Domain types for slices (S-NSSAI), tenant SLAs, cells and RRM policy
ratios, plus the capacity-allocation arithmetic shared by the simulated
O-DU and the SLA metrics.  The ``rRMPolicyDedicatedRatio`` attribute of
the 3GPP ``RRMPolicyRatio`` object (TS 28.541) is modeled as an integer
percentage of cell capacity dedicated to one slice.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence


class ConfigurationError(ValueError):
    """Raised when inputs are structurally inconsistent (e.g. mismatched lists)."""


@dataclass(frozen=True)
class SNssai:
    """Single Network Slice Selection Assistance Information: the slice/tenant id."""

    id: int

    def __post_init__(self):
        if not isinstance(self.id, int) or self.id < 1:
            raise ValueError(f"S-NSSAI id must be a positive integer, got {self.id!r}")


@dataclass(frozen=True)
class TenantSla:
    """Tenant service-level agreement.

    sagbr_mbps: aggregated guaranteed bit rate, provided if demanded.
    mcbr_mbps: maximum bit rate the tenant may receive in a cell.
    """

    sagbr_mbps: float
    mcbr_mbps: float

    def __post_init__(self):
        if not 0 < self.sagbr_mbps <= self.mcbr_mbps:
            raise ValueError(
                f"SLA requires 0 < sagbr <= mcbr, got sagbr={self.sagbr_mbps}, "
                f"mcbr={self.mcbr_mbps}"
            )


@dataclass(frozen=True)
class CellConfig:
    """Static cell parameters: capacity in Mb/s and the PRB count used in PM files."""

    cell_id: str
    capacity_mbps: float
    total_prb: int

    def __post_init__(self):
        if self.capacity_mbps <= 0:
            raise ValueError(f"cell capacity must be positive, got {self.capacity_mbps}")
        if self.total_prb <= 0:
            raise ValueError(f"total PRB count must be positive, got {self.total_prb}")


@dataclass(frozen=True)
class RRMPolicyRatio:
    """Dedicated-capacity percentage for one slice.

    The actuation knob of the system: an integer in [0, 100] giving the share
    of cell radio resources reserved for the slice.
    """

    snssai: SNssai
    dedicated_ratio: int

    def __post_init__(self):
        if not isinstance(self.dedicated_ratio, int) or not 0 <= self.dedicated_ratio <= 100:
            raise ValueError(
                f"dedicated ratio must be an integer in [0, 100], got {self.dedicated_ratio!r}"
            )


@dataclass
class TenantConfig:
    """One tenant of a scenario: identity, SLA, traffic profile and start ratio."""

    snssai: SNssai
    sla: TenantSla
    profile: object = None  # TrafficProfile or a named builtin, resolved by configio
    initial_ratio: int = 0


@dataclass
class ScenarioConfig:
    """Full single-cell scenario: cell, tenants, step duration and action step."""

    cell: CellConfig
    tenants: list[TenantConfig] = field(default_factory=list)
    delta_t_s: float = 180.0
    action_step_pct: int = 3
    noise_std: float = 0.02

    @property
    def slas(self) -> list[TenantSla]:
        return [t.sla for t in self.tenants]

    @property
    def snssais(self) -> list[SNssai]:
        return [t.snssai for t in self.tenants]


def allocate_capacity(
    offered: Sequence[float],
    ratios: Sequence[RRMPolicyRatio],
    cell: CellConfig,
    slas: Sequence[TenantSla],
) -> list[float]:
    """Map offered loads to served throughputs under the current ratios.

    Each tenant is served ``min(offered, share, mcbr)`` where its share is
    ``ratio * capacity / 100``.  When the ratios oversubscribe the cell
    (sum > 100) every share is scaled down proportionally, so the total
    served rate never exceeds the cell capacity.

    Args:
        offered: offered load per tenant, Mb/s.
        ratios: current RRM policy ratio per tenant, same order.
        cell: cell parameters.
        slas: SLA per tenant, same order.

    Returns:
        Served throughput per tenant, Mb/s.
    """
    if not (len(offered) == len(ratios) == len(slas)):
        raise ConfigurationError(
            f"offered/ratios/slas lengths differ: "
            f"{len(offered)}/{len(ratios)}/{len(slas)}"
        )
    for o in offered:
        if o < 0:
            raise ValueError(f"offered load must be >= 0, got {o}")

    shares = assigned_shares(ratios, cell)
    return [
        min(o, share, sla.mcbr_mbps)
        for o, share, sla in zip(offered, shares, slas)
    ]


def assigned_shares(
    ratios: Sequence[RRMPolicyRatio], cell: CellConfig
) -> list[float]:
    """Capacity (Mb/s) each ratio pins down, after oversubscription scaling.

    When the ratios sum past 100 they are scaled back proportionally, so
    the assigned shares never exceed the cell capacity in total.
    """
    ratio_sum = sum(r.dedicated_ratio for r in ratios)
    scale = 1.0 if ratio_sum <= 100 else 100.0 / ratio_sum
    return [r.dedicated_ratio * scale * cell.capacity_mbps / 100.0 for r in ratios]


def throughput_from_volume(volume_mbit: float, delta_t_s: float) -> float:
    """Convert a data volume accumulated over one period into a mean rate (Mb/s)."""
    if delta_t_s <= 0:
        raise ValueError(f"granularity period must be positive, got {delta_t_s}")
    if volume_mbit < 0:
        raise ValueError(f"volume must be >= 0, got {volume_mbit}")
    return volume_mbit / delta_t_s


def validate_scenario(config: ScenarioConfig) -> list[str]:
    """Check scenario invariants; returns a list of violations (empty when ok).

    Violations are reported as human-readable strings rather than raised, so
    callers can surface all of them at once.
    """
    violations = []
    if config.cell.capacity_mbps <= 0:
        violations.append(f"cell capacity must be positive, got {config.cell.capacity_mbps}")
    if config.cell.total_prb <= 0:
        violations.append(f"total PRB count must be positive, got {config.cell.total_prb}")
    if config.delta_t_s <= 0:
        violations.append(f"granularity period must be positive, got {config.delta_t_s}")
    if config.action_step_pct <= 0:
        violations.append(f"action step must be positive, got {config.action_step_pct}")

    seen = set()
    for tenant in config.tenants:
        tid = tenant.snssai.id
        if tid in seen:
            violations.append(f"duplicate snssai id {tid}")
        seen.add(tid)
        if tenant.sla.sagbr_mbps > tenant.sla.mcbr_mbps:
            violations.append(f"tenant {tid}: sagbr exceeds mcbr")
        if tenant.sla.mcbr_mbps > config.cell.capacity_mbps:
            violations.append(f"tenant {tid}: mcbr exceeds cell capacity")
        if not 0 <= tenant.initial_ratio <= 100:
            violations.append(f"tenant {tid}: initial ratio {tenant.initial_ratio} outside [0, 100]")

    total_initial = sum(t.initial_ratio for t in config.tenants)
    if total_initial > 100:
        violations.append(f"initial dedicated ratios sum to {total_initial} > 100")
    return violations


def mcbr_ratio_bound(sla: TenantSla, cell: CellConfig) -> int:
    """Largest useful dedicated ratio for a tenant: the MCBR expressed in percent."""
    return min(100, round(100.0 * sla.mcbr_mbps / cell.capacity_mbps))
