"""State featurization: PM measurements to the 7-feature agent input.

Every feature is observable through the O1 pipeline (PM file contents,
the tenant's own policy ratio, and static SLA constants), so inference
needs nothing beyond what the management interfaces deliver.
"""
from __future__ import annotations

import numpy as np

from capshare.nrm import CellConfig, RRMPolicyRatio, TenantSla, throughput_from_volume
from capshare.pm.report import PmReport

N_FEATURES = 7


class DegenerateInputError(ValueError):
    """Raised when the PM data cannot yield a meaningful state."""


def features_from_rates(
    ratio_pct: float,
    own_used_prb: float,
    others_used_prb: float,
    available_prb: float,
    throughput_mbps: float,
    sla: TenantSla,
    cell: CellConfig,
) -> np.ndarray:
    """The 7 features, each clamped to its documented range.

    Order: own ratio, own PRB utilization, other tenants' PRB utilization,
    spare PRB fraction, throughput relative to SAGBR (capped at 2),
    SAGBR/capacity, MCBR/capacity.
    """
    if available_prb <= 0:
        raise DegenerateInputError(
            f"available PRB must be positive, got {available_prb}"
        )
    total_used = own_used_prb + others_used_prb
    features = np.array(
        [
            np.clip(ratio_pct / 100.0, 0.0, 1.0),
            np.clip(own_used_prb / available_prb, 0.0, 1.0),
            np.clip(others_used_prb / available_prb, 0.0, 1.0),
            np.clip(1.0 - total_used / available_prb, 0.0, 1.0),
            np.clip(throughput_mbps / sla.sagbr_mbps, 0.0, 2.0),
            np.clip(sla.sagbr_mbps / cell.capacity_mbps, 0.0, 1.0),
            np.clip(sla.mcbr_mbps / cell.capacity_mbps, 0.0, 1.0),
        ],
        dtype=float,
    )
    if not np.all(np.isfinite(features)):
        raise DegenerateInputError(f"non-finite feature vector {features}")
    return features


def featurize(
    report: PmReport,
    sla: TenantSla,
    ratio: RRMPolicyRatio,
    cell: CellConfig,
    delta_t_s: float | None = None,
) -> np.ndarray:
    """Tenant state from a parsed PM report.

    ``delta_t_s`` defaults to the report's own granularity; passing it
    explicitly only matters when a file aggregates several periods.
    """
    measurement = next(
        (t for t in report.tenants if t.snssai == ratio.snssai), None
    )
    if measurement is None:
        raise DegenerateInputError(
            f"PM report for cell {report.cell_id!r} has no data for "
            f"S-NSSAI {ratio.snssai.id}"
        )
    others = sum(
        t.mean_dl_prb_used for t in report.tenants if t.snssai != ratio.snssai
    )
    period = report.granularity_s if delta_t_s is None else delta_t_s
    throughput = throughput_from_volume(measurement.dl_pdcp_volume_mbit, period)
    return features_from_rates(
        ratio_pct=ratio.dedicated_ratio,
        own_used_prb=measurement.mean_dl_prb_used,
        others_used_prb=others,
        available_prb=report.dl_total_available_prb,
        throughput_mbps=throughput,
        sla=sla,
        cell=cell,
    )
