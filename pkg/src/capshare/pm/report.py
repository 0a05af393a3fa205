"""Performance-measurement report model and XML file codec.

A PM file covers one granularity period of one cell and carries three
measurements (names per 3GPP TS 28.552): per-slice mean DL PRB usage,
the cell's total available DL PRB, and the per-slice DL PDCP data volume
from which the management side computes throughput.  The file layout is
a simplified measData shape: file header, measurement-type table, one
measured-value row per object (cell or S-NSSAI).
"""
from __future__ import annotations

import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from datetime import datetime, timezone

from capshare.nrm import SNssai

log = logging.getLogger(__name__)

MEAS_PRB_USED = "Mean DL PRB used for data traffic"
MEAS_PRB_AVAILABLE = "DL total available PRB"
MEAS_PDCP_VOLUME = "DL PDCP PDU Data Volume"

REQUIRED_MEASUREMENTS = (MEAS_PRB_USED, MEAS_PRB_AVAILABLE, MEAS_PDCP_VOLUME)

_CELL_LDN_PREFIX = "Cell="
_SNSSAI_LDN_PREFIX = "SNSSAI="


class PmParseError(Exception):
    """PM file is malformed or lacks a required measurement."""


@dataclass
class TenantMeasurement:
    """Per-slice measured values for one granularity period."""

    snssai: SNssai
    mean_dl_prb_used: float
    dl_pdcp_volume_mbit: float


@dataclass
class PmReport:
    cell_id: str
    begin_time: datetime
    granularity_s: float
    dl_total_available_prb: float
    tenants: list[TenantMeasurement]

    def violations(self) -> list[str]:
        out = []
        if self.granularity_s <= 0:
            out.append(f"granularity must be positive, got {self.granularity_s}")
        if self.dl_total_available_prb < 0:
            out.append("available PRB count is negative")
        used_total = 0.0
        for t in self.tenants:
            if t.mean_dl_prb_used < 0:
                out.append(f"slice {t.snssai.id}: negative PRB usage")
            if t.dl_pdcp_volume_mbit < 0:
                out.append(f"slice {t.snssai.id}: negative data volume")
            used_total += t.mean_dl_prb_used
        if used_total > self.dl_total_available_prb * (1 + 1e-9):
            out.append(
                f"PRB usage {used_total} exceeds available {self.dl_total_available_prb}"
            )
        return out


def serialize_pm_report(report: PmReport) -> bytes:
    """Render a report as an XML PM file; refuses invariant-violating input."""
    problems = report.violations()
    if problems:
        raise ValueError(f"refusing to serialize invalid report: {'; '.join(problems)}")
    if report.begin_time.tzinfo is None:
        raise ValueError("begin_time must be timezone-aware (UTC)")

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        "<measCollecFile>",
        f'  <fileHeader cellId="{_escape(report.cell_id)}" '
        f'beginTime="{report.begin_time.isoformat()}" '
        f'granularityPeriod="{report.granularity_s!r}"/>',
        "  <measInfo>",
        "    <measTypes>",
        f'      <measType p="1">{MEAS_PRB_USED}</measType>',
        f'      <measType p="2">{MEAS_PRB_AVAILABLE}</measType>',
        f'      <measType p="3">{MEAS_PDCP_VOLUME}</measType>',
        "    </measTypes>",
        f'    <measValue measObjLdn="{_CELL_LDN_PREFIX}{_escape(report.cell_id)}">',
        f'      <r p="2">{report.dl_total_available_prb!r}</r>',
        "    </measValue>",
    ]
    for t in report.tenants:
        lines += [
            f'    <measValue measObjLdn="{_SNSSAI_LDN_PREFIX}{t.snssai.id}">',
            f'      <r p="1">{t.mean_dl_prb_used!r}</r>',
            f'      <r p="3">{t.dl_pdcp_volume_mbit!r}</r>',
            "    </measValue>",
        ]
    lines += ["  </measInfo>", "</measCollecFile>"]
    return "\n".join(lines).encode()


def parse_pm_report(data: bytes) -> PmReport:
    """Inverse of serialize_pm_report; tolerant of extra vendor measurements."""
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise PmParseError(f"malformed XML: {exc}") from exc

    header = root.find("fileHeader")
    if header is None:
        raise PmParseError("missing fileHeader")
    cell_id = header.get("cellId")
    begin_raw = header.get("beginTime")
    granularity_raw = header.get("granularityPeriod")
    if cell_id is None or begin_raw is None or granularity_raw is None:
        raise PmParseError("fileHeader lacks cellId, beginTime or granularityPeriod")
    try:
        begin_time = datetime.fromisoformat(begin_raw)
    except ValueError as exc:
        raise PmParseError(f"bad beginTime {begin_raw!r}") from exc

    info = root.find("measInfo")
    if info is None:
        raise PmParseError("missing measInfo")

    index_of: dict[str, str] = {}
    types_el = info.find("measTypes")
    for mt in types_el.findall("measType") if types_el is not None else []:
        name = (mt.text or "").strip()
        p = mt.get("p")
        if name in REQUIRED_MEASUREMENTS:
            index_of[name] = p
        else:
            log.warning("ignoring unknown measurement type %r", name)
    for name in REQUIRED_MEASUREMENTS:
        if name not in index_of:
            raise PmParseError(f"missing required measurement type: {name!r}")

    available = None
    tenants = []
    for mv in info.findall("measValue"):
        ldn = mv.get("measObjLdn", "")
        values = {r.get("p"): (r.text or "").strip() for r in mv.findall("r")}
        if ldn.startswith(_CELL_LDN_PREFIX):
            available = _value(values, index_of[MEAS_PRB_AVAILABLE], MEAS_PRB_AVAILABLE, ldn)
        elif ldn.startswith(_SNSSAI_LDN_PREFIX):
            snssai = SNssai(int(ldn[len(_SNSSAI_LDN_PREFIX):]))
            tenants.append(
                TenantMeasurement(
                    snssai=snssai,
                    mean_dl_prb_used=_value(values, index_of[MEAS_PRB_USED], MEAS_PRB_USED, ldn),
                    dl_pdcp_volume_mbit=_value(
                        values, index_of[MEAS_PDCP_VOLUME], MEAS_PDCP_VOLUME, ldn
                    ),
                )
            )
        else:
            log.warning("ignoring measValue with unknown object %r", ldn)
    if available is None:
        raise PmParseError(f"no cell row carrying {MEAS_PRB_AVAILABLE!r}")

    return PmReport(
        cell_id=cell_id,
        begin_time=begin_time,
        granularity_s=float(granularity_raw),
        dl_total_available_prb=available,
        tenants=tenants,
    )


def pm_file_name(cell_id: str, begin_time: datetime) -> str:
    stamp = begin_time.strftime("%Y%m%dT%H%M%SZ")
    return f"{cell_id}_{stamp}.xml"


def _value(values: dict, p: str, name: str, ldn: str) -> float:
    if p not in values:
        raise PmParseError(f"object {ldn!r} lacks a value for {name!r}")
    try:
        return float(values[p])
    except ValueError as exc:
        raise PmParseError(f"bad value {values[p]!r} for {name!r}") from exc


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def utc(year, month, day, hour=0, minute=0, second=0) -> datetime:
    """Shorthand for a UTC timestamp."""
    return datetime(year, month, day, hour, minute, second, tzinfo=timezone.utc)
