"""Performance-assurance plumbing: PM report files and their distribution."""
from .report import (
    MEAS_PDCP_VOLUME,
    MEAS_PRB_AVAILABLE,
    MEAS_PRB_USED,
    REQUIRED_MEASUREMENTS,
    PmParseError,
    PmReport,
    TenantMeasurement,
    parse_pm_report,
    pm_file_name,
    serialize_pm_report,
    utc,
)
from .transport import (
    FileReadyNotification,
    IntegrityError,
    MissingFileError,
    PmFileServer,
    fetch_pm_file,
    notify_file_ready,
)

__all__ = [
    "MEAS_PDCP_VOLUME",
    "MEAS_PRB_AVAILABLE",
    "MEAS_PRB_USED",
    "REQUIRED_MEASUREMENTS",
    "FileReadyNotification",
    "IntegrityError",
    "MissingFileError",
    "PmFileServer",
    "PmParseError",
    "PmReport",
    "TenantMeasurement",
    "fetch_pm_file",
    "notify_file_ready",
    "parse_pm_report",
    "pm_file_name",
    "serialize_pm_report",
    "utc",
]
