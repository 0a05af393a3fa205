"""Weekly offered-load curves for the simulated tenants.

Each profile is a week of hourly control points (7 days x 24 values,
expressed as fractions of cell capacity) with piecewise-linear
interpolation in between, wrapping Sunday night back to Monday morning.
Day 0 is Monday.  Gaussian noise on top makes consecutive periods differ
even at identical wall times.

The built-in eMBB and FWA shapes follow the usual enterprise/residential
split: eMBB peaks on weekday business hours near 0.85 of capacity and
drops to roughly half on weekends, FWA climbs through the evening to
about 0.6.  Their sum crosses cell capacity on weekday middays and
afternoons, so both congested and uncongested regimes occur every
simulated week.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from capshare.nrm import ConfigurationError

HOURS_PER_DAY = 24
DAYS_PER_WEEK = 7
SECONDS_PER_HOUR = 3600.0
SECONDS_PER_WEEK = DAYS_PER_WEEK * HOURS_PER_DAY * SECONDS_PER_HOUR

# Control points may exceed 1.0 (demand above capacity is meaningful offered
# load) but not by more than 20%.
MAX_FRACTION = 1.2


@dataclass(frozen=True)
class TrafficProfile:
    name: str
    hourly: tuple  # 7 tuples of 24 capacity fractions
    noise_std: float = 0.02

    def __post_init__(self):
        if len(self.hourly) != DAYS_PER_WEEK:
            raise ConfigurationError(
                f"profile {self.name!r}: need {DAYS_PER_WEEK} days, got {len(self.hourly)}"
            )
        for day, values in enumerate(self.hourly):
            if len(values) != HOURS_PER_DAY:
                raise ConfigurationError(
                    f"profile {self.name!r} day {day}: need {HOURS_PER_DAY} hourly "
                    f"values, got {len(values)}"
                )
            for hour, v in enumerate(values):
                if not 0.0 <= v <= MAX_FRACTION:
                    raise ConfigurationError(
                        f"profile {self.name!r} day {day} hour {hour}: "
                        f"fraction {v} outside [0, {MAX_FRACTION}]"
                    )
        if self.noise_std < 0:
            raise ConfigurationError(f"profile {self.name!r}: negative noise_std")

    def _flat(self) -> np.ndarray:
        return np.asarray(self.hourly, dtype=float).reshape(-1)

    def fraction_at(self, t_s: float) -> float:
        """Noise-free capacity fraction at virtual time ``t_s`` (s since Monday 00:00)."""
        if t_s < 0:
            raise ValueError(f"negative virtual time {t_s}")
        anchors = self._flat()
        position = (t_s % SECONDS_PER_WEEK) / SECONDS_PER_HOUR
        left = int(position)
        frac = position - left
        right = (left + 1) % anchors.size
        return float(anchors[left] * (1.0 - frac) + anchors[right] * frac)


def offered_load(
    profile: TrafficProfile,
    t_s: float,
    capacity_mbps: float,
    rng: np.random.Generator | None = None,
) -> float:
    """Offered load in Mb/s at virtual time ``t_s``, noisy when ``rng`` is given."""
    load = profile.fraction_at(t_s) * capacity_mbps
    if rng is not None and profile.noise_std > 0:
        load += rng.normal(0.0, profile.noise_std * capacity_mbps)
    return max(load, 0.0)


def flat_profile(level: float, noise_std: float = 0.0, name: str = "flat") -> TrafficProfile:
    day = tuple([level] * HOURS_PER_DAY)
    return TrafficProfile(name, tuple(day for _ in range(DAYS_PER_WEEK)), noise_std)


_EMBB_WEEKDAY = (
    0.10, 0.08, 0.06, 0.06, 0.08, 0.12,
    0.20, 0.35, 0.60, 0.78, 0.85, 0.85,
    0.80, 0.82, 0.85, 0.84, 0.80, 0.70,
    0.55, 0.45, 0.38, 0.32, 0.22, 0.15,
)
_EMBB_WEEKEND = (
    0.06, 0.05, 0.04, 0.04, 0.05, 0.08,
    0.10, 0.15, 0.22, 0.30, 0.38, 0.42,
    0.42, 0.40, 0.40, 0.38, 0.35, 0.32,
    0.30, 0.28, 0.25, 0.20, 0.14, 0.10,
)
_FWA_WEEKDAY = (
    0.30, 0.22, 0.15, 0.10, 0.08, 0.08,
    0.10, 0.14, 0.16, 0.17, 0.18, 0.20,
    0.24, 0.24, 0.25, 0.26, 0.28, 0.34,
    0.42, 0.50, 0.56, 0.58, 0.52, 0.40,
)
_FWA_WEEKEND = (
    0.32, 0.24, 0.16, 0.10, 0.08, 0.08,
    0.10, 0.15, 0.20, 0.26, 0.32, 0.36,
    0.38, 0.38, 0.36, 0.36, 0.38, 0.42,
    0.48, 0.54, 0.58, 0.60, 0.52, 0.42,
)

EMBB_PROFILE = TrafficProfile(
    "embb_business", tuple([_EMBB_WEEKDAY] * 5 + [_EMBB_WEEKEND] * 2)
)
FWA_PROFILE = TrafficProfile(
    "fwa_residential", tuple([_FWA_WEEKDAY] * 5 + [_FWA_WEEKEND] * 2)
)

PROFILES: dict[str, TrafficProfile] = {
    EMBB_PROFILE.name: EMBB_PROFILE,
    FWA_PROFILE.name: FWA_PROFILE,
}


def get_profile(name: str) -> TrafficProfile:
    try:
        return PROFILES[name]
    except KeyError:
        known = ", ".join(sorted(PROFILES))
        raise ConfigurationError(f"unknown traffic profile {name!r} (known: {known})") from None
