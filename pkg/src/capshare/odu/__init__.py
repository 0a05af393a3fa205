from .sim import (
    SCENARIO_EPOCH,
    OduState,
    SimClock,
    StepRecord,
    build_pm_report,
    make_odu_state,
    publish_pm,
    read_truth,
    run_serve_loop,
    sim_step,
    write_truth,
)
from .traffic import (
    EMBB_PROFILE,
    FWA_PROFILE,
    PROFILES,
    TrafficProfile,
    flat_profile,
    get_profile,
    offered_load,
)

__all__ = [
    "SCENARIO_EPOCH",
    "OduState",
    "SimClock",
    "StepRecord",
    "build_pm_report",
    "make_odu_state",
    "publish_pm",
    "read_truth",
    "run_serve_loop",
    "sim_step",
    "write_truth",
    "EMBB_PROFILE",
    "FWA_PROFILE",
    "PROFILES",
    "TrafficProfile",
    "flat_profile",
    "get_profile",
    "offered_load",
]
