"""Capacity-sharing rApp: PM callback listener and the inference loop."""
from .callback import DEFAULT_CALLBACK_PORT, NotificationListener
from .loop import (
    LoopRecord,
    RappConfig,
    push_policy_update,
    read_loop_log,
    run_inference_loop,
)

__all__ = [
    "DEFAULT_CALLBACK_PORT",
    "NotificationListener",
    "LoopRecord",
    "RappConfig",
    "push_policy_update",
    "read_loop_log",
    "run_inference_loop",
]
