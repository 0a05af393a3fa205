"""Running datastore holding the per-slice RRM policy ratios.

One entry per S-NSSAI.  Writes are atomic (all-or-nothing per RPC) and
bump a monotonically increasing revision counter, which the simulator
uses to detect that a management client has reconfigured the cell.
Thread-safe: the NETCONF server writes from session threads while the
simulation loop reads.
"""
from __future__ import annotations

import threading
from typing import Optional

from capshare.nrm import RRMPolicyRatio

from . import messages
from .messages import Rpc, RpcFault


class PolicyDatastore:
    def __init__(self, initial: Optional[list[RRMPolicyRatio]] = None):
        self._entries: dict[int, RRMPolicyRatio] = {}
        self._revision = 0
        self._cond = threading.Condition()
        if initial:
            self.apply(initial)

    @property
    def revision(self) -> int:
        with self._cond:
            return self._revision

    def snapshot(self) -> dict[int, RRMPolicyRatio]:
        """Current entries keyed by S-NSSAI id."""
        with self._cond:
            return dict(self._entries)

    def get(self, filter_id: Optional[int] = None) -> list[RRMPolicyRatio]:
        """Entries sorted by id; an absent filter id yields an empty list."""
        with self._cond:
            if filter_id is not None:
                entry = self._entries.get(filter_id)
                return [entry] if entry is not None else []
            return [self._entries[k] for k in sorted(self._entries)]

    def apply(self, policies: list[RRMPolicyRatio]) -> int:
        """Merge the given entries atomically; returns the new revision.

        Validation happens before any entry is written, so a bad entry
        leaves the datastore untouched.
        """
        for p in policies:
            if not 0 <= p.dedicated_ratio <= 100:
                raise RpcFault(
                    "invalid-value",
                    f"dedicated ratio {p.dedicated_ratio} outside [0, 100]",
                )
        with self._cond:
            for p in policies:
                self._entries[p.snssai.id] = p
            self._revision += 1
            self._cond.notify_all()
            return self._revision

    def wait_for_revision(self, above: int, timeout: float) -> bool:
        """Block until the revision exceeds ``above`` or the timeout expires."""
        deadline = None if timeout is None else timeout
        with self._cond:
            return self._cond.wait_for(lambda: self._revision > above, timeout=deadline)


def apply_edit_config(store: PolicyDatastore, rpc: Rpc | bytes) -> bytes:
    """Execute an edit-config against the datastore, returning the reply document.

    Faults (bad namespace, out-of-range ratio, missing elements) produce an
    rpc-error reply and leave the datastore and its revision unchanged.
    """
    if isinstance(rpc, (bytes, bytearray)):
        raw = bytes(rpc)
        message_id = messages.peek_message_id(raw)
        try:
            rpc = messages.parse_rpc(raw)
        except RpcFault as fault:
            return messages.build_error_reply(message_id, fault.tag, fault.message)
    try:
        if rpc.operation != "edit-config":
            raise RpcFault(
                "operation-not-supported", f"expected edit-config, got {rpc.operation}"
            )
        store.apply(rpc.policies)
    except RpcFault as fault:
        return messages.build_error_reply(rpc.message_id, fault.tag, fault.message)
    return messages.build_ok_reply(rpc.message_id)


def get_config(store: PolicyDatastore, filter_id: Optional[int] = None) -> bytes:
    """Render the current RRM policy subtree(s) as a config document."""
    entries = store.get(filter_id)
    if entries:
        body = "\n".join(messages.policy_element_xml(p, indent="  ") for p in entries)
        doc = f"<nc:config xmlns:nc=\"{messages.BASE_NS}\">\n{body}\n</nc:config>"
    else:
        doc = f"<nc:config xmlns:nc=\"{messages.BASE_NS}\"/>"
    return doc.encode()
