"""NETCONF XML message construction and parsing.

Covers the subset a capacity-sharing management loop needs: hello,
edit-config and get-config on the running datastore, rpc-reply/rpc-error
and close-session.  Configuration payloads are the 3GPP RRMPolicyRatio
subtree (TS 28.541): one element per slice carrying ``id`` and
``attributes/rRMPolicyDedicatedRatio``.
"""
from __future__ import annotations

import uuid
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Optional

from capshare.nrm import RRMPolicyRatio, SNssai

BASE_NS = "urn:ietf:params:xml:ns:netconf:base:1.0"
POLICY_NS = "urn:3gpp:sa5:_3gpp-nr-nrm-rrmpolicy"

CAP_BASE_10 = "urn:ietf:params:netconf:base:1.0"
CAP_BASE_11 = "urn:ietf:params:netconf:base:1.1"


class MessageError(Exception):
    """Structurally invalid NETCONF message."""


class RpcFault(Exception):
    """Application-level RPC failure, mapped to an rpc-error reply."""

    def __init__(self, tag: str, message: str):
        super().__init__(message)
        self.tag = tag
        self.message = message


def new_message_id() -> str:
    return f"urn:uuid:{uuid.uuid4()}"


def _qname(ns: str, local: str) -> str:
    return f"{{{ns}}}{local}"


def _parse(xml_bytes: bytes) -> ET.Element:
    try:
        return ET.fromstring(xml_bytes)
    except ET.ParseError as exc:
        raise MessageError(f"malformed XML: {exc}") from exc


# -- hello ------------------------------------------------------------------

def build_hello(capabilities, session_id: Optional[int] = None) -> bytes:
    caps = "\n".join(
        f"    <nc:capability>{cap}</nc:capability>" for cap in capabilities
    )
    sid = f"\n  <nc:session-id>{session_id}</nc:session-id>" if session_id else ""
    doc = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<nc:hello xmlns:nc="{BASE_NS}">\n'
        "  <nc:capabilities>\n"
        f"{caps}\n"
        "  </nc:capabilities>"
        f"{sid}\n"
        "</nc:hello>"
    )
    return doc.encode()


@dataclass
class Hello:
    capabilities: set[str]
    session_id: Optional[int] = None


def parse_hello(xml_bytes: bytes) -> Hello:
    root = _parse(xml_bytes)
    if root.tag != _qname(BASE_NS, "hello"):
        raise MessageError(f"expected hello, got {root.tag}")
    caps_el = root.find(_qname(BASE_NS, "capabilities"))
    if caps_el is None:
        raise MessageError("hello carries no capabilities element")
    caps = {
        (c.text or "").strip()
        for c in caps_el.findall(_qname(BASE_NS, "capability"))
    }
    caps.discard("")
    if not caps:
        raise MessageError("hello capabilities element is empty")
    sid_el = root.find(_qname(BASE_NS, "session-id"))
    session_id = int(sid_el.text.strip()) if sid_el is not None and sid_el.text else None
    return Hello(capabilities=caps, session_id=session_id)


# -- requests ---------------------------------------------------------------

def policy_element_xml(policy: RRMPolicyRatio, indent: str = "      ") -> str:
    i = indent
    return (
        f'{i}<rRMPolicyRatio xmlns="{POLICY_NS}">\n'
        f"{i}  <id>{policy.snssai.id}</id>\n"
        f"{i}  <attributes>\n"
        f"{i}    <rRMPolicyDedicatedRatio>{policy.dedicated_ratio}</rRMPolicyDedicatedRatio>\n"
        f"{i}  </attributes>\n"
        f"{i}</rRMPolicyRatio>"
    )


def build_edit_config(
    policies: list[RRMPolicyRatio], message_id: Optional[str] = None
) -> bytes:
    """Build an edit-config request writing the given RRM policy ratios.

    Targets the running datastore with test-option "set"; the config
    subtree carries one rRMPolicyRatio element per slice, in input order.
    """
    if not policies:
        raise ValueError("edit-config needs at least one policy entry")
    message_id = message_id or new_message_id()
    entries = "\n".join(policy_element_xml(p) for p in policies)
    doc = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<nc:rpc message-id="{message_id}"\n'
        f'xmlns:nc="{BASE_NS}">\n'
        "  <nc:edit-config>\n"
        "    <nc:target>\n"
        "      <nc:running/>\n"
        "    </nc:target>\n"
        "    <nc:test-option>set</nc:test-option>\n"
        "    <nc:config>\n"
        f"{entries}\n"
        "    </nc:config>\n"
        "  </nc:edit-config>\n"
        "</nc:rpc>"
    )
    return doc.encode()


def build_get_config(
    filter_id: Optional[int] = None, message_id: Optional[str] = None
) -> bytes:
    message_id = message_id or new_message_id()
    if filter_id is None:
        filter_block = ""
    else:
        filter_block = (
            '    <nc:filter type="subtree">\n'
            f'      <rRMPolicyRatio xmlns="{POLICY_NS}">\n'
            f"        <id>{filter_id}</id>\n"
            "      </rRMPolicyRatio>\n"
            "    </nc:filter>\n"
        )
    doc = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<nc:rpc message-id="{message_id}" xmlns:nc="{BASE_NS}">\n'
        "  <nc:get-config>\n"
        "    <nc:source>\n"
        "      <nc:running/>\n"
        "    </nc:source>\n"
        f"{filter_block}"
        "  </nc:get-config>\n"
        "</nc:rpc>"
    )
    return doc.encode()


def build_close_session(message_id: Optional[str] = None) -> bytes:
    message_id = message_id or new_message_id()
    doc = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<nc:rpc message-id="{message_id}" xmlns:nc="{BASE_NS}">\n'
        "  <nc:close-session/>\n"
        "</nc:rpc>"
    )
    return doc.encode()


@dataclass
class Rpc:
    """A parsed inbound rpc: operation name plus operation-specific payload."""

    message_id: str
    operation: str  # edit-config | get-config | close-session
    policies: list[RRMPolicyRatio] = field(default_factory=list)
    filter_id: Optional[int] = None


def peek_message_id(xml_bytes: bytes) -> str:
    """Extract just the message-id, for error replies to faulty requests."""
    root = _parse(xml_bytes)
    message_id = root.get("message-id")
    if not message_id:
        raise MessageError("rpc carries no message-id")
    return message_id


def parse_rpc(xml_bytes: bytes) -> Rpc:
    root = _parse(xml_bytes)
    if root.tag != _qname(BASE_NS, "rpc"):
        raise MessageError(f"expected rpc, got {root.tag}")
    message_id = root.get("message-id")
    if not message_id:
        raise MessageError("rpc carries no message-id")

    edit = root.find(_qname(BASE_NS, "edit-config"))
    if edit is not None:
        # Standard nesting puts config inside edit-config; some emitters
        # place it as a direct child of rpc.  Accept both.
        config = edit.find(_qname(BASE_NS, "config"))
        if config is None:
            config = root.find(_qname(BASE_NS, "config"))
        if config is None:
            raise MessageError("edit-config carries no config element")
        return Rpc(message_id, "edit-config", policies=_parse_policy_config(config))

    get = root.find(_qname(BASE_NS, "get-config"))
    if get is not None:
        filter_id = None
        filter_el = get.find(_qname(BASE_NS, "filter"))
        if filter_el is not None:
            id_el = filter_el.find(f"{_qname(POLICY_NS, 'rRMPolicyRatio')}/{_qname(POLICY_NS, 'id')}")
            if id_el is not None and id_el.text:
                filter_id = int(id_el.text.strip())
        return Rpc(message_id, "get-config", filter_id=filter_id)

    if root.find(_qname(BASE_NS, "close-session")) is not None:
        return Rpc(message_id, "close-session")

    raise MessageError("rpc carries no supported operation")


def _parse_policy_config(config: ET.Element) -> list[RRMPolicyRatio]:
    policies = []
    for child in config:
        if child.tag != _qname(POLICY_NS, "rRMPolicyRatio"):
            raise RpcFault(
                "unknown-namespace",
                f"unsupported config element {child.tag}",
            )
        id_el = child.find(_qname(POLICY_NS, "id"))
        ratio_el = child.find(
            f"{_qname(POLICY_NS, 'attributes')}/{_qname(POLICY_NS, 'rRMPolicyDedicatedRatio')}"
        )
        if id_el is None or id_el.text is None or ratio_el is None or ratio_el.text is None:
            raise RpcFault("missing-element", "rRMPolicyRatio entry lacks id or ratio")
        try:
            snssai = SNssai(int(id_el.text.strip()))
        except ValueError as exc:
            raise RpcFault("invalid-value", f"bad snssai id {id_el.text!r}") from exc
        try:
            policy = RRMPolicyRatio(snssai, int(ratio_el.text.strip()))
        except ValueError as exc:
            raise RpcFault(
                "invalid-value",
                f"bad dedicated ratio {ratio_el.text!r} for slice {snssai.id}",
            ) from exc
        policies.append(policy)
    if not policies:
        raise RpcFault("missing-element", "config carries no rRMPolicyRatio entries")
    return policies


# -- replies ----------------------------------------------------------------

def build_ok_reply(message_id: str) -> bytes:
    doc = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<nc:rpc-reply message-id="{message_id}" xmlns:nc="{BASE_NS}">\n'
        "  <nc:ok/>\n"
        "</nc:rpc-reply>"
    )
    return doc.encode()


def build_error_reply(message_id: str, tag: str, message: str) -> bytes:
    doc = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<nc:rpc-reply message-id="{message_id}" xmlns:nc="{BASE_NS}">\n'
        "  <nc:rpc-error>\n"
        "    <nc:error-type>application</nc:error-type>\n"
        f"    <nc:error-tag>{tag}</nc:error-tag>\n"
        "    <nc:error-severity>error</nc:error-severity>\n"
        f"    <nc:error-message>{_escape(message)}</nc:error-message>\n"
        "  </nc:rpc-error>\n"
        "</nc:rpc-reply>"
    )
    return doc.encode()


def build_data_reply(message_id: str, policies: list[RRMPolicyRatio]) -> bytes:
    if policies:
        entries = "\n".join(policy_element_xml(p, indent="    ") for p in policies)
        data = f"  <nc:data>\n{entries}\n  </nc:data>\n"
    else:
        data = "  <nc:data/>\n"
    doc = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<nc:rpc-reply message-id="{message_id}" xmlns:nc="{BASE_NS}">\n'
        f"{data}"
        "</nc:rpc-reply>"
    )
    return doc.encode()


@dataclass
class Reply:
    message_id: str
    ok: bool
    error_tag: Optional[str] = None
    error_message: Optional[str] = None
    policies: list[RRMPolicyRatio] = field(default_factory=list)


def parse_reply(xml_bytes: bytes) -> Reply:
    root = _parse(xml_bytes)
    if root.tag != _qname(BASE_NS, "rpc-reply"):
        raise MessageError(f"expected rpc-reply, got {root.tag}")
    message_id = root.get("message-id") or ""
    error = root.find(_qname(BASE_NS, "rpc-error"))
    if error is not None:
        tag_el = error.find(_qname(BASE_NS, "error-tag"))
        msg_el = error.find(_qname(BASE_NS, "error-message"))
        return Reply(
            message_id,
            ok=False,
            error_tag=tag_el.text.strip() if tag_el is not None and tag_el.text else None,
            error_message=msg_el.text if msg_el is not None else None,
        )
    data = root.find(_qname(BASE_NS, "data"))
    policies = []
    if data is not None:
        for child in data.findall(_qname(POLICY_NS, "rRMPolicyRatio")):
            id_el = child.find(_qname(POLICY_NS, "id"))
            ratio_el = child.find(
                f"{_qname(POLICY_NS, 'attributes')}/{_qname(POLICY_NS, 'rRMPolicyDedicatedRatio')}"
            )
            if id_el is None or ratio_el is None:
                raise MessageError("malformed rRMPolicyRatio entry in data reply")
            policies.append(
                RRMPolicyRatio(SNssai(int(id_el.text.strip())), int(ratio_el.text.strip()))
            )
    return Reply(message_id, ok=True, policies=policies)


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )
