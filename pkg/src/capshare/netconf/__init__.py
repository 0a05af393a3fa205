"""Minimal NETCONF 1.1 client/server for RRM policy provisioning."""
from .client import NetconfClient
from .datastore import PolicyDatastore, apply_edit_config, get_config
from .framing import (
    ChunkedDecoder,
    EomDecoder,
    FramingError,
    decode_chunked,
    encode_chunked,
    encode_eom,
)
from .messages import (
    BASE_NS,
    POLICY_NS,
    MessageError,
    Reply,
    Rpc,
    RpcFault,
    build_edit_config,
    build_get_config,
    parse_reply,
    parse_rpc,
)
from .server import NetconfServer
from .session import NegotiationError, NetconfSession, SessionError, negotiate_session

__all__ = [
    "BASE_NS",
    "POLICY_NS",
    "ChunkedDecoder",
    "EomDecoder",
    "FramingError",
    "MessageError",
    "NegotiationError",
    "NetconfClient",
    "NetconfServer",
    "NetconfSession",
    "PolicyDatastore",
    "Reply",
    "Rpc",
    "RpcFault",
    "SessionError",
    "apply_edit_config",
    "build_edit_config",
    "build_get_config",
    "decode_chunked",
    "encode_chunked",
    "encode_eom",
    "get_config",
    "negotiate_session",
    "parse_reply",
    "parse_rpc",
]
