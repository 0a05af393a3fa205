"""NETCONF session establishment over a byte-stream transport.

The transport is anything socket-like (``recv``/``sendall``/``close``), so
the same session logic can later sit on an SSH channel.  Hello messages
are always delimited with ``]]>]]>``; after a successful capability
exchange the stream switches to chunked framing when both ends advertise
base:1.1, and stays on end-of-message framing otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import messages
from .framing import ChunkedDecoder, EomDecoder, encode_chunked, encode_eom

RECV_SIZE = 65536


class NegotiationError(Exception):
    """Capability exchange failed; no session was established."""


class SessionError(Exception):
    """Transport failed or closed while a session was in use."""


@dataclass
class NetconfSession:
    session_id: int
    negotiated_version: str  # "1.0" or "1.1"
    state: str = "connecting"  # connecting | hello-sent | established | closed


class MessageStream:
    """Sends and receives framed NETCONF messages on a transport."""

    def __init__(self, transport):
        self._transport = transport
        self._decoder = EomDecoder()
        self._chunked = False
        self._pending: list[bytes] = []

    def switch_to_chunked(self):
        # The peer may have pipelined its first chunked message right after
        # the hello; whatever the EOM decoder buffered past the hello
        # belongs to the new framing.
        residual = self._decoder.residual()
        self._decoder = ChunkedDecoder()
        self._chunked = True
        if residual:
            self._pending.extend(self._decoder.feed(residual))

    def send(self, message: bytes):
        framed = encode_chunked(message) if self._chunked else encode_eom(message)
        self._transport.sendall(framed)

    def recv(self) -> Optional[bytes]:
        """Next complete message, or None when the peer closed the stream."""
        while not self._pending:
            data = self._transport.recv(RECV_SIZE)
            if not data:
                return None
            self._pending.extend(self._decoder.feed(data))
        return self._pending.pop(0)


def negotiate_session(
    transport, role: str, session_id: Optional[int] = None
) -> tuple[NetconfSession, MessageStream]:
    """Run the hello exchange and return the established session and stream.

    The server passes the session id it assigns; the client learns it from
    the server's hello.  Version 1.1 (chunked framing) is negotiated when
    both sides advertise it, otherwise 1.0 with end-of-message framing.
    """
    if role not in ("client", "server"):
        raise ValueError(f"role must be client or server, got {role!r}")
    if role == "server" and not session_id:
        raise ValueError("server role requires a session id to assign")

    stream = MessageStream(transport)
    own_caps = [messages.CAP_BASE_10, messages.CAP_BASE_11]
    stream.send(
        messages.build_hello(own_caps, session_id if role == "server" else None)
    )

    raw = stream.recv()
    if raw is None:
        raise SessionError("transport closed during hello exchange")
    try:
        peer = messages.parse_hello(raw)
    except messages.MessageError as exc:
        raise NegotiationError(str(exc)) from exc

    if messages.CAP_BASE_11 in peer.capabilities:
        version = "1.1"
    elif messages.CAP_BASE_10 in peer.capabilities:
        version = "1.0"
    else:
        raise NegotiationError(
            f"no common base capability; peer offered {sorted(peer.capabilities)}"
        )

    if role == "client":
        if peer.session_id is None:
            raise NegotiationError("server hello carries no session-id")
        session_id = peer.session_id

    if version == "1.1":
        stream.switch_to_chunked()
    session = NetconfSession(session_id=session_id, negotiated_version=version)
    session.state = "established"
    return session, stream
