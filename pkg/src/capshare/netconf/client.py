"""NETCONF client used by the management application.

Single-session, request-response: connect, exchange hellos, then issue
edit-config / get-config RPCs and close the session.  Replies are matched
to requests by message-id.
"""
from __future__ import annotations

import logging
import socket
from typing import Optional

from capshare.nrm import RRMPolicyRatio

from . import messages
from .messages import Reply
from .session import MessageStream, NetconfSession, SessionError, negotiate_session

log = logging.getLogger(__name__)


class NetconfClient:
    def __init__(self, host: str = "127.0.0.1", port: int = 8300, timeout: float = 10.0):
        self.host = host
        self.port = port
        self.timeout = timeout
        self.session: Optional[NetconfSession] = None
        self._sock: Optional[socket.socket] = None
        self._stream: Optional[MessageStream] = None

    @property
    def connected(self) -> bool:
        return self.session is not None and self.session.state == "established"

    def connect(self) -> NetconfSession:
        self._sock = socket.create_connection((self.host, self.port), timeout=self.timeout)
        try:
            self.session, self._stream = negotiate_session(self._sock, "client")
        except Exception:
            self._sock.close()
            self._sock = None
            raise
        return self.session

    def edit_config(self, policies: list[RRMPolicyRatio]) -> Reply:
        """Write the given ratios; the reply's ``ok`` flag carries the outcome."""
        request = messages.build_edit_config(policies)
        return self._call(request)

    def get_config(self, filter_id: Optional[int] = None) -> Reply:
        """Read the RRM policy subtree; entries arrive in ``reply.policies``."""
        request = messages.build_get_config(filter_id)
        return self._call(request)

    def close(self):
        """Close-session handshake, then drop the transport."""
        if self.connected:
            try:
                self._call(messages.build_close_session())
            except (SessionError, OSError) as exc:
                log.debug("close-session handshake failed: %s", exc)
        if self._sock is not None:
            self._sock.close()
        self._sock = None
        self._stream = None
        if self.session is not None:
            self.session.state = "closed"

    def __enter__(self):
        self.connect()
        return self

    def __exit__(self, *exc):
        self.close()

    def _call(self, request: bytes) -> Reply:
        if not self.connected:
            raise SessionError("no established session")
        request_id = messages.peek_message_id(request)
        self._stream.send(request)
        raw = self._stream.recv()
        if raw is None:
            self.session.state = "closed"
            raise SessionError("transport closed while awaiting rpc-reply")
        reply = messages.parse_reply(raw)
        if reply.message_id != request_id:
            raise SessionError(
                f"reply message-id {reply.message_id!r} does not match request {request_id!r}"
            )
        return reply
