"""Threaded NETCONF server fronting a policy datastore.

Listens on plain TCP (the transport a deployment would wrap in SSH),
negotiates one session per connection and answers edit-config,
get-config and close-session requests.  RPCs within a session are
strictly request-response; datastore writes from concurrent sessions are
serialized by the datastore itself.
"""
from __future__ import annotations

import logging
import socket
import threading

from . import messages
from .datastore import PolicyDatastore, apply_edit_config
from .framing import FramingError
from .session import NegotiationError, SessionError, negotiate_session

log = logging.getLogger(__name__)

DEFAULT_PORT = 8300


class NetconfServer:
    def __init__(self, store: PolicyDatastore, host: str = "127.0.0.1", port: int = DEFAULT_PORT):
        self.store = store
        self.host = host
        self.port = port
        self._sock: socket.socket | None = None
        self._accept_thread: threading.Thread | None = None
        self._session_threads: list[threading.Thread] = []
        self._next_session_id = 0
        self._running = False

    def start(self):
        self._sock = socket.create_server((self.host, self.port))
        self.port = self._sock.getsockname()[1]
        self._sock.settimeout(0.2)
        self._running = True
        self._accept_thread = threading.Thread(
            target=self._accept_loop, name="netconf-accept", daemon=True
        )
        self._accept_thread.start()
        log.info("netconf server listening on %s:%d", self.host, self.port)

    def stop(self):
        self._running = False
        if self._accept_thread is not None:
            self._accept_thread.join(timeout=2.0)
        if self._sock is not None:
            self._sock.close()
        for t in self._session_threads:
            t.join(timeout=2.0)

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()

    def _accept_loop(self):
        while self._running:
            try:
                conn, addr = self._sock.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            self._next_session_id += 1
            t = threading.Thread(
                target=self._serve_session,
                args=(conn, self._next_session_id),
                name=f"netconf-session-{self._next_session_id}",
                daemon=True,
            )
            self._session_threads.append(t)
            t.start()

    def _serve_session(self, conn: socket.socket, session_id: int):
        try:
            conn.settimeout(30.0)
            session, stream = negotiate_session(conn, "server", session_id)
            while True:
                raw = stream.recv()
                if raw is None:
                    break
                reply, close_after = self._dispatch(raw)
                stream.send(reply)
                if close_after:
                    session.state = "closed"
                    break
        except (NegotiationError, SessionError, FramingError, messages.MessageError) as exc:
            log.warning("session %d aborted: %s", session_id, exc)
        except (socket.timeout, OSError) as exc:
            log.warning("session %d transport error: %s", session_id, exc)
        finally:
            conn.close()

    def _dispatch(self, raw: bytes) -> tuple[bytes, bool]:
        message_id = messages.peek_message_id(raw)
        try:
            rpc = messages.parse_rpc(raw)
        except messages.RpcFault as fault:
            return messages.build_error_reply(message_id, fault.tag, fault.message), False
        if rpc.operation == "edit-config":
            return apply_edit_config(self.store, rpc), False
        if rpc.operation == "get-config":
            return messages.build_data_reply(rpc.message_id, self.store.get(rpc.filter_id)), False
        if rpc.operation == "close-session":
            # The ok reply is the last message on the session.
            return messages.build_ok_reply(rpc.message_id), True
        return (
            messages.build_error_reply(
                rpc.message_id, "operation-not-supported", f"unsupported operation {rpc.operation}"
            ),
            False,
        )
