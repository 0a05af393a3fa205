"""Live NETCONF sessions over TCP: negotiation, RPC exchange, teardown."""
import socket
import threading

import pytest

from capshare.netconf import messages
from capshare.netconf.client import NetconfClient
from capshare.netconf.datastore import PolicyDatastore
from capshare.netconf.server import NetconfServer
from capshare.netconf.session import (
    NegotiationError,
    SessionError,
    negotiate_session,
)
from capshare.nrm import RRMPolicyRatio, SNssai


def policies(*pairs):
    return [RRMPolicyRatio(SNssai(i), r) for i, r in pairs]


@pytest.fixture
def server():
    store = PolicyDatastore()
    srv = NetconfServer(store, port=0)
    srv.start()
    yield srv
    srv.stop()


class TestNegotiation:
    def _run_pair(self, server_behavior):
        left, right = socket.socketpair()
        result = {}

        def server_side():
            try:
                result["server"] = server_behavior(right)
            except Exception as exc:  # collected for assertions
                result["server_error"] = exc

        t = threading.Thread(target=server_side)
        t.start()
        try:
            session, stream = negotiate_session(left, "client")
            result["client"] = session
        except Exception as exc:
            result["client_error"] = exc
        t.join(timeout=5)
        left.close()
        right.close()
        return result

    def test_both_sides_11_negotiates_chunked(self):
        def behavior(sock):
            session, _ = negotiate_session(sock, "server", session_id=5)
            return session

        result = self._run_pair(behavior)
        assert result["client"].negotiated_version == "1.1"
        assert result["client"].session_id == 5
        assert result["server"].negotiated_version == "1.1"
        assert result["client"].state == "established"

    def test_server_with_only_base_10_falls_back(self):
        def behavior(sock):
            sock.sendall(
                messages.build_hello([messages.CAP_BASE_10], session_id=9) + b"]]>]]>"
            )
            # Absorb the client hello so the socket drains cleanly.
            sock.recv(65536)
            return None

        result = self._run_pair(behavior)
        assert result["client"].negotiated_version == "1.0"

    def test_hello_without_capabilities_fails_negotiation(self):
        def behavior(sock):
            doc = f'<nc:hello xmlns:nc="{messages.BASE_NS}"/>'.encode()
            sock.sendall(doc + b"]]>]]>")
            sock.recv(65536)
            return None

        result = self._run_pair(behavior)
        assert isinstance(result["client_error"], NegotiationError)

    def test_no_common_base_fails_negotiation(self):
        def behavior(sock):
            sock.sendall(
                messages.build_hello(["urn:ietf:params:netconf:base:2.0"], session_id=1)
                + b"]]>]]>"
            )
            sock.recv(65536)
            return None

        result = self._run_pair(behavior)
        assert isinstance(result["client_error"], NegotiationError)

    def test_transport_closed_mid_hello_fails(self):
        def behavior(sock):
            sock.recv(65536)
            sock.close()
            return None

        result = self._run_pair(behavior)
        assert isinstance(result["client_error"], SessionError)


class TestClientServer:
    def test_edit_then_get_config_round_trip(self, server):
        with NetconfClient(port=server.port) as client:
            assert client.session.negotiated_version == "1.1"
            reply = client.edit_config(policies((1, 57), (2, 42)))
            assert reply.ok
            read = client.get_config()
            assert read.ok
            assert {p.snssai.id: p.dedicated_ratio for p in read.policies} == {1: 57, 2: 42}

    def test_get_config_with_filter(self, server):
        with NetconfClient(port=server.port) as client:
            client.edit_config(policies((1, 57), (2, 42)))
            read = client.get_config(filter_id=2)
            assert [p.dedicated_ratio for p in read.policies] == [42]

    def test_server_rejects_bad_ratio_on_wire(self, server):
        doc = messages.build_edit_config(policies((1, 57))).replace(b">57<", b">157<")
        with NetconfClient(port=server.port) as client:
            reply = client._call(doc)
            assert not reply.ok
            assert reply.error_tag == "invalid-value"
        assert server.store.snapshot() == {}

    def test_sequential_sessions_get_distinct_ids(self, server):
        with NetconfClient(port=server.port) as first:
            id_one = first.session.session_id
        with NetconfClient(port=server.port) as second:
            id_two = second.session.session_id
        assert id_one != id_two

    def test_writes_visible_across_sessions(self, server):
        with NetconfClient(port=server.port) as client:
            client.edit_config(policies((4, 25)))
        with NetconfClient(port=server.port) as client:
            read = client.get_config()
            assert {p.snssai.id: p.dedicated_ratio for p in read.policies} == {4: 25}

    def test_close_is_idempotent(self, server):
        client = NetconfClient(port=server.port)
        client.connect()
        client.close()
        client.close()
        assert client.session.state == "closed"
