"""Discovery daemon: registration, leases, queries, restart recovery."""

import json
import socket
import time

import pytest

from evsim.messaging import (
    DiscoveryClient,
    DiscoveryDaemon,
    MessageSchema,
    FieldSpec,
    Publication,
    Publisher,
)


@pytest.fixture
def daemon():
    d = DiscoveryDaemon(port=0, lease_ttl=1.0).start()
    yield d
    d.stop()


def _client(daemon):
    return DiscoveryClient((daemon.host, daemon.port))


class TestRegistry:
    def test_register_then_query(self, daemon):
        c = _client(daemon)
        c.register("node-a", 1, [Publication("/t", 0xAB, "tcp://127.0.0.1:9999")])
        pubs = c.query("/t")
        assert len(pubs) == 1
        assert pubs[0].endpoint == "tcp://127.0.0.1:9999"
        assert pubs[0].schema_hash == 0xAB

    def test_query_unknown_topic_empty(self, daemon):
        assert _client(daemon).query("/nothing") == []

    def test_multiple_publishers_same_topic(self, daemon):
        c = _client(daemon)
        c.register("a", 1, [Publication("/t", 1, "tcp://127.0.0.1:1111")])
        c.register("b", 2, [Publication("/t", 1, "tcp://127.0.0.1:2222")])
        eps = {p.endpoint for p in c.query("/t")}
        assert eps == {"tcp://127.0.0.1:1111", "tcp://127.0.0.1:2222"}

    def test_unregister_removes(self, daemon):
        c = _client(daemon)
        c.register("a", 5, [Publication("/t", 1, "tcp://127.0.0.1:1111")])
        c.unregister(5)
        assert c.query("/t") == []

    def test_lease_expiry_without_heartbeat(self, daemon):
        c = _client(daemon)
        c.register("a", 9, [Publication("/t", 1, "tcp://127.0.0.1:1111")])
        assert len(c.query("/t")) == 1
        time.sleep(daemon.lease_ttl + 1.0)
        assert c.query("/t") == []

    def test_heartbeat_renews_lease(self, daemon):
        c = _client(daemon)
        c.register("a", 9, [Publication("/t", 1, "tcp://127.0.0.1:1111")])
        deadline = time.monotonic() + daemon.lease_ttl + 1.0
        while time.monotonic() < deadline:
            c.heartbeat(9)
            time.sleep(daemon.lease_ttl / 4)
        assert len(c.query("/t")) == 1

    def test_heartbeat_unknown_node_errors(self, daemon):
        with pytest.raises(ConnectionError, match="unknown_node"):
            _client(daemon).heartbeat(424242)


class TestProtocol:
    def test_malformed_request_keeps_connection(self, daemon):
        with socket.create_connection((daemon.host, daemon.port), timeout=2.0) as s:
            f = s.makefile("rwb")
            f.write(b"BOGUS not-json\n")
            f.flush()
            reply = f.readline().decode()
            assert reply.startswith("ERR ")
            # connection still serves valid requests
            f.write(('QUERY {"topic": "/x"}\n').encode())
            f.flush()
            reply = f.readline().decode()
            assert reply.startswith("OK ")
            assert json.loads(reply[3:]) == {"publishers": []}

    def test_hashes_travel_as_hex_strings(self, daemon):
        c = _client(daemon)
        c.register("a", 2**63 + 5, [Publication("/t", 2**64 - 1, "tcp://127.0.0.1:1")])
        with socket.create_connection((daemon.host, daemon.port), timeout=2.0) as s:
            f = s.makefile("rwb")
            f.write(b'QUERY {"topic": "/t"}\n')
            f.flush()
            body = json.loads(f.readline().decode()[3:])
        assert body["publishers"][0]["schema_hash"] == "0x" + "f" * 16


class TestDaemonRestart:
    def test_state_rebuilt_from_heartbeats(self):
        schema = MessageSchema("M", (FieldSpec("x", "u8"),))
        d1 = DiscoveryDaemon(port=0, lease_ttl=1.5).start()
        pub = Publisher("/t", schema, daemon_addr=(d1.host, d1.port))
        try:
            c = DiscoveryClient((d1.host, d1.port))
            assert len(c.query("/t")) == 1
            port = d1.port
            d1.stop()
            time.sleep(0.2)
            d2 = DiscoveryDaemon(port=port, lease_ttl=1.5).start()
            try:
                # publisher re-registers within one heartbeat interval
                deadline = time.monotonic() + 1.5 + 1.0
                found = []
                while time.monotonic() < deadline:
                    found = DiscoveryClient((d2.host, port)).query("/t")
                    if found:
                        break
                    time.sleep(0.05)
                assert len(found) == 1
                assert found[0].endpoint == pub.endpoint
            finally:
                d2.stop()
        finally:
            pub.close()
