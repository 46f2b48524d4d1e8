"""Dynamic discovery: a registry daemon with leases, plus its client.

The daemon is control-plane only; message data flows peer-to-peer between
publishers and subscribers. Protocol: line-delimited text over TCP, one
``VERB json`` request per line, answered by ``OK json`` or ``ERR json``.
Nodes that stop heartbeating expire after the lease TTL. 64-bit ids and
hashes travel as hex strings so any language can parse them exactly.
"""

from __future__ import annotations

import json
import logging
import os
import socket
import threading
import time
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)

DEFAULT_DISCOVERY_PORT = 7780
DAEMON_ADDR_ENV = "EVSIM_DAEMON_ADDR"


def default_daemon_addr() -> tuple[str, int]:
    """Daemon address from $EVSIM_DAEMON_ADDR (host:port) or the default port."""
    raw = os.environ.get(DAEMON_ADDR_ENV)
    if raw:
        host, _, port = raw.rpartition(":")
        return host or "127.0.0.1", int(port)
    return "127.0.0.1", DEFAULT_DISCOVERY_PORT


def _hex64(value: int) -> str:
    return f"0x{value:016x}"


def _parse_hex64(text: str) -> int:
    return int(text, 16)


@dataclass
class Publication:
    topic: str
    schema_hash: int
    endpoint: str


@dataclass
class NodeInfo:
    node_name: str
    node_id: int
    publications: list[Publication] = field(default_factory=list)
    lease_deadline: float = 0.0  # monotonic seconds


class DiscoveryDaemon:
    """Registry of active nodes and their advertised topics."""

    def __init__(self, port: int = DEFAULT_DISCOVERY_PORT, lease_ttl: float = 6.0,
                 host: str = "127.0.0.1"):
        self.lease_ttl = lease_ttl
        self._nodes: dict[int, NodeInfo] = {}
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            self._sock.bind((host, port))
        except OSError:
            self._sock.close()
            raise
        self._sock.listen(64)
        self.host, self.port = self._sock.getsockname()

    def start(self) -> "DiscoveryDaemon":
        t = threading.Thread(target=self._accept_loop, name="discovery-accept", daemon=True)
        t.start()
        self._threads.append(t)
        t = threading.Thread(target=self._sweep_loop, name="discovery-sweep", daemon=True)
        t.start()
        self._threads.append(t)
        return self

    def stop(self) -> None:
        self._stop.set()
        try:
            self._sock.shutdown(socket.SHUT_RDWR)  # wakes the blocked accept
        except OSError:
            pass
        try:
            self._sock.close()
        except OSError:
            pass

    # -- request handling ---------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                conn, _ = self._sock.accept()
            except OSError:
                return
            t = threading.Thread(target=self._serve, args=(conn,), daemon=True)
            t.start()

    def _serve(self, conn: socket.socket) -> None:
        with conn:
            rfile = conn.makefile("rb")
            while not self._stop.is_set():
                try:
                    line = rfile.readline()
                except OSError:
                    return  # peer vanished mid-request
                if not line:
                    return
                try:
                    reply = self._handle(line.decode("utf-8").strip())
                except Exception as e:  # malformed request: reply, keep connection
                    reply = "ERR " + json.dumps({"error": str(e)})
                try:
                    conn.sendall(reply.encode("utf-8") + b"\n")
                except OSError:
                    return

    def _handle(self, line: str) -> str:
        verb, _, rest = line.partition(" ")
        body = json.loads(rest) if rest else {}
        now = time.monotonic()
        if verb == "REGISTER":
            node = NodeInfo(
                node_name=body["node_name"],
                node_id=_parse_hex64(body["node_id"]),
                publications=[
                    Publication(p["topic"], _parse_hex64(p["schema_hash"]), p["endpoint"])
                    for p in body.get("publications", [])
                ],
                lease_deadline=now + self.lease_ttl,
            )
            with self._lock:
                self._nodes[node.node_id] = node
            return "OK " + json.dumps({"lease_ttl": self.lease_ttl})
        if verb == "HEARTBEAT":
            node_id = _parse_hex64(body["node_id"])
            with self._lock:
                node = self._nodes.get(node_id)
                if node is None or node.lease_deadline < now:
                    return "ERR " + json.dumps({"error": "unknown_node"})
                node.lease_deadline = now + self.lease_ttl
            return "OK " + json.dumps({"lease_ttl": self.lease_ttl})
        if verb == "QUERY":
            topic = body["topic"]
            out = []
            with self._lock:
                for node in self._nodes.values():
                    if node.lease_deadline < now:
                        continue
                    for p in node.publications:
                        if p.topic == topic:
                            out.append({
                                "endpoint": p.endpoint,
                                "schema_hash": _hex64(p.schema_hash),
                                "node_id": _hex64(node.node_id),
                            })
            return "OK " + json.dumps({"publishers": out})
        if verb == "UNREGISTER":
            node_id = _parse_hex64(body["node_id"])
            with self._lock:
                self._nodes.pop(node_id, None)
            return "OK {}"
        raise ValueError(f"unknown verb {verb!r}")

    def _sweep_loop(self) -> None:
        while not self._stop.wait(self.lease_ttl / 2):
            now = time.monotonic()
            with self._lock:
                dead = [nid for nid, n in self._nodes.items() if n.lease_deadline < now]
                for nid in dead:
                    del self._nodes[nid]


class DiscoveryClient:
    """One-request-per-connection client; robust to daemon restarts."""

    def __init__(self, addr: tuple[str, int] | None = None, timeout: float = 2.0):
        self.addr = addr if addr is not None else default_daemon_addr()
        self.timeout = timeout

    def _request(self, verb: str, body: dict) -> dict:
        with socket.create_connection(self.addr, timeout=self.timeout) as s:
            s.sendall(f"{verb} {json.dumps(body)}\n".encode("utf-8"))
            rfile = s.makefile("rb")
            line = rfile.readline()
        if not line:
            raise ConnectionError("discovery daemon closed the connection")
        status, _, rest = line.decode("utf-8").strip().partition(" ")
        payload = json.loads(rest) if rest else {}
        if status != "OK":
            raise ConnectionError(f"discovery error: {payload.get('error', 'unknown')}")
        return payload

    def register(self, node_name: str, node_id: int,
                 publications: list[Publication]) -> float:
        body = {
            "node_name": node_name,
            "node_id": _hex64(node_id),
            "publications": [
                {"topic": p.topic, "schema_hash": _hex64(p.schema_hash), "endpoint": p.endpoint}
                for p in publications
            ],
        }
        return float(self._request("REGISTER", body)["lease_ttl"])

    def heartbeat(self, node_id: int) -> float:
        return float(self._request("HEARTBEAT", {"node_id": _hex64(node_id)})["lease_ttl"])

    def query(self, topic: str) -> list[Publication]:
        reply = self._request("QUERY", {"topic": topic})
        return [
            Publication(topic, _parse_hex64(p["schema_hash"]), p["endpoint"])
            for p in reply["publishers"]
        ]

    def unregister(self, node_id: int) -> None:
        self._request("UNREGISTER", {"node_id": _hex64(node_id)})
