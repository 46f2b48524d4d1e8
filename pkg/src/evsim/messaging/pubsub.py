"""Brokerless publish-subscribe over TCP or local (unix) stream sockets.

Publishers bind an endpoint, register it with the discovery daemon, and fan
frames out to connected subscribers through per-subscriber bounded queues
(drop-oldest beyond the high-water mark; a slow or stalled subscriber never
blocks the publisher). Subscribers poll the daemon for endpoints, handshake
with a SUBSCRIBE line, and feed a receive queue from a reader thread.

Delivery guarantee per (publisher, subscriber) pair: a subsequence of the
published frames in publish order. Messages published before the SUBSCRIBE
handshake completes are not guaranteed (slow joiner).
"""

from __future__ import annotations

import json
import logging
import os
import secrets
import socket
import tempfile
import threading
import time
from collections import deque
from dataclasses import dataclass
from typing import Any, Mapping

from .discovery import DiscoveryClient, Publication
from .errors import ProtocolError, TypeMismatchError
from .frame import HEADER, HEADER_SIZE, MAGIC, MAX_TOPIC_BYTES, VERSION, frame_header_prefix
from .schema import MessageSchema, deserialize, payload_size, schema_hash, serialize_into

logger = logging.getLogger(__name__)

_SEND_BATCH_BYTES = 1 << 16
_BIG_FRAME = 1 << 17


@dataclass
class SendQueuePolicy:
    """Per-subscriber send buffering: bounded, dropping the oldest frame."""

    high_water_mark: int = 1000
    on_full: str = "drop-oldest"

    def __post_init__(self) -> None:
        if self.high_water_mark < 1:
            raise ValueError("high_water_mark must be >= 1")
        if self.on_full != "drop-oldest":
            raise ValueError(f"unsupported on_full policy {self.on_full!r}")


def make_endpoint(transport: str) -> tuple[socket.socket, str]:
    """Bind a fresh listening socket; returns (socket, endpoint string)."""
    if transport == "tcp":
        s = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        s.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        s.bind(("127.0.0.1", 0))
        s.listen(64)
        host, port = s.getsockname()
        return s, f"tcp://{host}:{port}"
    if transport == "local":
        path = os.path.join(
            tempfile.gettempdir(), f"evsim-{os.getpid()}-{secrets.token_hex(4)}.sock"
        )
        s = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
        s.bind(path)
        s.listen(64)
        return s, f"local://{path}"
    raise ValueError(f"unknown transport {transport!r} (use 'tcp' or 'local')")


def connect_endpoint(endpoint: str, timeout: float = 5.0) -> socket.socket:
    """Connect to a publisher endpoint string."""
    if endpoint.startswith("tcp://"):
        host, _, port = endpoint[6:].rpartition(":")
        s = socket.create_connection((host, int(port)), timeout=timeout)
        s.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        return s
    if endpoint.startswith("local://"):
        s = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
        s.settimeout(timeout)
        s.connect(endpoint[8:])
        return s
    raise ValueError(f"malformed endpoint {endpoint!r}")


class _SubscriberConn:
    """Publisher-side state for one connected subscriber."""

    def __init__(self, sock: socket.socket, policy: SendQueuePolicy, rfile=None):
        self.sock = sock
        self.rfile = rfile if rfile is not None else sock.makefile("rb")
        self.policy = policy
        self.queue: deque[bytes | bytearray] = deque()
        self.cond = threading.Condition()
        self.paused = False
        self.alive = True
        self.dropped = 0
        self.sender = threading.Thread(target=self._send_loop, daemon=True)
        self.control = threading.Thread(target=self._control_loop, daemon=True)

    def start(self) -> None:
        self.sender.start()
        self.control.start()

    def offer(self, frame: bytes | bytearray) -> bool:
        """Queue a frame; returns True if an old frame was dropped to make room."""
        dropped = False
        with self.cond:
            if len(self.queue) >= self.policy.high_water_mark:
                self.queue.popleft()
                self.dropped += 1
                dropped = True
            self.queue.append(frame)
            if len(self.queue) == 1:
                self.cond.notify()  # sender only sleeps on an empty queue
        return dropped

    def close(self) -> None:
        with self.cond:
            self.alive = False
            self.cond.notify()
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self.sock.close()
        except OSError:
            pass

    def _send_loop(self) -> None:
        while True:
            chunk: list[bytes] = []
            size = 0
            with self.cond:
                while self.alive and (not self.queue or self.paused):
                    self.cond.wait()
                if not self.alive:
                    return
                while self.queue and size < _SEND_BATCH_BYTES:
                    f = self.queue.popleft()
                    chunk.append(f)
                    size += len(f)
            try:
                self.sock.sendall(b"".join(chunk) if len(chunk) > 1 else chunk[0])
            except OSError:
                self.close()
                return

    def _control_loop(self) -> None:
        while self.alive:
            try:
                line = self.rfile.readline()
            except OSError:
                line = b""
            if not line:
                self.close()
                return
            cmd = line.strip().decode("utf-8", "replace")
            if cmd == "PAUSE":
                with self.cond:
                    self.paused = True
            elif cmd == "RESUME":
                with self.cond:
                    self.paused = False
                    self.cond.notify()


class Publisher:
    """Publishes one topic from a bound endpoint, fanning out to subscribers."""

    def __init__(
        self,
        topic: str,
        schema: MessageSchema,
        daemon_addr: tuple[str, int] | None = None,
        transport: str = "tcp",
        policy: SendQueuePolicy | None = None,
        node_name: str | None = None,
        daemonless: bool = False,
    ):
        self.topic = topic
        self._topic_raw = topic.encode("utf-8")
        if len(self._topic_raw) > MAX_TOPIC_BYTES:
            raise ValueError(f"topic exceeds {MAX_TOPIC_BYTES} UTF-8 bytes: {topic!r}")
        self.schema = schema
        self.schema_hash = schema_hash(schema)
        self.policy = policy or SendQueuePolicy()
        self.node_id = secrets.randbits(64)
        self.node_name = node_name or f"pub-{topic}-{self.node_id & 0xFFFF:04x}"
        self._conns: list[_SubscriberConn] = []
        self._conns_lock = threading.Lock()
        self._stop = threading.Event()
        self._sock, self.endpoint = make_endpoint(transport)
        self._discovery: DiscoveryClient | None = None
        self._lease_ttl = 6.0
        if not daemonless:
            self._discovery = DiscoveryClient(daemon_addr)
            try:
                self._lease_ttl = self._discovery.register(
                    self.node_name, self.node_id, [self._publication()]
                )
            except OSError as e:
                self._sock.close()
                raise ConnectionError(
                    f"cannot register with discovery daemon at {self._discovery.addr}: {e}"
                ) from e
            threading.Thread(target=self._heartbeat_loop, daemon=True).start()
        threading.Thread(target=self._accept_loop, daemon=True).start()

    def _publication(self) -> Publication:
        return Publication(self.topic, self.schema_hash, self.endpoint)

    def _heartbeat_loop(self) -> None:
        assert self._discovery is not None
        while not self._stop.wait(self._lease_ttl / 3):
            try:
                self._discovery.heartbeat(self.node_id)
            except (OSError, ConnectionError):
                # daemon restarted or briefly unreachable: re-register so the
                # registry can be rebuilt from live nodes
                try:
                    self._discovery.register(self.node_name, self.node_id, [self._publication()])
                except (OSError, ConnectionError):
                    pass

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                sock, _ = self._sock.accept()
            except OSError:
                return
            threading.Thread(target=self._handshake, args=(sock,), daemon=True).start()

    def _handshake(self, sock: socket.socket) -> None:
        try:
            if isinstance(sock.getsockname(), tuple):
                sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        except OSError:
            pass
        rfile = sock.makefile("rb")
        line = rfile.readline()
        try:
            verb, _, rest = line.decode("utf-8").strip().partition(" ")
            body = json.loads(rest) if rest else {}
            topics = body.get("topics", [])
            if verb != "SUBSCRIBE" or (topics and self.topic not in topics):
                sock.sendall(b'ERR {"error": "topic not served here"}\n')
                sock.close()
                return
            sock.sendall(b"OK {}\n")
        except (ValueError, OSError):
            sock.close()
            return
        conn = _SubscriberConn(sock, self.policy, rfile=rfile)
        with self._conns_lock:
            self._conns.append(conn)
        conn.start()

    @property
    def subscriber_count(self) -> int:
        with self._conns_lock:
            self._conns = [c for c in self._conns if c.alive]
            return len(self._conns)

    def max_queue_depth(self) -> int:
        """Deepest per-subscriber send queue; lets saturating callers pace."""
        with self._conns_lock:
            return max((len(c.queue) for c in self._conns), default=0)

    def publish(self, values: Mapping[str, Any], publish_time_ns: int | None = None) -> int:
        """Fan a message out to all subscribers; never blocks on slow ones.

        Returns the number of subscribers that had to drop their oldest
        queued frame to accept this one. The frame is encoded once into a
        single buffer and shared by every subscriber queue.
        """
        t_ns = publish_time_ns if publish_time_ns is not None else time.time_ns()
        psize = payload_size(values, self.schema)
        tlen = len(self._topic_raw)
        frame = bytearray(1 + tlen + HEADER_SIZE + psize)
        frame[0] = tlen
        frame[1:1 + tlen] = self._topic_raw
        HEADER.pack_into(frame, 1 + tlen, MAGIC, VERSION, 0, 0,
                         self.schema_hash, t_ns, psize)
        serialize_into(values, self.schema, frame, 1 + tlen + HEADER_SIZE)
        dropped = 0
        with self._conns_lock:
            conns = list(self._conns)
        for c in conns:
            if c.alive and c.offer(frame):
                dropped += 1
        return dropped

    def close(self) -> None:
        self._stop.set()
        if self._discovery is not None:
            try:
                self._discovery.unregister(self.node_id)
            except (OSError, ConnectionError):
                pass
        try:
            self._sock.shutdown(socket.SHUT_RDWR)  # wakes the blocked accept
        except OSError:
            pass
        try:
            self._sock.close()
        except OSError:
            pass
        if self.endpoint.startswith("local://"):
            try:
                os.unlink(self.endpoint[8:])
            except OSError:
                pass
        with self._conns_lock:
            for c in self._conns:
                c.close()

    def __enter__(self) -> "Publisher":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


_TIMEOUT = object()  # internal marker; receive() returns None on timeout


class Subscriber:
    """Receives one topic; reconnects to publishers found via discovery."""

    def __init__(
        self,
        topic: str,
        schema: MessageSchema,
        daemon_addr: tuple[str, int] | None = None,
        queue_depth: int = 8192,
        poll_interval: float = 0.5,
        endpoints: list[str] | None = None,
    ):
        self.topic = topic
        self.schema = schema
        self.expected_hash = schema_hash(schema)
        self.queue_depth = queue_depth
        self.poll_interval = poll_interval
        self._queue: deque[tuple[str, Any]] = deque()
        self._cond = threading.Condition()
        self._stop = threading.Event()
        self._endpoints: dict[str, bool] = {}  # endpoint -> currently connected
        self._conn_socks: list[socket.socket] = []
        self._connected = threading.Event()
        self._conn_count = 0
        self._lock = threading.Lock()
        self.stats = {"type_mismatch": 0, "frames": 0, "reconnects": 0, "queue_dropped": 0}
        self._discovery = DiscoveryClient(daemon_addr) if endpoints is None else None
        if endpoints:
            for ep in endpoints:
                self._spawn(ep)
        if self._discovery is not None:
            self._poll_once()
            threading.Thread(target=self._poll_loop, daemon=True).start()

    # -- discovery ----------------------------------------------------------

    def _poll_once(self) -> None:
        assert self._discovery is not None
        try:
            pubs = self._discovery.query(self.topic)
        except (OSError, ConnectionError):
            return
        for p in pubs:
            with self._lock:
                known = self._endpoints.get(p.endpoint, False)
            if not known:
                self._spawn(p.endpoint)

    def _poll_loop(self) -> None:
        while not self._stop.wait(self.poll_interval):
            self._poll_once()

    def _spawn(self, endpoint: str) -> None:
        with self._lock:
            self._endpoints[endpoint] = True
        threading.Thread(target=self._run_conn, args=(endpoint,), daemon=True).start()

    # -- data path ------------------------------------------------------------

    def _run_conn(self, endpoint: str) -> None:
        try:
            sock = connect_endpoint(endpoint)
            sock.sendall(
                f'SUBSCRIBE {json.dumps({"topics": [self.topic]})}\n'.encode("utf-8")
            )
            line = b""
            while not line.endswith(b"\n"):
                b1 = sock.recv(1)
                if not b1:
                    raise ConnectionError("publisher closed during handshake")
                line += b1
            if not line.startswith(b"OK"):
                raise ConnectionError(f"subscription rejected: {line!r}")
        except (OSError, ConnectionError) as e:
            logger.debug("connect to %s failed: %s", endpoint, e)
            with self._lock:
                self._endpoints[endpoint] = False  # discovery poll may retry
            return
        sock.settimeout(None)
        with self._lock:
            self._conn_socks.append(sock)
            self._conn_count += 1
        self._connected.set()
        try:
            self._read_loop(sock)
        finally:
            with self._lock:
                self._endpoints[endpoint] = False
                if sock in self._conn_socks:
                    self._conn_socks.remove(sock)
                self._conn_count -= 1
                self.stats["reconnects"] += 1
            try:
                sock.close()
            except OSError:
                pass

    def _read_loop(self, sock: socket.socket) -> None:
        buf = bytearray()
        off = 0
        while not self._stop.is_set():
            while True:
                try:
                    hdr = frame_header_prefix(buf, off)
                except ProtocolError:
                    return  # corrupt stream: drop the connection
                if hdr is None:
                    break
                start = off + hdr.header_size
                end = start + hdr.payload_len
                avail = len(buf) - start
                if hdr.payload_len >= _BIG_FRAME and avail < hdr.payload_len:
                    # large payload: read the remainder straight into its own
                    # buffer instead of growing the parse buffer
                    payload = bytearray(hdr.payload_len)
                    payload[:avail] = memoryview(buf)[start:]
                    buf.clear()
                    off = 0
                    filled = avail
                    view = memoryview(payload)
                    while filled < hdr.payload_len:
                        try:
                            n = sock.recv_into(view[filled:])
                        except OSError:
                            return
                        if n == 0:
                            return
                        filled += n
                    view.release()
                    self._dispatch(hdr.schema_hash, payload)
                    continue
                if len(buf) < end:
                    break
                self._dispatch(hdr.schema_hash, bytes(memoryview(buf)[start:end]))
                off = end
            if off == len(buf):
                buf.clear()
                off = 0
            elif off >= (1 << 16):
                del buf[:off]
                off = 0
            try:
                chunk = sock.recv(1 << 18)
            except OSError:
                return
            if not chunk:
                return
            buf += chunk

    def _dispatch(self, frame_hash: int, payload: bytes) -> None:
        if frame_hash != self.expected_hash:
            item = ("err", TypeMismatchError(self.expected_hash, frame_hash))
            self.stats["type_mismatch"] += 1
        else:
            try:
                item = ("msg", deserialize(payload, self.schema))
            except ValueError as e:
                item = ("err", e)
        with self._cond:
            if len(self._queue) >= self.queue_depth:
                self._queue.popleft()
                self.stats["queue_dropped"] += 1
            self._queue.append(item)
            self.stats["frames"] += 1
            if len(self._queue) == 1:
                self._cond.notify()  # consumer only sleeps on an empty queue

    # -- consumer API ---------------------------------------------------------

    def receive(self, timeout: float | None = None) -> dict[str, Any] | None:
        """Next message, or None after ``timeout`` seconds without one.

        A frame whose schema hash does not match raises TypeMismatchError;
        the stream continues with the next frame.
        """
        deadline = None if timeout is None else time.monotonic() + timeout
        with self._cond:
            while not self._queue:
                if deadline is None:
                    self._cond.wait()
                else:
                    remaining = deadline - time.monotonic()
                    if remaining <= 0 or not self._cond.wait(remaining):
                        if not self._queue:
                            return None
            kind, value = self._queue.popleft()
        if kind == "err":
            raise value
        return value

    def receive_many(self, max_messages: int, timeout: float | None = None) -> list[dict[str, Any]]:
        """Drain up to ``max_messages`` queued messages in one lock acquisition.

        Waits up to ``timeout`` for the first message; an empty list means
        timeout. A decode/type error raises if it is the first item,
        otherwise it stays queued for the next call.
        """
        deadline = None if timeout is None else time.monotonic() + timeout
        out: list[dict[str, Any]] = []
        with self._cond:
            while not self._queue:
                if deadline is None:
                    self._cond.wait()
                else:
                    remaining = deadline - time.monotonic()
                    if remaining <= 0 or not self._cond.wait(remaining):
                        if not self._queue:
                            return out
            while self._queue and len(out) < max_messages:
                kind, value = self._queue[0]
                if kind == "err":
                    if not out:
                        self._queue.popleft()
                        raise value
                    break
                self._queue.popleft()
                out.append(value)
        return out

    def wait_connected(self, count: int = 1, timeout: float = 10.0) -> bool:
        """Block until at least ``count`` publisher connections are confirmed."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            with self._lock:
                if self._conn_count >= count:
                    return True
            time.sleep(0.005)
        return False

    def pause(self) -> None:
        """Ask all connected publishers to stop draining our send queues."""
        self._send_control(b"PAUSE\n")

    def resume(self) -> None:
        self._send_control(b"RESUME\n")

    def _send_control(self, line: bytes) -> None:
        with self._lock:
            socks = list(self._conn_socks)
        for s in socks:
            try:
                s.sendall(line)
            except OSError:
                pass

    def close(self) -> None:
        self._stop.set()
        with self._lock:
            for s in self._conn_socks:
                try:
                    s.shutdown(socket.SHUT_RDWR)
                except OSError:
                    pass
                try:
                    s.close()
                except OSError:
                    pass
        with self._cond:
            self._cond.notify_all()

    def __enter__(self) -> "Subscriber":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
