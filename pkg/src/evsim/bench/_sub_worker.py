"""Subscriber worker process for the messaging benchmark.

Prints READY once connected, then counts delivered messages until the
stream stays idle, finally printing one RESULT line for the parent.
"""

from __future__ import annotations

import sys
import time

from ..messaging import Subscriber, parse_schema

IDLE_TIMEOUT_S = 1.0


def main() -> int:
    daemon_port = int(sys.argv[1])
    topic = sys.argv[2]
    decl = sys.argv[3]
    schema = parse_schema(decl)
    sub = Subscriber(topic, schema, daemon_addr=("127.0.0.1", daemon_port),
                     poll_interval=0.05, queue_depth=1 << 20)
    if not sub.wait_connected(1, timeout=15.0):
        print("RESULT 0 0.0 error=no_connection", flush=True)
        return 1
    print("READY", flush=True)
    count = 0
    payload_bytes = 0
    t_first = None
    t_last = None
    while True:
        msgs = sub.receive_many(8192, timeout=IDLE_TIMEOUT_S)
        if not msgs:
            break
        now = time.perf_counter()
        if t_first is None:
            t_first = now
        t_last = now
        count += len(msgs)
        payload_bytes += sum(m["data"].nbytes for m in msgs)
    sub.close()
    span = (t_last - t_first) if (t_first is not None and t_last > t_first) else 0.0
    print(f"RESULT {count} {span:.6f} bytes={payload_bytes}", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
