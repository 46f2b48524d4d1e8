"""simnode command-line entry point."""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .orchestrator import SimNode


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(
        prog="simnode",
        description="Run the simulator node (streaming or lockstep) from a config file.",
    )
    ap.add_argument("--config", required=True, help="YAML configuration file")
    ap.add_argument("--mode", choices=["streaming", "lockstep"], help="override config mode")
    ap.add_argument("--seed", type=int, help="override config seed")
    ap.add_argument("--ticks", type=int, help="stop after N sensor ticks")
    ap.add_argument("--daemon", help="discovery daemon address host:port")
    ap.add_argument("--report", help="write a JSON run report to this path")
    args = ap.parse_args(argv)

    cfg = load_config(args.config)
    if args.mode:
        cfg.mode = args.mode
    if args.seed is not None:
        cfg.seed = args.seed
    if args.daemon:
        host, _, port = args.daemon.rpartition(":")
        cfg.daemon_host = host or "127.0.0.1"
        cfg.daemon_port = int(port)

    node = SimNode(cfg)
    try:
        if cfg.mode == "lockstep":
            if args.ticks is None:
                ap.error("lockstep mode requires --ticks")
            report = node.run_lockstep(ticks=args.ticks)
        else:
            report = node.run_streaming(ticks=args.ticks)
    except KeyboardInterrupt:
        return 130
    print(report.to_json())
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            f.write(report.to_json() + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
