"""metrics command-line entry: evaluate depth objectives on saved maps."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .metrics import depth_objective, gradient_regularizer, normalize_disparity, silog_loss


def _load_map(path: str) -> np.ndarray:
    if path.endswith(".npy"):
        return np.load(path)
    return np.loadtxt(path, delimiter=",", ndmin=2)


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="metrics", description="Depth metric utilities")
    sub = ap.add_subparsers(dest="which", required=True)
    ev = sub.add_parser("eval", help="evaluate losses between two disparity maps")
    ev.add_argument("prediction", help=".npy or CSV disparity map")
    ev.add_argument("target", help=".npy or CSV disparity map")
    ev.add_argument("--lambda", dest="lam", type=float, default=1.0)
    ev.add_argument("--scales", type=int, default=4)
    args = ap.parse_args(argv)

    d = _load_map(args.prediction)
    d_star = _load_map(args.target)
    out = {
        "silog": silog_loss(d, d_star),
        "gradient_regularizer": gradient_regularizer(
            normalize_disparity(d), normalize_disparity(d_star), args.scales),
        "objective": depth_objective(d, d_star, lam=args.lam, num_scales=args.scales),
        "lambda": args.lam,
        "scales": args.scales,
    }
    print(json.dumps(out, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
