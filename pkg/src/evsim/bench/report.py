"""Benchmark report container with machine-readable output."""

from __future__ import annotations

import csv
import io
import json
import os
import platform
import sys
import time
from dataclasses import dataclass, field


def summarize(values: list[float]) -> dict[str, float]:
    """Mean, median, and p99 of a non-empty sample list."""
    if not values:
        raise ValueError("cannot summarize an empty sample list")
    vs = sorted(values)
    n = len(vs)
    mid = n // 2
    median = vs[mid] if n % 2 else 0.5 * (vs[mid - 1] + vs[mid])
    p99 = vs[min(n - 1, max(0, int(round(0.99 * (n - 1)))))]
    return {"mean": sum(vs) / n, "median": median, "p99": p99}


def host_fingerprint() -> dict[str, str]:
    return {
        "platform": platform.platform(),
        "python": sys.version.split()[0],
        "cpus": str(os.cpu_count()),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }


@dataclass
class BenchReport:
    name: str
    parameters: dict
    samples: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    units: dict = field(default_factory=dict)
    hardware: dict = field(default_factory=host_fingerprint)

    def finalize(self, metrics: list[str]) -> "BenchReport":
        """Aggregate the named per-sample metrics into the summary."""
        for m in metrics:
            vals = [float(s[m]) for s in self.samples if m in s]
            if vals:
                self.summary[m] = summarize(vals)
        return self

    def to_json(self) -> str:
        return json.dumps({
            "name": self.name, "parameters": self.parameters, "samples": self.samples,
            "summary": self.summary, "units": self.units, "hardware": self.hardware,
        }, indent=2, sort_keys=True)

    def to_csv(self) -> str:
        if not self.samples:
            return ""
        cols = sorted({k for s in self.samples for k in s})
        out = io.StringIO()
        w = csv.DictWriter(out, fieldnames=cols)
        w.writeheader()
        for s in self.samples:
            w.writerow(s)
        return out.getvalue()

    def table(self) -> str:
        lines = [f"== {self.name} =="]
        for k, v in sorted(self.parameters.items()):
            lines.append(f"  {k}: {v}")
        for metric, agg in sorted(self.summary.items()):
            unit = self.units.get(metric, "")
            lines.append(
                f"  {metric:<28} mean={agg['mean']:<12.6g} median={agg['median']:<12.6g} "
                f"p99={agg['p99']:<12.6g} {unit}"
            )
        return "\n".join(lines)

    def write(self, json_path: str | None = None, csv_path: str | None = None) -> None:
        if json_path:
            with open(json_path, "w", encoding="utf-8") as f:
                f.write(self.to_json() + "\n")
        if csv_path:
            with open(csv_path, "w", encoding="utf-8") as f:
                f.write(self.to_csv())
