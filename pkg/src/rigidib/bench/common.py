"""Shared plumbing for the benchmarks: CSV tables, pass/fail summaries, runs
of single constrained solves."""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def write_csv(path, header, rows):
    """Write ``rows`` under a one-line ``header`` (names with units in brackets)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


@dataclass
class Check:
    name: str
    value: float
    lo: float = -math.inf
    hi: float = math.inf

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.lo <= self.value <= self.hi)

    def line(self) -> str:
        band = f"[{self.lo:g}, {self.hi:g}]"
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name} = {self.value:.6g}  band {band}"


@dataclass
class BenchReport:
    name: str
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)     # file name -> (header, rows)
    notes: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    elapsed: float = 0.0

    def check(self, name, value, lo=-math.inf, hi=math.inf) -> Check:
        c = Check(name, float(value), lo, hi)
        self.checks.append(c)
        return c

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> str:
        lines = [f"benchmark: {self.name}", f"elapsed: {self.elapsed:.1f} s"]
        lines += [f"note: {n}" for n in self.notes]
        lines += [c.line() for c in self.checks]
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for fname, (header, rows) in self.tables.items():
            write_csv(out / fname, header, rows)
        (out / "summary.txt").write_text(self.summary())
        return out


class Timer:
    """Wall-clock ``elapsed`` and process CPU time ``cpu`` of a block."""

    def __enter__(self):
        self.t0, self.c0 = time.perf_counter(), time.process_time()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        self.cpu = time.process_time() - self.c0


def rate(e_coarse: float, e_fine: float, ratio: float = 2.0) -> float:
    """Observed convergence order between two resolutions."""
    return math.log(e_coarse / e_fine) / math.log(ratio)
