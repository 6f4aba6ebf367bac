"""Run a set of benchmark studies one after another and collect their summaries.

    python3 scripts/run_benchmarks.py                       # the quick set
    python3 scripts/run_benchmarks.py --all --out results   # everything (hours on one core)

Each study writes its CSV tables, ``summary.txt`` and ``config_used.ini`` to
``<out>/<study>``; an overview of all checks goes to ``<out>/overview.txt``.
"""
import argparse
import time
from pathlib import Path

from rigidib.cli import cli_main

QUICK = ["spectrum", "drag2d"]
FULL = QUICK + ["finite-re-2d", "drag3d", "concentric", "slit", "wake", "nozzle"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("studies", nargs="*", help=f"any of {FULL}")
    ap.add_argument("--all", action="store_true")
    ap.add_argument("--out", type=Path, default=Path("results"))
    a = ap.parse_args()
    studies = a.studies or (FULL if a.all else QUICK)
    lines = []
    for name in studies:
        t0 = time.time()
        code = cli_main([name, "--out", str(a.out / name)])
        summary = a.out / name / "summary.txt"
        checks = [l for l in summary.read_text().splitlines() if l.startswith(("PASS", "FAIL"))] \
            if summary.exists() else []
        lines.append(f"== {name} (exit {code}, {time.time() - t0:.0f} s)")
        lines += [f"   {c}" for c in checks]
    a.out.mkdir(parents=True, exist_ok=True)
    (a.out / "overview.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))


if __name__ == "__main__":
    main()
