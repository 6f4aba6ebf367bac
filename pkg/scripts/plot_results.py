"""Plot CSV tables written by the benchmark studies (needs matplotlib).

    python3 scripts/plot_results.py results/spectrum/spectra.csv --logy
    python3 scripts/plot_results.py results/drag2d/drag2d.csv --x phi --y drag[F/(eta*V)] --logy
"""
import argparse
import csv
from pathlib import Path


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv", type=Path)
    ap.add_argument("--x", help="x column (default: first)")
    ap.add_argument("--y", nargs="*", help="y columns (default: all other numeric columns)")
    ap.add_argument("--logx", action="store_true")
    ap.add_argument("--logy", action="store_true")
    ap.add_argument("--out", type=Path, help="image file (default: next to the CSV)")
    a = ap.parse_args()
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with open(a.csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    cols = list(rows[0])
    xcol = a.x or cols[0]

    def num(v):
        try:
            return float(v)
        except ValueError:
            return None

    ycols = a.y or [c for c in cols if c != xcol and num(rows[0][c]) is not None]
    x = [num(r[xcol]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    for c in ycols:
        ax.plot(x, [num(r[c]) for r in rows], "o-", ms=3, label=c)
    ax.set_xlabel(xcol)
    if a.logx:
        ax.set_xscale("log")
    if a.logy:
        ax.set_yscale("log")
    ax.legend(fontsize=7)
    fig.tight_layout()
    out = a.out or a.csv.with_suffix(".png")
    fig.savefig(out, dpi=120)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
