"""Regenerate the shipped pair-mobility fits in ``src/rigidib/data``.

    python3 scripts/regenerate_fits.py --dim 3 --kernel peskin4
    python3 scripts/regenerate_fits.py --dim 2 --kernel peskin4 --n-steady 256 --n-beta 128
    python3 scripts/regenerate_fits.py --dim 3 --from-samples src/rigidib/data/samples_peskin4_3d.csv

Writes ``fit_<kernel>_<dim>d.txt`` plus ``samples_<kernel>_<dim>d.csv`` and
prints the fit quality over ``2 <= r/h <= 20``.
"""
import argparse
import math
import time
from pathlib import Path

from rigidib.mobility.fits import DATA_DIR
from rigidib.mobility.fitting import BETA_NODES_2D, BETA_NODES_3D, FitConfig, run_fit


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=3)
    ap.add_argument("--kernel", default="peskin4")
    ap.add_argument("--n-steady", type=int, default=None)
    ap.add_argument("--n-beta", type=int, default=None)
    ap.add_argument("--n-markers", type=int, default=60)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--steady-only", action="store_true")
    ap.add_argument("--out", type=Path, default=DATA_DIR)
    ap.add_argument("--from-samples", type=Path, help="refit existing samples instead of regenerating them")
    a = ap.parse_args()
    big = a.dim == 2
    cfg = FitConfig(dim=a.dim, kernel=a.kernel,
                    n_steady=a.n_steady or (256 if big else 128),
                    n_beta=a.n_beta or (128 if big else 64),
                    n_markers=a.n_markers, seed=a.seed,
                    betas=() if a.steady_only else (BETA_NODES_3D if a.dim == 3 else BETA_NODES_2D))
    t0 = time.time()
    fit, path, csv_path, quality = run_fit(cfg, a.out, log=lambda m: print(f"[{time.time() - t0:7.1f}s] {m}",
                                                                             flush=True),
                                        samples_csv=a.from_samples)
    print(f"wrote {path} and {csv_path}")
    for beta, med, p90 in quality:
        tag = "steady" if math.isinf(beta) else f"beta={beta:g}"
        print(f"{tag:>12}: median rel. residual {med:.4f}, 90th pct {p90:.4f}")


if __name__ == "__main__":
    main()
