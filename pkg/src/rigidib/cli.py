"""Command-line entry point: ``rigidib <subcommand> [options]``.

Every subcommand writes CSV tables and a ``summary.txt`` into ``--out``.
Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def _floats(text):
    return tuple(float(x) for x in text.replace(",", " ").split())


def _ints(text):
    return tuple(int(x) for x in text.replace(",", " ").split())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="run configuration (INI-style key = value sections)")
    common.add_argument("--out", type=Path, help="output directory (default: [output] dir or out/<command>)")
    common.add_argument("--threads", type=int, help="threads for the numerical libraries")

    ap = argparse.ArgumentParser(prog="rigidib", description="Rigid-body immersed-boundary benchmarks")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[common], help="generate mobility samples and fit the pair mobility")
    p.add_argument("--kernel", default="peskin4", choices=("peskin3", "peskin4", "six"))
    p.add_argument("--dim", type=int, default=3, choices=(2, 3))
    p.add_argument("--n-steady", type=int, help="steady-Stokes sample grid size")
    p.add_argument("--n-beta", type=int, help="finite-beta sample grid size")
    p.add_argument("--n-markers", type=int, default=60)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steady-only", action="store_true")
    p.add_argument("--from-samples", type=Path, help="refit a samples CSV instead of regenerating samples")

    p = sub.add_parser("spectrum", parents=[common], help="mobility spectra of an icosphere shell")
    p.add_argument("--level", type=int)
    p.add_argument("--ratios", type=_floats, help="marker spacings s/h, e.g. '1 1.5 2'")
    p.add_argument("--n", type=int, help="periodic box size in cells")

    p = sub.add_parser("drag2d", parents=[common], help="steady drag of a square array of cylinders")
    p.add_argument("--model")
    p.add_argument("--phis", type=_floats)

    p = sub.add_parser("drag3d", parents=[common], help="finite-Re drag of a cubic array of spheres")
    p.add_argument("--res", type=_floats, help="target Reynolds numbers")
    p.add_argument("--n", type=int)
    p.add_argument("--model")

    p = sub.add_parser("finite-re-2d", parents=[common], help="finite-Re drag of a square array of cylinders")
    p.add_argument("--res", type=_floats)
    p.add_argument("--n", type=int)

    p = sub.add_parser("wake", parents=[common], help="wake behind a periodic column of cylinders")
    p.add_argument("--res", type=_floats)
    p.add_argument("--n", type=_ints, help="grid cells 'nx ny'")
    p.add_argument("--t-max", type=float)

    p = sub.add_parser("concentric", parents=[common], help="flow between concentric shells")
    p.add_argument("--levels", type=int)

    p = sub.add_parser("slit", parents=[common], help="sphere in a slit channel")
    p.add_argument("--levels", type=_ints)
    p.add_argument("--ratios", type=_floats, help="H/d values (0.5 and/or 0.25)")
    p.add_argument("--l-over-d", type=_floats)

    p = sub.add_parser("nozzle", parents=[common], help="nozzle flow, monolithic vs splitting")
    p.add_argument("--res", type=_floats)
    p.add_argument("--split-factor", type=float, help="splitting time step = monolithic step / factor")
    p.add_argument("--t-end", type=float)

    sub.add_parser("solve", parents=[common], help="one constrained solve described by --config")
    return ap


def _set_threads(n):
    if n is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


def _bench(cmd):
    """The benchmark function behind a subcommand and its option mapping."""
    from .bench import concentric, drag, flows, slit
    table = {
        "spectrum": (drag.bench_spectrum, {"level": "level", "ratios": "ratios", "n": "n"}),
        "drag2d": (drag.bench_drag2d, {"model": "model", "phis": "phis"}),
        "drag3d": (drag.bench_drag3d, {"res": "res", "n": "n", "model": "model"}),
        "finite-re-2d": (drag.bench_finite_re_2d, {"res": "res", "n": "n"}),
        "wake": (flows.bench_wake, {"res": "res", "n": "n", "t_max": "t_max"}),
        "concentric": (concentric.bench_concentric, {"levels": "levels"}),
        "slit": (slit.bench_slit, {"levels": "levels", "ratios": "ratios", "l_over_d": "l_over_d"}),
        "nozzle": (flows.bench_nozzle, {"res": "res", "split_factor": "split_factor", "t_end": "t_end"}),
    }
    return table[cmd]


def _log(msg):
    print(msg, flush=True)


def run_fit(args, out: Path) -> int:
    import math
    from .bench.common import BenchReport
    from .mobility.fitting import BETA_NODES_2D, BETA_NODES_3D, FitConfig, run_fit as fit_run
    big = args.dim == 2
    cfg = FitConfig(dim=args.dim, kernel=args.kernel,
                    n_steady=args.n_steady or (256 if big else 128),
                    n_beta=args.n_beta or (128 if big else 64),
                    n_markers=args.n_markers, seed=args.seed,
                    betas=() if args.steady_only else (BETA_NODES_3D if args.dim == 3 else BETA_NODES_2D))
    fit, path, csv_path, quality = fit_run(cfg, out, log=_log, samples_csv=args.from_samples)
    rep = BenchReport("fit")
    rep.tables["fit_quality.csv"] = (["beta", "median_rel_residual", "p90_rel_residual"], quality)
    rep.notes += [f"coefficients: {path.name}", f"samples: {csv_path.name}"]
    steady = [q for q in quality if math.isinf(q[0])]
    if steady:
        rep.check("steady median relative residual on 2 <= r/h <= 20", steady[0][1], 0.0, 0.05)
    band = {"peskin4": (1.15, 1.35), "six": (1.42, 1.52)}.get(fit.kernel)
    if band and args.dim == 3:
        rep.check("fitted a/h", fit.a_over_h, *band)
    rep.write(out)
    print(rep.summary(), end="")
    return EXIT_OK


def run_solve(cfg, out: Path) -> int:
    import numpy as np
    from .bench.common import BenchReport
    from .rigid import ConstrainedSystem
    grid = cfg.grid_spec()
    ms = cfg.markers()
    sys_ = ConstrainedSystem(grid, cfg.stokes_params(), ms, cfg.solver_config())
    out.mkdir(parents=True, exist_ok=True)
    res = sys_.solve(log_path=out / "solve_log.csv")
    st = res.state
    rep = BenchReport("solve")
    d = grid.dim
    ax = "xyz"[:d]
    rows = [[i, *ms.pos[i], *st.lam[i]] for i in range(len(ms))]
    rep.tables["markers.csv"] = (["marker", *ax, *(f"lambda_{a}[force]" for a in ax)], rows)
    slip = float(np.abs(sys_.slip(st)).max())
    F = st.total_force
    rep.tables["result.csv"] = (["converged", "outer_iterations", "ps_applications", "max_slip", "max_divergence",
                                 *(f"sum_lambda_{a}" for a in ax)],
                                [[int(res.converged), res.iterations, res.ps_total, slip, sys_.divergence_norm(st),
                                  *F]])
    rep.notes.append(f"markers: {len(ms)}, grid: {'x'.join(map(str, grid.n))}, h = {grid.h}")
    rep.check("max |J v + W|", slip, 0.0, 10 * sys_.config.outer_tol * max(1.0, float(np.abs(ms.vel).max())))
    rep.write(out)
    print(rep.summary(), end="")
    if not res.converged:
        print("error: constrained solve did not converge", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cli_main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    _set_threads(args.threads)

    from .bench.config import ConfigError, RunConfig, bench_kwargs, load_config
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or (Path(cfg.output) / args.command if args.config else Path("out") / args.command)

    try:
        if args.command == "fit":
            return run_fit(args, out)
        if args.command == "solve":
            if not args.config:
                print("config error: 'solve' needs --config", file=sys.stderr)
                return EXIT_CONFIG
            code = run_solve(cfg, out)
            (out / "config_used.ini").write_text(cfg.to_text())
            return code
        func, mapping = _bench(args.command)
        overrides = {param: getattr(args, opt) for opt, param in mapping.items()}
        kwargs = bench_kwargs(cfg, func, overrides)
        rep = func(**kwargs, log=_log)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except RuntimeError as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, TypeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    rep.write(out)
    (out / "config_used.ini").write_text(cfg.to_text())
    print(rep.summary(), end="")
    return EXIT_OK


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
