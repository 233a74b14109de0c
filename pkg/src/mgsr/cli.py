"""Command-line interface: data generation, solving, parameter sweeps,
spectra, and a kernel benchmark.

Exit codes: 0 success (solve converged), 2 usage or configuration error,
3 solve ran out of iterations without converging.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import datagen, kernels, srmodel, transfer
from .grid import Grid, power_spectrum, read_grid, write_grid
from .kernels import numpy_backend
from .smoother import PoissonProblem
from .solver import RunConfig, solve

SWEEP_COLUMNS = ("param", "value", "replicate", "rhs_id", "iters_to_converge",
                 "converged", "final_diff")
SWEEP_PARAMS = ("N_smooth", "N_GAN", "S_thres", "N_grid", "k_peak")


class CliError(Exception):
    """Configuration or input problem; maps to exit code 2."""


def _default_seed() -> int:
    raw = os.environ.get("MGSR_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError as exc:
        raise CliError(f"MGSR_SEED must be an integer, got {raw!r}") from exc


def _load_config(path: str | None, overrides: dict) -> RunConfig:
    try:
        if path is None:
            cfg = RunConfig(seed=_default_seed())
        else:
            cfg = RunConfig.from_json(Path(path).read_text())
    except FileNotFoundError as exc:
        raise CliError(f"config file not found: {path}") from exc
    except (json.JSONDecodeError, ValueError, TypeError) as exc:
        raise CliError(f"bad config: {exc}") from exc
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        try:
            cfg = replace(cfg, **overrides)
        except ValueError as exc:
            raise CliError(f"bad config override: {exc}") from exc
    return cfg


def _out_stem(out: str) -> Path:
    path = Path(out)
    return path.with_suffix("") if path.suffix == ".mgg" else path


def _cmd_datagen(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    if args.kind == "mode":
        if args.mode_k is None:
            raise CliError("--mode-k is required for --kind mode")
        p, f = datagen.single_mode_field(args.n, args.mode_k)
        stem = _out_stem(args.out)
        write_grid(f, f"{stem}_f.mgg")
        write_grid(p, f"{stem}_p.mgg")
        print(f"wrote {stem}_f.mgg and {stem}_p.mgg (n={args.n}, k={args.mode_k})")
        return 0
    if args.kind == "turb":
        f, flow, p = datagen.turbulent_source(args.n, args.k_peak, seed,
                                              p_rms=args.p_rms)
        stem = _out_stem(args.out)
        write_grid(f, f"{stem}_f.mgg")
        write_grid(p, f"{stem}_p.mgg")
        write_grid(flow.u, f"{stem}_u.mgg")
        write_grid(flow.v, f"{stem}_v.mgg")
        print(f"wrote {stem}_{{f,p,u,v}}.mgg (n={args.n}, k_peak={args.k_peak}, "
              f"seed={seed})")
        return 0
    # windows: turbulent fields -> normalized HR/LR training pairs
    rng_seeds = [seed + i for i in range(args.fields)]
    fields = []
    for s in rng_seeds:
        f, _, p = datagen.turbulent_source(args.n, args.k_peak, s, p_rms=args.p_rms)
        fields.append(p)
    cfg = RunConfig()
    pairs = datagen.extract_windows(fields, args.count, seed, cfg.bounds)
    datagen.write_windows(pairs, args.out)
    print(f"wrote {args.out} ({args.count} pairs from {args.fields} fields)")
    return 0


def _read_problem(path: str) -> PoissonProblem:
    try:
        f = read_grid(path)
    except FileNotFoundError as exc:
        raise CliError(f"RHS file not found: {path}") from exc
    except ValueError as exc:
        raise CliError(f"bad RHS file {path}: {exc}") from exc
    return PoissonProblem(f=f.mean_subtracted())


def _cmd_solve(args) -> int:
    overrides = {
        "N_iter": args.n_iter,
        "N_smooth": args.n_smooth,
        "N_GAN": args.n_gan,
        "S_thres": args.s_thres,
        "tol": args.tol,
        "mode": args.mode,
        "weights": args.weights,
        "seed": args.seed,
    }
    cfg = _load_config(args.config, overrides)
    prob = _read_problem(args.rhs)
    if cfg.mode in ("sr", "hybrid") and cfg.weights is None:
        raise CliError(f"mode {cfg.mode!r} requires --weights")
    weights = None
    if cfg.weights is not None and cfg.mode in ("sr", "hybrid"):
        try:
            weights = srmodel.load_weights(cfg.weights)
        except (FileNotFoundError, ValueError) as exc:
            raise CliError(f"bad weights file {cfg.weights}: {exc}") from exc
    try:
        solution, log = solve(prob, cfg, weights)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    if args.out_grid:
        write_grid(solution, args.out_grid)
    if args.out_log:
        log.write_csv(args.out_log)
    ops = [r.operator for r in log.records]
    converged = log.converged(cfg.tol)
    print(f"iterations={log.iterations} converged={converged} "
          f"final_diff={log.final_diff:.3e} "
          f"spline={ops.count('spline')} sr={ops.count('sr')}")
    return 0 if converged else 3


def _resample_rhs(f: Grid, n_target: int) -> Grid:
    if n_target == f.n:
        return f
    if n_target > f.n:
        ratio = n_target // f.n
        if ratio * f.n != n_target:
            raise CliError(f"cannot resample {f.n} -> {n_target}")
        out = transfer.spline_prolong(f, ratio)
    else:
        ratio = f.n // n_target
        if ratio * n_target != f.n:
            raise CliError(f"cannot resample {f.n} -> {n_target}")
        out = transfer.restrict(f, ratio)
    return out.mean_subtracted()


def _sweep_task(task: tuple) -> tuple:
    param, value, replicate, rhs_id, f_data, cfg_json, scale_iters = task
    cfg = RunConfig.from_json(cfg_json)
    cfg = replace(cfg, seed=cfg.seed + replicate, N_grid=None)
    prob = PoissonProblem(f=Grid(f_data).mean_subtracted())
    weights = None
    if cfg.mode in ("sr", "hybrid"):
        weights = srmodel.load_weights(cfg.weights)
    _, log = solve(prob, cfg, weights)
    converged = log.converged(cfg.tol)
    iters: float | int | None = None
    if converged:
        iters = log.iterations
        if scale_iters:
            iters = iters * cfg.N_smooth / 20.0
    return (param, value, replicate, rhs_id, iters, int(converged), log.final_diff)


def _parse_values(param: str, raw: str) -> list:
    vals = []
    for tok in raw.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if param in ("N_smooth", "N_grid", "k_peak"):
            vals.append(int(tok))
        else:
            vals.append(float(tok))
    if not vals:
        raise CliError("--values must list at least one value")
    return vals


def _cmd_sweep(args) -> int:
    if args.param not in SWEEP_PARAMS:
        raise CliError(f"--param must be one of {SWEEP_PARAMS}, got {args.param!r}")
    values = _parse_values(args.param, args.values)
    cfg = _load_config(args.config, {"seed": args.seed})
    if args.replicates < 1:
        raise CliError("--replicates must be >= 1")

    tasks = []
    if args.param == "k_peak":
        n = cfg.N_grid
        if n is None:
            raise CliError("k_peak sweeps need N_grid in the config")
        for value in values:
            for rep in range(args.replicates):
                f, _, _ = datagen.turbulent_source(n, value, cfg.seed + rep,
                                                   p_rms=args.p_rms)
                tasks.append((args.param, value, rep, f"kpeak{value}",
                              f.data, cfg.to_json(), args.scale_iters))
    else:
        if not args.rhs:
            raise CliError("--rhs is required for this sweep parameter")
        rhs_list = [tok.strip() for tok in args.rhs.split(",") if tok.strip()]
        grids = {Path(p).stem: _read_problem(p).f for p in rhs_list}
        for value in values:
            if args.param == "N_grid":
                sub = replace(cfg, N_grid=None)
            else:
                sub = replace(cfg, **{args.param: value}, N_grid=None)
            for rhs_id, f in grids.items():
                f_use = _resample_rhs(f, value) if args.param == "N_grid" else f
                for rep in range(args.replicates):
                    tasks.append((args.param, value, rep, rhs_id, f_use.data,
                                  sub.to_json(), args.scale_iters))

    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_task, tasks))
    else:
        rows = [_sweep_task(t) for t in tasks]
    rows.sort(key=lambda r: (str(r[0]), float(r[1]), int(r[2]), str(r[3])))

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow(row)
    print(f"wrote {args.out} ({len(rows)} rows)")
    return 0


def _cmd_spectrum(args) -> int:
    try:
        g = read_grid(args.infile)
    except (FileNotFoundError, ValueError) as exc:
        raise CliError(f"bad grid file {args.infile}: {exc}") from exc
    spec = power_spectrum(g, peak_normalize=args.peak_normalize)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("k", "power"))
        for k, p in zip(spec.k, spec.power):
            writer.writerow((int(k), f"{p:.17e}"))
    print(f"wrote {args.out} ({len(spec.k)} bins)")
    return 0


def _time_call(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _cmd_bench(args) -> int:
    sizes = [int(t) for t in args.sizes.split(",") if t.strip()]
    sweeps = args.sweeps
    backends = [("numpy", numpy_backend)]
    if kernels.HAVE_CYTHON:
        from .kernels import _stencil

        backends.append(("cython", _stencil))
    else:
        print("compiled kernels unavailable; benchmarking numpy only")
    rows = []
    rng = np.random.default_rng(0)
    for n in sizes:
        f = rng.standard_normal((n, n))
        f -= f.mean()
        h2 = (2.0 * np.pi / n) ** 2
        for name, mod in backends:
            p = np.zeros((n, n))
            gs_t = _time_call(lambda: mod.gs_sweeps(p, f, h2, sweeps), args.repeats)
            lap_t = _time_call(lambda: mod.laplacian(p, 1.0 / h2), args.repeats)
            rows.append((n, name, gs_t / sweeps * 1e3, lap_t * 1e3))
    print(f"{'n':>6} {'backend':>8} {'ms/sweep':>10} {'ms/laplacian':>13}")
    for n, name, gs_ms, lap_ms in rows:
        print(f"{n:>6} {name:>8} {gs_ms:>10.3f} {lap_ms:>13.3f}")
    by_key = {(n, name): gs for n, name, gs, _ in rows}
    if kernels.HAVE_CYTHON:
        for n in sizes:
            ratio = by_key[(n, "numpy")] / by_key[(n, "cython")]
            print(f"n={n}: cython speedup x{ratio:.1f}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("n", "backend", "gs_ms_per_sweep", "laplacian_ms"))
            writer.writerows(rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgsr",
        description="Multigrid Poisson solver with spline or super-resolution "
                    "prolongation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_dg = sub.add_parser("datagen", help="generate synthetic problems")
    p_dg.add_argument("--kind", choices=("mode", "turb", "windows"), required=True)
    p_dg.add_argument("--n", type=int, required=True, help="grid side")
    p_dg.add_argument("--mode-k", type=int, help="mode number for --kind mode")
    p_dg.add_argument("--k-peak", type=int, default=8)
    p_dg.add_argument("--p-rms", type=float, default=None,
                      help="target oracle RMS (turb/windows)")
    p_dg.add_argument("--count", type=int, default=1000,
                      help="window pairs (windows kind)")
    p_dg.add_argument("--fields", type=int, default=50,
                      help="source fields (windows kind)")
    p_dg.add_argument("--seed", type=int, default=None)
    p_dg.add_argument("--out", required=True)
    p_dg.set_defaults(fn=_cmd_datagen)

    p_sv = sub.add_parser("solve", help="solve laplace(p) = f from an MGG1 file")
    p_sv.add_argument("--rhs", required=True)
    p_sv.add_argument("--config", default=None, help="JSON run configuration")
    p_sv.add_argument("--weights", default=None, help="MGSR1 generator weights")
    p_sv.add_argument("--mode", choices=("spline", "sr", "hybrid"), default=None)
    p_sv.add_argument("--n-iter", type=int, default=None)
    p_sv.add_argument("--n-smooth", type=int, default=None)
    p_sv.add_argument("--n-gan", type=float, default=None)
    p_sv.add_argument("--s-thres", type=float, default=None)
    p_sv.add_argument("--tol", type=float, default=None)
    p_sv.add_argument("--seed", type=int, default=None)
    p_sv.add_argument("--out-grid", default=None)
    p_sv.add_argument("--out-log", default=None)
    p_sv.set_defaults(fn=_cmd_solve)

    p_sw = sub.add_parser("sweep", help="parameter sweep over repeated solves")
    p_sw.add_argument("--param", required=True)
    p_sw.add_argument("--values", required=True, help="comma-separated values")
    p_sw.add_argument("--replicates", type=int, default=1)
    p_sw.add_argument("--rhs", default=None, help="comma-separated MGG1 files")
    p_sw.add_argument("--config", default=None)
    p_sw.add_argument("--p-rms", type=float, default=None,
                      help="oracle RMS for generated k_peak RHS")
    p_sw.add_argument("--scale-iters", action="store_true",
                      help="scale iteration counts by N_smooth/20")
    p_sw.add_argument("--jobs", type=int, default=1)
    p_sw.add_argument("--seed", type=int, default=None)
    p_sw.add_argument("--out", required=True)
    p_sw.set_defaults(fn=_cmd_sweep)

    p_sp = sub.add_parser("spectrum", help="radial power spectrum of a grid")
    p_sp.add_argument("--in", dest="infile", required=True)
    p_sp.add_argument("--peak-normalize", action="store_true")
    p_sp.add_argument("--out", required=True)
    p_sp.set_defaults(fn=_cmd_spectrum)

    p_bn = sub.add_parser("bench", help="compare kernel backends")
    p_bn.add_argument("--sizes", default="96,192,384")
    p_bn.add_argument("--sweeps", type=int, default=20)
    p_bn.add_argument("--repeats", type=int, default=3)
    p_bn.add_argument("--out", default=None)
    p_bn.set_defaults(fn=_cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
