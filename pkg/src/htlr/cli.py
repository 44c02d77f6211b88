"""Benchmark command line: desk-scale experiment harness.

Three subcommands:

* ``bench-uniform``: build the hierarchical Tucker operator (optionally the
  conventional low-rank baseline too) on a uniform grid, time construction
  and matvec, and report storage counts and the sampled application error.
* ``rank-explore``: compare interpolation, truncated SVD and sequentially
  truncated Tucker compression of kernel interaction blocks on neighbor and
  well-separated domain pairs.
* ``bench-quasi``: run the triangulated-grid pipeline over a sweep of
  oversampling ratios.

Output is CSV (default) or JSON, deterministic for a fixed seed except for
the wall-clock timing columns.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time

import numpy as np

from . import oracles
from .chebyshev import cheb_points, core_tensor, factor_matrix
from .grids import AdmissibilityRule, UniformGrid
from .kernels import CoefficientFn, QuadratureConfig, by_name, pairwise
from .operators import (
    BuildConfig,
    construct,
    construct_hmatrix,
    estimate_rel_error_random,
    hmatrix_matvec,
    matvec,
    storage_report,
)
from .quasi import apply_pipeline, build_pipeline, load_mesh, structured_trimesh
from .tensor import multi_mode_apply

TIMING_REPEATS = 3

UNIFORM_HEADER = [
    "id", "variant", "d", "n", "kernel", "adm", "p", "leaf",
    "t_construct", "t_apply", "dense_scalars", "factor_scalars",
    "core_scalars", "total_scalars", "bound", "e_apply_rand", "seed",
]

RANK_HEADER = ["id", "d", "kernel", "pair", "method", "p", "rel_fro_error"]

QUASI_HEADER = [
    "id", "variant", "d", "n_quasi", "rho", "m_side", "kernel", "adm", "p",
    "leaf", "t_construct", "t_apply", "dense_scalars", "factor_scalars",
    "core_scalars", "total_scalars", "bound", "e_apply_rand", "seed",
]


class UsageError(Exception):
    pass


def quasi_test_field(points: np.ndarray) -> np.ndarray:
    """Smooth benchmark field sampled on the quasi-uniform points."""
    x1, x2 = points[:, 0], points[:, 1]
    return (
        1.0
        + 0.5 * np.exp(-((x1 - 0.3) ** 2) - (x2 - 0.6) ** 2)
        + np.sin(5.0 * x1 * x2)
    )


def validate_uniform_side(n: int, leaf: int) -> None:
    """The benchmark accepts n = leaf * 2^L, a plain power of two, or a grid
    small enough for a single leaf."""
    if n < 1:
        raise UsageError("--n must be positive")
    if n <= leaf:
        return
    side = n
    while side > leaf and side % 2 == 0:
        side //= 2
    power_of_two = n & (n - 1) == 0
    if side != leaf and not power_of_two:
        raise UsageError(
            f"--n {n} is invalid: n must be leaf*2^L (leaf={leaf}) or a "
            "power of two so the grid halves evenly into leaf boxes"
        )


def _rule_from_args(args) -> AdmissibilityRule:
    if args.adm == "weak":
        return AdmissibilityRule.weak()
    eta = args.eta if args.eta is not None else float(np.sqrt(args.dim))
    return AdmissibilityRule.strong(eta)


def _best_of(fn, repeats=TIMING_REPEATS):
    best = np.inf
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return result, best


def _timing_and_error(op, apply_fn, exact_rows, u, seed):
    _, t_apply = _best_of(lambda: apply_fn(op, u))
    sample = min(1000, op.num_points)
    err = estimate_rel_error_random(
        op, exact_rows, u, sample_size=sample, seed=seed
    )
    rep = storage_report(op)
    return t_apply, err, rep


def cmd_bench_uniform(args) -> list[dict]:
    validate_uniform_side(args.n, args.leaf)
    kernel = by_name(args.kernel, args.dim)
    rule = _rule_from_args(args)
    grid = UniformGrid(args.dim, args.n)
    cfg = BuildConfig(
        rank=args.p, leaf_side=args.leaf, rule=rule, kernel=kernel,
        coeff=CoefficientFn.constant(0.0), quadrature=QuadratureConfig(),
    )
    rng = np.random.default_rng((args.seed, 0))
    u = rng.standard_normal(grid.num_points)
    exact = oracles.exact_row_evaluator(kernel, cfg.coeff, grid, cfg.quadrature)

    run_id = (
        f"u-d{args.dim}-{args.kernel}-n{args.n}-{args.adm}"
        f"-p{args.p}-l{args.leaf}-s{args.seed}"
    )
    base = {
        "id": run_id, "d": args.dim, "n": args.n, "kernel": args.kernel,
        "adm": args.adm, "p": args.p, "leaf": args.leaf, "seed": args.seed,
    }

    rows = []
    op, t_con = _best_of(
        lambda: construct(cfg, grid, threads=args.threads), repeats=TIMING_REPEATS
    )
    t_apply, err, rep = _timing_and_error(op, matvec, exact, u, (args.seed, 1))
    rows.append({
        **base, "variant": "htlr",
        "t_construct": t_con, "t_apply": t_apply,
        "dense_scalars": rep.dense_scalars, "factor_scalars": rep.factor_scalars,
        "core_scalars": rep.core_scalars, "total_scalars": rep.total_scalars,
        "bound": rep.theoretical_bound, "e_apply_rand": err,
    })
    if args.baseline:
        hop, t_con_h = _best_of(
            lambda: construct_hmatrix(cfg, grid, threads=args.threads),
            repeats=TIMING_REPEATS,
        )
        t_apply_h, err_h, rep_h = _timing_and_error(
            hop, hmatrix_matvec, exact, u, (args.seed, 1)
        )
        rows.append({
            **base, "variant": "hmatrix",
            "t_construct": t_con_h, "t_apply": t_apply_h,
            "dense_scalars": rep_h.dense_scalars,
            "factor_scalars": rep_h.factor_scalars,
            "core_scalars": rep_h.core_scalars,
            "total_scalars": rep_h.total_scalars,
            "bound": rep_h.theoretical_bound, "e_apply_rand": err_h,
        })
    return rows


def _domain_axes(box, pts_per_dim):
    return [
        lo + (np.arange(pts_per_dim) + 0.5) * (hi - lo) / pts_per_dim
        for lo, hi in box
    ]


def _block_points(axes):
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel(order="F") for m in mesh], axis=-1)


def interp_block_error(kernel, box_tau, box_sigma, pts_per_dim, rank,
                       dense=None):
    """Relative Frobenius error of the tensor Chebyshev interpolant of the
    interaction matrix between two boxes."""
    x_axes = _domain_axes(box_tau, pts_per_dim)
    y_axes = _domain_axes(box_sigma, pts_per_dim)
    if dense is None:
        dense = pairwise(kernel, _block_points(x_axes), _block_points(y_axes))
    grids_tau = [cheb_points(lo, hi, rank) for lo, hi in box_tau]
    grids_sigma = [cheb_points(lo, hi, rank) for lo, hi in box_sigma]
    u_facs = [factor_matrix(ax, g) for ax, g in zip(x_axes, grids_tau)]
    v_facs = [factor_matrix(ax, g) for ax, g in zip(y_axes, grids_sigma)]
    core = core_tensor(kernel, grids_tau, grids_sigma)
    d = len(box_tau)
    updates = [(u_facs[i], i + 1) for i in range(d)]
    updates += [(v_facs[i], d + i + 1) for i in range(d)]
    rec = multi_mode_apply(core, updates).reshape(dense.shape, order="F")
    return oracles.rel_fro_error(rec, dense)


def study_domains(d: int) -> dict:
    """The neighbor / well-separated box pairs of the rank study: three
    adjacent boxes of side 0.25 along the first axis."""
    h = 0.25
    first = tuple((0.0, h) for _ in range(d))
    neighbor = ((h, 2 * h),) + tuple((0.0, h) for _ in range(d - 1))
    wellsep = ((2 * h, 3 * h),) + tuple((0.0, h) for _ in range(d - 1))
    return {"neighbor": (first, neighbor), "wellsep": (first, wellsep)}


def rank_explore_errors(kernel_name: str, d: int, ranks) -> list[dict]:
    """Error-vs-rank curves for the three compression routes on both domain
    pairs; one dict per (pair, method, rank)."""
    kernel = by_name(kernel_name, d)
    pts_per_dim = 32 if d == 2 else 16
    rows = []
    run_id = f"r-d{d}-{kernel_name}"
    for pair_name, (box_t, box_s) in study_domains(d).items():
        x_axes = _domain_axes(box_t, pts_per_dim)
        y_axes = _domain_axes(box_s, pts_per_dim)
        dense = pairwise(kernel, _block_points(x_axes), _block_points(y_axes))
        sing = np.linalg.svd(dense, compute_uv=False)
        norm = float(np.linalg.norm(dense))
        tens = dense.reshape((pts_per_dim,) * (2 * d), order="F")
        for rank in ranks:
            e_interp = interp_block_error(
                kernel, box_t, box_s, pts_per_dim, rank, dense=dense
            )
            e_svd = float(np.sqrt(np.sum(sing[rank**d:] ** 2))) / norm
            st = oracles.sthosvd(tens, (rank,) * (2 * d))
            e_st = oracles.rel_fro_error(
                st.reconstruct().reshape(dense.shape, order="F"), dense
            )
            for method, err in (
                ("interp", e_interp), ("svd", e_svd), ("sthosvd", e_st)
            ):
                rows.append({
                    "id": run_id, "d": d, "kernel": kernel_name,
                    "pair": pair_name, "method": method, "p": rank,
                    "rel_fro_error": err,
                })
    return rows


def cmd_rank_explore(args) -> list[dict]:
    if args.kernel == "slp3d" and args.dim != 3:
        raise UsageError("slp3d requires --dim 3")
    if args.kernel == "slp2d" and args.dim != 2:
        raise UsageError("slp2d requires --dim 2")
    max_rank = args.p if args.p is not None else (16 if args.dim == 2 else 8)
    pts = 32 if args.dim == 2 else 16
    if max_rank > pts:
        raise UsageError(f"--p must be at most {pts} for dimension {args.dim}")
    return rank_explore_errors(args.kernel, args.dim, range(1, max_rank + 1))


def cmd_bench_quasi(args) -> list[dict]:
    if args.dim != 2:
        raise UsageError("the quasi-uniform pipeline is two-dimensional")
    if args.mesh is not None:
        mesh = load_mesh(args.mesh)
    else:
        if args.n is None:
            raise UsageError("bench-quasi needs --n (number of triangles) or --mesh")
        k = int(round(np.sqrt(args.n / 2.0)))
        if 2 * k * k != args.n:
            raise UsageError(
                f"--n {args.n} is not of the form 2*k^2 for a structured mesh"
            )
        mesh = structured_trimesh(k)
    kernel = by_name(args.kernel, 2)
    rule = _rule_from_args(args)
    cfg = BuildConfig(
        rank=args.p, leaf_side=args.leaf, rule=rule, kernel=kernel,
        coeff=CoefficientFn.constant(0.0), quadrature=QuadratureConfig(),
    )
    u = quasi_test_field(mesh.centroids)
    exact = oracles.quasi_row_evaluator(kernel, cfg.coeff, mesh, cfg.quadrature)
    n_quasi = mesh.num_triangles
    rng = np.random.default_rng((args.seed, 2))
    sample = min(1000, n_quasi)
    sampled_rows = rng.choice(n_quasi, size=sample, replace=False)
    exact_vals = exact(sampled_rows, u)

    rows = []
    rhos = args.rho if args.rho else [2.0]
    for rho in rhos:
        pipe, t_con = _best_of(
            lambda: build_pipeline(mesh, cfg, rho, threads=args.threads),
            repeats=TIMING_REPEATS,
        )
        out, t_apply = _best_of(lambda: apply_pipeline(pipe, u))
        denom = np.linalg.norm(exact_vals)
        err = float(np.linalg.norm(out[sampled_rows] - exact_vals) / denom)
        rep = storage_report(pipe.op)
        rows.append({
            "id": f"q-{args.kernel}-N{n_quasi}-rho{rho:g}-{args.adm}"
                  f"-p{args.p}-l{args.leaf}-s{args.seed}",
            "variant": "htlr-quasi", "d": 2, "n_quasi": n_quasi,
            "rho": pipe.rho, "m_side": pipe.m_side, "kernel": args.kernel,
            "adm": args.adm, "p": args.p, "leaf": args.leaf,
            "t_construct": t_con, "t_apply": t_apply,
            "dense_scalars": rep.dense_scalars,
            "factor_scalars": rep.factor_scalars,
            "core_scalars": rep.core_scalars,
            "total_scalars": rep.total_scalars,
            "bound": rep.theoretical_bound,
            "e_apply_rand": err, "seed": args.seed,
        })
    return rows


def _write_rows(rows, header, args) -> None:
    if args.format == "json":
        text = json.dumps(rows, indent=2, default=float) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=header)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="htlr-bench",
        description="Benchmarks for hierarchical Tucker kernel compression.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--dim", type=int, choices=(2, 3), default=2)
        p.add_argument("--kernel", choices=("gaussian", "slp2d", "slp3d"),
                       default="gaussian")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--threads", type=int, default=1)

    pu = sub.add_parser("bench-uniform", help="uniform-grid benchmark")
    common(pu)
    pu.add_argument("--n", type=int, required=True, help="points per direction")
    pu.add_argument("--p", type=int, default=8, help="Tucker rank per mode")
    pu.add_argument("--leaf", type=int, default=16, help="leaf box side")
    pu.add_argument("--adm", choices=("weak", "strong"), default="weak")
    pu.add_argument("--eta", type=float, default=None,
                    help="strong-admissibility parameter (default sqrt(d))")
    pu.add_argument("--baseline", action="store_true",
                    help="also run the conventional low-rank baseline")

    pr = sub.add_parser("rank-explore", help="block compression rank study")
    common(pr)
    pr.add_argument("--p", type=int, default=None, help="largest rank of the sweep")

    pq = sub.add_parser("bench-quasi", help="triangulated-grid pipeline benchmark")
    common(pq)
    pq.add_argument("--n", type=int, default=None,
                    help="number of triangles (2*k^2) for the structured mesh")
    pq.add_argument("--mesh", default=None, help="mesh file to load instead")
    pq.add_argument("--rho", type=float, action="append", default=None,
                    help="oversampling ratio; repeat for a sweep")
    pq.add_argument("--p", type=int, default=8)
    pq.add_argument("--leaf", type=int, default=16)
    pq.add_argument("--adm", choices=("weak", "strong"), default="weak")
    pq.add_argument("--eta", type=float, default=None)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        if args.command == "bench-uniform":
            if args.kernel == "slp3d" and args.dim != 3:
                raise UsageError("slp3d requires --dim 3")
            if args.kernel == "slp2d" and args.dim != 2:
                raise UsageError("slp2d requires --dim 2")
            rows = cmd_bench_uniform(args)
            _write_rows(rows, UNIFORM_HEADER, args)
        elif args.command == "rank-explore":
            rows = cmd_rank_explore(args)
            _write_rows(rows, RANK_HEADER, args)
        else:
            if args.kernel == "slp3d":
                raise UsageError("slp3d requires --dim 3")
            rows = cmd_bench_quasi(args)
            _write_rows(rows, QUASI_HEADER, args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
