"""Acceptance suite: one criterion per test, each printing a PASS/FAIL line.

Run `pytest tests/test_acceptance.py -v -s` to see the per-criterion lines;
the whole suite takes a few minutes (the 3D strong-admissibility case
dominates).
"""

import time

import numpy as np
import pytest

import htlr
from htlr import (
    AdmissibilityRule,
    BuildConfig,
    CoefficientFn,
    IndexBox,
    UniformGrid,
    build_lowrank,
    build_tlr,
    construct,
    construct_hmatrix,
    estimate_rel_error_random,
    exact_row_evaluator,
    gaussian,
    lowrank_apply,
    materialize,
    matvec,
    quasi_row_evaluator,
    slp_2d,
    slp_3d,
    storage_report,
    structured_trimesh,
    tlr_apply,
)
from htlr.cli import quasi_test_field, rank_explore_errors
from htlr.grids import domain_of
from htlr.quasi import apply_pipeline, build_pipeline
from oracle_utils import explicit_kron, shell_diagonal_average

# measured f64 noise floor of the 1024x1024 SVD tail is ~3e-15; below this
# the "error" is rounding noise, not approximation error (see the decay
# checks of criterion 8)
SVD_TAIL_FLOOR = 1e-13


def report(num, ok, detail):
    print(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


def gauss2d_cfg():
    return BuildConfig(
        rank=8, leaf_side=16, rule=AdmissibilityRule.weak(),
        kernel=gaussian(np.sqrt(2.0)), coeff=CoefficientFn.constant(0.0),
    )


@pytest.fixture(scope="module")
def ops_2d():
    """Weak/Gaussian operators at n = 64, 128, 256 with construction times."""
    out = {}
    for n in (64, 128, 256):
        cfg = gauss2d_cfg()
        start = time.perf_counter()
        op = construct(cfg, UniformGrid(2, n))
        out[n] = (op, time.perf_counter() - start)
    return out


@pytest.fixture(scope="module")
def op_3d_weak():
    cfg = BuildConfig(
        rank=4, leaf_side=5, rule=AdmissibilityRule.weak(),
        kernel=gaussian(np.sqrt(3.0)), coeff=CoefficientFn.constant(0.0),
    )
    start = time.perf_counter()
    op = construct(cfg, UniformGrid(3, 32))
    return op, time.perf_counter() - start


def full_vector_error(op, seed):
    cfg = op.config
    rows_fn = exact_row_evaluator(cfg.kernel, cfg.coeff, op.grid, cfg.quadrature)
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(op.num_points)
    f = matvec(op, u)
    exact = rows_fn(np.arange(op.num_points), u)
    return float(np.linalg.norm(f - exact) / np.linalg.norm(exact))


def test_criterion_1_matvec_accuracy_2d_gaussian_weak(ops_2d):
    errors = {}
    for n in (64, 128):
        op, t_construct = ops_2d[n]
        start = time.perf_counter()
        errors[n] = full_vector_error(op, seed=100 + n)
        elapsed = t_construct + (time.perf_counter() - start)
        assert errors[n] <= 1e-9, f"n={n}: error {errors[n]:.3e} > 1e-9"
        assert elapsed <= 60.0, f"n={n}: took {elapsed:.1f}s > 60s"
    stable = errors[128] <= 10.0 * errors[64] and errors[64] <= 10.0 * errors[128]
    report(
        1, errors[64] <= 1e-9 and errors[128] <= 1e-9 and stable,
        f"full-vector errors n=64: {errors[64]:.2e}, n=128: {errors[128]:.2e} "
        "(<= 1e-9, within one order of each other)",
    )


def test_criterion_2_matvec_accuracy_2d_slp_strong():
    start = time.perf_counter()
    cfg = BuildConfig(
        rank=8, leaf_side=16, rule=AdmissibilityRule.strong(np.sqrt(2.0)),
        kernel=slp_2d(), coeff=CoefficientFn.constant(0.0),
    )
    op = construct(cfg, UniformGrid(2, 64))
    err = full_vector_error(op, seed=202)
    elapsed = time.perf_counter() - start
    report(
        2, err <= 1e-5 and elapsed <= 120.0,
        f"full-vector error {err:.2e} <= 1e-5 (strong eta=sqrt(2), "
        f"{elapsed:.1f}s)",
    )


def test_criterion_3_matvec_accuracy_3d_gaussian_weak(op_3d_weak):
    op, t_construct = op_3d_weak
    start = time.perf_counter()
    cfg = op.config
    rows_fn = exact_row_evaluator(cfg.kernel, cfg.coeff, op.grid, cfg.quadrature)
    rng = np.random.default_rng(303)
    u = rng.standard_normal(op.num_points)
    err = estimate_rel_error_random(op, rows_fn, u, sample_size=1000, seed=303)
    elapsed = t_construct + (time.perf_counter() - start)
    report(
        3, err <= 1e-3 and elapsed <= 300.0,
        f"sampled error {err:.2e} <= 1e-3 at n=32, p=4 ({elapsed:.1f}s)",
    )


def test_criterion_4_matvec_accuracy_3d_slp_strong():
    start = time.perf_counter()
    cfg = BuildConfig(
        rank=4, leaf_side=5, rule=AdmissibilityRule.strong(np.sqrt(3.0)),
        kernel=slp_3d(), coeff=CoefficientFn.constant(0.0),
    )
    op = construct(cfg, UniformGrid(3, 32))
    rows_fn = exact_row_evaluator(cfg.kernel, cfg.coeff, op.grid, cfg.quadrature)
    rng = np.random.default_rng(404)
    u = rng.standard_normal(op.num_points)
    err = estimate_rel_error_random(op, rows_fn, u, sample_size=1000, seed=404)
    elapsed = time.perf_counter() - start
    report(
        4, err <= 5e-3 and elapsed <= 600.0,
        f"sampled error {err:.2e} <= 5e-3 at n=32, p=4, eta=sqrt(3) "
        f"({elapsed:.1f}s)",
    )


def test_criterion_5_storage_bound(ops_2d, op_3d_weak):
    checks = []
    for n in (64, 128):
        rep = storage_report(ops_2d[n][0])
        checks.append((f"2D n={n}", rep.total_scalars, rep.theoretical_bound))
    rep3 = storage_report(op_3d_weak[0])
    checks.append(("3D n=32", rep3.total_scalars, rep3.theoretical_bound))
    ok = all(total <= bound for _, total, bound in checks)
    detail = "; ".join(
        f"{name}: {total} <= {bound:.0f}" for name, total, bound in checks
    )
    report(5, ok, detail)


def test_criterion_6_memory_advantage(ops_2d):
    cfg = gauss2d_cfg()
    grid = UniformGrid(2, 256)
    hop = construct_hmatrix(cfg, grid)
    h_total = storage_report(hop).total_scalars
    t_total = storage_report(ops_2d[256][0]).total_scalars
    ratio = h_total / t_total
    report(
        6, ratio >= 4.0,
        f"baseline/tucker stored-scalar ratio {ratio:.2f} >= 4.0 at n=256",
    )


def test_criterion_7_linear_storage_scaling(ops_2d):
    totals = {n: storage_report(ops_2d[n][0]).total_scalars for n in (64, 128, 256)}
    r1 = totals[128] / totals[64]
    r2 = totals[256] / totals[128]
    ok = 3.5 <= r1 <= 4.5 and 3.5 <= r2 <= 4.5
    report(7, ok, f"growth per n-doubling: {r1:.2f}, {r2:.2f} in [3.5, 4.5]")


def decays_at_least_2x(values):
    return all(b < a and b <= a / 2.0 for a, b in zip(values, values[1:]))


def test_criterion_8_rank_sweep_trends():
    start = time.perf_counter()
    ranks = [4, 8, 12, 16]

    slp = rank_explore_errors("slp2d", 2, ranks)
    gau = rank_explore_errors("gaussian", 2, [4, 8, 12])
    slp_curve = lambda pair, method: [
        r["rel_fro_error"] for r in slp
        if r["pair"] == pair and r["method"] == method
    ]
    gau_curve = lambda pair, method: [
        r["rel_fro_error"] for r in gau
        if r["pair"] == pair and r["method"] == method
    ]

    # (a) well-separated SLP: all three small by p=8 and decaying fast
    ws = {m: slp_curve("wellsep", m) for m in ("interp", "svd", "sthosvd")}
    a_ok = all(curve[1] <= 1e-6 for curve in ws.values())
    a_ok &= decays_at_least_2x(ws["interp"])
    a_ok &= decays_at_least_2x(ws["sthosvd"])
    # the svd tail reaches the f64 noise floor by p=8; require the 2x decay
    # above the floor and saturation below it
    for prev, cur in zip(ws["svd"], ws["svd"][1:]):
        if prev > SVD_TAIL_FLOOR:
            a_ok &= cur < prev and cur <= prev / 2.0
        else:
            a_ok &= cur <= SVD_TAIL_FLOOR

    # (b) neighbor Gaussian: everything below 1e-8 by p=12
    b_ok = all(
        gau_curve("neighbor", m)[2] <= 1e-8 for m in ("interp", "svd", "sthosvd")
    )

    # (c) neighbor SLP resists Tucker compression
    c_ok = slp_curve("neighbor", "sthosvd")[3] > 1e-4

    elapsed = time.perf_counter() - start
    report(
        8, a_ok and b_ok and c_ok and elapsed <= 120.0,
        f"(a) wellsep slp errors at p=8: "
        f"{ws['interp'][1]:.1e}/{ws['svd'][1]:.1e}/{ws['sthosvd'][1]:.1e}; "
        f"(b) neighbor gaussian <= 1e-8 by p=12; "
        f"(c) neighbor slp sthosvd at p=16: "
        f"{slp_curve('neighbor', 'sthosvd')[3]:.1e} > 1e-4 ({elapsed:.0f}s)",
    )


def test_criterion_9_tlr_lowrank_equivalence():
    rng = np.random.default_rng(909)
    grid = UniformGrid(2, 64)
    kernel = gaussian(np.sqrt(2.0))
    worst_rec = 0.0
    worst_apply = 0.0
    built = 0
    while built < 20:
        rank = int(rng.choice([4, 8]))
        side = int(rng.choice([8, 16, 32]))
        pos = rng.integers(0, 64 // side, size=4) * side
        tau = IndexBox(((pos[0], pos[0] + side), (pos[1], pos[1] + side)))
        sigma = IndexBox(((pos[2], pos[2] + side), (pos[3], pos[3] + side)))
        if domain_of(grid, tau).overlap_volume(domain_of(grid, sigma)) > 0:
            continue
        tb = build_tlr(kernel, grid, tau, sigma, rank, grid.h)
        lb = build_lowrank(kernel, grid, tau, sigma, rank, grid.h)
        worst_rec = max(
            worst_rec, float(np.abs(materialize(tb) - materialize(lb)).max())
        )
        u = rng.standard_normal(tb.shape[1])
        worst_apply = max(
            worst_apply, float(np.abs(tlr_apply(tb, u) - lowrank_apply(lb, u)).max())
        )
        built += 1
    ok = worst_rec <= 1e-12 and worst_apply <= 1e-12
    report(
        9, ok,
        f"20 random blocks: max reconstruction gap {worst_rec:.1e}, "
        f"max apply gap {worst_apply:.1e} (<= 1e-12)",
    )


def test_criterion_10_quasi_uniform_pipeline():
    start = time.perf_counter()
    cfg = gauss2d_cfg()

    def pipeline_error(k_cells, rho):
        mesh = structured_trimesh(k_cells)
        u = quasi_test_field(mesh.centroids)
        rows_fn = quasi_row_evaluator(cfg.kernel, cfg.coeff, mesh, cfg.quadrature)
        rng = np.random.default_rng(1010)
        rows = rng.choice(mesh.num_triangles, size=1000, replace=False)
        exact = rows_fn(rows, u)
        pipe = build_pipeline(mesh, cfg, rho)
        out = apply_pipeline(pipe, u)
        return float(np.linalg.norm(out[rows] - exact) / np.linalg.norm(exact))

    errs_64 = [pipeline_error(64, rho) for rho in (1.5, 2.0, 3.0)]
    err_128 = pipeline_error(128, 2.0)
    elapsed = time.perf_counter() - start

    decreasing = errs_64[0] > errs_64[1] > errs_64[2]
    refines = err_128 < errs_64[1]
    small = max(errs_64) <= 1e-1 and err_128 <= 1e-1
    report(
        10, decreasing and refines and small and elapsed <= 300.0,
        f"N=8192 errors over rho {{1.5, 2, 3}}: "
        f"{errs_64[0]:.2e} > {errs_64[1]:.2e} > {errs_64[2]:.2e}; "
        f"N=32768 at rho=2: {err_128:.2e} < {errs_64[1]:.2e} ({elapsed:.0f}s)",
    )


def test_criterion_11_row_stochasticity():
    from test_quasi import perturbed_mesh

    worst = 0.0
    for mesh, m_side in [
        (structured_trimesh(32), 48),
        (structured_trimesh(16), 16),
        (perturbed_mesh(16, seed=5), 24),
        (perturbed_mesh(24, seed=6), 32),
    ]:
        s_mat = htlr.quasi_to_uniform(mesh, m_side)
        t_mat = htlr.uniform_to_quasi(mesh, m_side)
        worst = max(
            worst,
            float(np.abs(s_mat.row_sums() - 1.0).max()),
            float(np.abs(t_mat.row_sums() - 1.0).max()),
        )
    report(11, worst <= 1e-10, f"max |row sum - 1| = {worst:.1e} <= 1e-10")


def test_criterion_12_property_suites():
    rng = np.random.default_rng(1212)

    # tensor: Kronecker equivalence and mode-product composition
    shape = (4, 4, 4)
    factors = [rng.standard_normal((3, 4)) for _ in range(3)]
    u = rng.standard_normal(64)
    kron_gap = np.abs(
        htlr.tensor_to_vec(
            htlr.multi_mode_apply(
                htlr.vec_to_tensor(u, shape),
                [(f, i + 1) for i, f in enumerate(factors)],
            )
        )
        - explicit_kron(factors) @ u
    ).max()
    t = rng.standard_normal((5, 6, 4))
    a = rng.standard_normal((7, 6))
    b = rng.standard_normal((3, 7))
    comp_gap = np.abs(
        htlr.mode_product(htlr.mode_product(t, a, 2), b, 2)
        - htlr.mode_product(t, b @ a, 2)
    ).max()
    qres = htlr.qr(rng.standard_normal((40, 9)))
    ortho_gap = np.abs(qres.q.T @ qres.q - np.eye(9)).max()

    # interpolation: partition of unity and polynomial exactness
    grid = htlr.cheb_points(0.0, 1.0, 8)
    pts = rng.random(50)
    fm = htlr.factor_matrix(pts, grid)
    unity_gap = np.abs(fm.sum(axis=1) - 1.0).max()
    poly_gap = max(
        float(np.abs(fm @ grid.nodes**deg - pts**deg).max()) for deg in range(8)
    )

    # kernels: singular diagonal quadrature vs the subdivision oracle
    h = 1 / 16
    val = htlr.diagonal_entry(slp_2d(), (0.5, 0.5), h, htlr.QuadratureConfig())
    ref = shell_diagonal_average(
        lambda z: -np.log(np.linalg.norm(z, axis=-1)) / (2 * np.pi), 2, h
    )
    quad_gap = abs(val - ref) / abs(ref)

    ok = (
        kron_gap <= 1e-12
        and comp_gap <= 1e-12
        and ortho_gap <= 1e-12
        and unity_gap <= 1e-12
        and poly_gap <= 1e-11
        and quad_gap <= 1e-8
    )
    report(
        12, ok,
        f"kron {kron_gap:.1e}, composition {comp_gap:.1e}, "
        f"orthonormality {ortho_gap:.1e}, unity {unity_gap:.1e}, "
        f"polynomial {poly_gap:.1e}, diagonal quadrature {quad_gap:.1e}",
    )
