"""Ground-truth machinery: dense assembly, exact row evaluation, truncated
SVD, sequentially truncated Tucker compression, and error measurement.

Everything here favors obviousness over speed; these are the references the
fast paths are tested against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor
from .grids import IndexBox, UniformGrid
from .kernels import (
    RADIAL_GRADING,
    CoefficientFn,
    KernelSpec,
    QuadratureConfig,
    _evaluate,
    _gauss01,
    diagonal_entry,
    pairwise_masked_diagonal,
    pairwise_rows_masked,
)

DENSE_GUARD = 2**15


@dataclass
class DenseOperator:
    matrix: np.ndarray


def _grid_points(grid: UniformGrid) -> np.ndarray:
    box = IndexBox(tuple((0, grid.n) for _ in range(grid.d)))
    return grid.points(box)


def dense_assemble(
    k: KernelSpec,
    coeff: CoefficientFn,
    grid: UniformGrid,
    cfg: QuadratureConfig,
    max_points: int = DENSE_GUARD,
) -> DenseOperator:
    """Full system matrix a(x_i) 1[i=j] + K_ij h^d on the uniform grid."""
    n_pts = grid.num_points
    if n_pts > max_points:
        raise ValueError(
            f"dense assembly of {n_pts} points exceeds the guard {max_points}"
        )
    pts = _grid_points(grid)
    h = grid.h
    if k.translation_invariant:
        diag = np.full(n_pts, diagonal_entry(k, pts[0], h, cfg))
    else:
        diag = np.array([diagonal_entry(k, p, h, cfg) for p in pts])
    mat = pairwise_masked_diagonal(k, pts, pts, diag) * h**grid.d
    mat[np.arange(n_pts), np.arange(n_pts)] += coeff(pts)
    return DenseOperator(matrix=mat)


def exact_row_evaluator(
    k: KernelSpec,
    coeff: CoefficientFn,
    grid: UniformGrid,
    cfg: QuadratureConfig,
    chunk: int = 256,
):
    """Row oracle for the uniform-grid system: returns a callable mapping
    (row ids, u) to the exact matvec values on those rows, recomputing kernel
    rows on demand so memory stays O(N)."""
    pts = _grid_points(grid)
    h = grid.h
    hd = h**grid.d
    if k.translation_invariant:
        diag_value = diagonal_entry(k, pts[0], h, cfg)
    else:
        diag_value = None

    def rows_apply(rows: np.ndarray, u: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        u = np.asarray(u, dtype=np.float64).ravel(order="F")
        out = np.empty(rows.size)
        for start in range(0, rows.size, chunk):
            sel = rows[start : start + chunk]
            block = pairwise_rows_masked(k, pts, sel)
            if diag_value is not None:
                block[np.arange(sel.size), sel] = diag_value
            else:
                block[np.arange(sel.size), sel] = [
                    diagonal_entry(k, pts[i], h, cfg) for i in sel
                ]
            out[start : start + chunk] = block @ (hd * u)
        out += coeff(pts[rows]) * u[rows]
        return out

    return rows_apply


def svd_lowrank(m: np.ndarray, r: int):
    """Best rank-r approximation factors (u, s, v) with m ~ u @ diag(s) @ v.T."""
    m = np.asarray(m, dtype=np.float64)
    if not 1 <= r <= min(m.shape):
        raise ValueError("rank out of range")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    return u[:, :r], s[:r], vt[:r].T


@dataclass
class SthosvdResult:
    core: np.ndarray
    factors: list
    discarded_energy: np.ndarray  # per mode, sum of squared dropped singular values

    def reconstruct(self) -> np.ndarray:
        return tensor.multi_mode_apply(
            self.core, [(f, mode + 1) for mode, f in enumerate(self.factors)]
        )


def _unfold(t: np.ndarray, mode: int) -> np.ndarray:
    moved = np.moveaxis(t, mode, 0)
    return moved.reshape(t.shape[mode], -1, order="F")


def sthosvd(t: np.ndarray, ranks) -> SthosvdResult:
    """Sequentially truncated Tucker compression, processing modes in
    ascending order: unfold the current core, truncate its SVD, contract, and
    move on."""
    t = np.asarray(t, dtype=np.float64)
    ranks = list(ranks)
    if len(ranks) != t.ndim:
        raise ValueError("one rank per mode required")
    for r, n in zip(ranks, t.shape):
        if not 1 <= r <= n:
            raise ValueError(f"rank {r} invalid for extent {n}")
    core = t
    factors = []
    discarded = np.zeros(t.ndim)
    for mode, r in enumerate(ranks):
        u, s, _ = np.linalg.svd(_unfold(core, mode), full_matrices=False)
        factors.append(u[:, :r])
        discarded[mode] = float(np.sum(s[r:] ** 2))
        core = tensor.mode_product(core, u[:, :r].T, mode + 1)
    return SthosvdResult(core=core, factors=factors, discarded_energy=discarded)


def _triangle_average(k: KernelSpec, corners: np.ndarray, center: np.ndarray,
                      area: float, cfg: QuadratureConfig) -> float:
    """Average of k(center, .) over the triangle.  Singular kernels get a
    centroid split with a radially graded Duffy map per subtriangle."""
    gx, gw = _gauss01(cfg.q)

    def duffy(v0, v1, v2, graded):
        if graded:
            m = RADIAL_GRADING
            u, uw = gx**m, m * gx ** (m - 1) * gw
        else:
            u, uw = gx, gw
        uu, vv = np.meshgrid(u, gx, indexing="ij")
        ww = np.outer(uw, gw)
        pts = (
            v0
            + uu[..., None] * (v1 - v0)
            + (uu * vv)[..., None] * (v2 - v1)
        )
        sub_area = 0.5 * abs(
            (v1[0] - v0[0]) * (v2[1] - v0[1]) - (v1[1] - v0[1]) * (v2[0] - v0[0])
        )
        x = np.broadcast_to(center, pts.reshape(-1, 2).shape)
        vals = _evaluate(k, x, pts.reshape(-1, 2))
        return 2.0 * sub_area * float(np.sum(vals * (uu * ww).ravel()))

    if k.smooth_at_diagonal:
        total = duffy(corners[0], corners[1], corners[2], graded=False)
    else:
        total = 0.0
        for i in range(3):
            total += duffy(center, corners[i], corners[(i + 1) % 3], graded=True)
    return total / area


def quasi_row_evaluator(k: KernelSpec, coeff: CoefficientFn, mesh, cfg: QuadratureConfig,
                        chunk: int = 256):
    """Row oracle for the quasi-uniform system on triangle centroids:
    f_i = a(x_i) u_i + sum_j K_ij |cell_j| u_j with the diagonal entry the
    triangle average of the kernel."""
    pts = mesh.centroids
    areas = mesh.areas

    def rows_apply(rows: np.ndarray, u: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        u = np.asarray(u, dtype=np.float64).ravel()
        out = np.empty(rows.size)
        for start in range(0, rows.size, chunk):
            sel = rows[start : start + chunk]
            block = pairwise_rows_masked(k, pts, sel)
            block[np.arange(sel.size), sel] = [
                _triangle_average(k, mesh.corners(i), pts[i], areas[i], cfg)
                for i in sel
            ]
            out[start : start + chunk] = block @ (areas * u)
        out += coeff(pts[rows]) * u[rows]
        return out

    return rows_apply


def rel_fro_error(approx: np.ndarray, exact: np.ndarray) -> float:
    """Relative Frobenius-norm error of an approximation."""
    approx = np.asarray(approx, dtype=np.float64)
    exact = np.asarray(exact, dtype=np.float64)
    if approx.shape != exact.shape:
        raise ValueError("shape mismatch")
    denom = np.linalg.norm(exact)
    if denom == 0.0:
        raise ValueError("exact reference has zero norm")
    return float(np.linalg.norm(approx - exact) / denom)
