"""Leaf-block payloads of the hierarchical operators.

An admissible (well-separated) index-box pair is compressed from Chebyshev
interpolation of the kernel either as a Tucker block (per-dimension factor
matrices around an order-2d core) or as a conventional low-rank block whose
basis matrices are the materialized Kronecker products of the same factors.
Inadmissible pairs are stored densely.  All blocks carry the quadrature
weight h^d of the discretization, so materializing any block reproduces the
corresponding submatrix of the system matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.linalg

from . import tensor
from .chebyshev import cheb_points, core_tensor, factor_matrix
from .grids import IndexBox, UniformGrid, domain_of
from .kernels import (
    CoefficientFn,
    KernelSpec,
    QuadratureConfig,
    diagonal_entry,
    pairwise,
    pairwise_masked_diagonal,
)


@dataclass
class TuckerBlock:
    """Tucker representation of one admissible block: order-2d core and
    orthonormal per-dimension factors for the target (u) and source (v)
    sides.

    A factor entry of ``None`` stands for an identity: when a box side
    equals the rank the (square, orthonormal) factor carries no compression
    and is absorbed into the core at build time instead of being stored.
    """

    core: np.ndarray
    u_factors: list
    v_factors: list

    def _side(self, factors, mode_offset):
        return tuple(
            f.shape[0] if f is not None else self.core.shape[mode_offset + dim]
            for dim, f in enumerate(factors)
        )

    @property
    def row_sizes(self) -> tuple[int, ...]:
        return self._side(self.u_factors, 0)

    @property
    def col_sizes(self) -> tuple[int, ...]:
        return self._side(self.v_factors, len(self.u_factors))

    @property
    def shape(self) -> tuple[int, int]:
        return int(np.prod(self.row_sizes)), int(np.prod(self.col_sizes))


@dataclass
class DenseBlock:
    matrix: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


@dataclass
class LowRankBlock:
    """Conventional low-rank representation u @ g @ v.T with orthonormal u, v."""

    u: np.ndarray
    g: np.ndarray
    v: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape[0], self.v.shape[0]


def _interpolation_data(k, grid, tau, sigma, rank):
    """Raw per-dimension factors and kernel core for a box pair."""
    dom_tau = domain_of(grid, tau)
    dom_sigma = domain_of(grid, sigma)
    if dom_tau.overlap_volume(dom_sigma) > 0.0:
        raise ValueError("interpolation blocks require disjoint domains")
    grids_tau = [cheb_points(lo, hi, rank) for lo, hi in dom_tau.intervals]
    grids_sigma = [cheb_points(lo, hi, rank) for lo, hi in dom_sigma.intervals]
    u_raw = [
        factor_matrix(grid.coords1d(*tau.ranges[dim]), grids_tau[dim])
        for dim in range(grid.d)
    ]
    v_raw = [
        factor_matrix(grid.coords1d(*sigma.ranges[dim]), grids_sigma[dim])
        for dim in range(grid.d)
    ]
    core = core_tensor(k, grids_tau, grids_sigma)
    return u_raw, v_raw, core


#: relative cutoff on the pivoted-QR diagonal when rank trimming is enabled
TRIM_TOL = 1e-14


def _trimmed_qr(raw: np.ndarray):
    """Column-pivoted QR truncated where the |R| diagonal has decayed below
    TRIM_TOL relative to its first entry; returns (q, r) with r unpermuted so
    q @ r reconstructs the input."""
    q, r, piv = scipy.linalg.qr(raw, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    keep = int(np.sum(diag > TRIM_TOL * diag[0]))
    keep = max(keep, 1)
    inv = np.empty_like(piv)
    inv[piv] = np.arange(len(piv))
    return q[:, :keep], r[:keep][:, inv]


def build_tlr(
    k: KernelSpec,
    grid: UniformGrid,
    tau: IndexBox,
    sigma: IndexBox,
    rank: int,
    h: float,
    trim: bool = False,
) -> TuckerBlock:
    """Interpolate the kernel over the box pair, orthogonalize every factor by
    thin QR, and fold h^d together with the triangular factors into the core.

    With ``trim`` the QR is column-pivoted and directions whose |R| diagonal
    has decayed below TRIM_TOL are dropped, shrinking the corresponding core
    mode.
    """
    u_raw, v_raw, core = _interpolation_data(k, grid, tau, sigma, rank)
    d = grid.d
    u_factors, v_factors = [], []
    updates = []
    for dim in range(d):
        for raw, factors, mode in (
            (u_raw[dim], u_factors, dim + 1),
            (v_raw[dim], v_factors, d + dim + 1),
        ):
            if trim:
                q, r = _trimmed_qr(raw)
                factors.append(q)
                updates.append((r, mode))
            elif raw.shape[0] == raw.shape[1]:
                # square factor: fold it into the core, keep an implicit identity
                factors.append(None)
                updates.append((raw, mode))
            else:
                fac = tensor.qr(raw)
                factors.append(fac.q)
                updates.append((fac.r, mode))
    core = tensor.multi_mode_apply(h**d * core, updates)
    return TuckerBlock(core=core, u_factors=u_factors, v_factors=v_factors)


def build_lowrank(
    k: KernelSpec,
    grid: UniformGrid,
    tau: IndexBox,
    sigma: IndexBox,
    rank: int,
    h: float,
) -> LowRankBlock:
    """Same interpolant as :func:`build_tlr` but with the factors materialized
    as Kronecker products and orthogonalized as single tall matrices."""
    u_raw, v_raw, core = _interpolation_data(k, grid, tau, sigma, rank)
    d = grid.d
    # Kronecker order: last dimension outermost, matching the
    # first-index-fastest linearization
    u_full = reduce(np.kron, reversed(u_raw))
    v_full = reduce(np.kron, reversed(v_raw))
    g = h**d * core.reshape(rank**d, rank**d, order="F")
    qr_u = tensor.qr(u_full)
    qr_v = tensor.qr(v_full)
    g = qr_u.r @ g @ qr_v.r.T
    return LowRankBlock(u=qr_u.q, g=g, v=qr_v.q)


def build_dense(
    k: KernelSpec,
    coeff: CoefficientFn,
    grid: UniformGrid,
    tau: IndexBox,
    sigma: IndexBox,
    h: float,
    cfg: QuadratureConfig,
    diag_value: float | None = None,
) -> DenseBlock:
    """Dense submatrix a(x_i) 1[i=j] + K_ij h^d over the box pair.

    `diag_value` optionally supplies a precomputed cell-average diagonal
    entry (valid for translation-invariant kernels, where it is the same for
    every cell).
    """
    if tau != sigma:
        overlaps = all(
            max(lo1, lo2) < min(hi1, hi2)
            for (lo1, hi1), (lo2, hi2) in zip(tau.ranges, sigma.ranges)
        )
        if overlaps:
            raise ValueError("dense blocks require equal or disjoint index boxes")
    xpts = grid.points(tau)
    ypts = grid.points(sigma)
    if tau == sigma:
        if diag_value is None:
            vals = [
                diagonal_entry(k, xpts[i], h, cfg) for i in range(xpts.shape[0])
            ]
            diag = np.asarray(vals)
        else:
            diag = np.full(xpts.shape[0], diag_value)
        mat = pairwise_masked_diagonal(k, xpts, ypts, diag) * h**grid.d
        mat[np.arange(len(xpts)), np.arange(len(xpts))] += coeff(xpts)
    else:
        mat = pairwise(k, xpts, ypts) * h**grid.d
    return DenseBlock(matrix=mat)


def tlr_apply(block: TuckerBlock, u_segment: np.ndarray) -> np.ndarray:
    """Apply a Tucker block to a source-side vector segment: reshape to a
    tensor, contract through the transposed v factors, the core, and the u
    factors, and flatten back."""
    u_segment = np.asarray(u_segment, dtype=np.float64).ravel(order="F")
    cols = block.col_sizes
    if u_segment.size != int(np.prod(cols)):
        raise ValueError("segment length does not match the block")
    d = len(cols)
    w = tensor.vec_to_tensor(u_segment, cols)
    w = tensor.multi_mode_apply(
        w,
        [
            (block.v_factors[dim].T, dim + 1)
            for dim in range(d)
            if block.v_factors[dim] is not None
        ],
    )
    h = tensor.contract(
        block.core, w, list(range(d + 1, 2 * d + 1)), list(range(1, d + 1))
    )
    f = tensor.multi_mode_apply(
        h,
        [
            (block.u_factors[dim], dim + 1)
            for dim in range(d)
            if block.u_factors[dim] is not None
        ],
    )
    return tensor.tensor_to_vec(f)


def lowrank_apply(block: LowRankBlock, u_segment: np.ndarray) -> np.ndarray:
    u_segment = np.asarray(u_segment, dtype=np.float64).ravel(order="F")
    return block.u @ (block.g @ (block.v.T @ u_segment))


def materialize(block) -> np.ndarray:
    """Full matrix represented by a block (for tests and small oracles)."""
    if isinstance(block, DenseBlock):
        return block.matrix
    if isinstance(block, LowRankBlock):
        return block.u @ block.g @ block.v.T
    d = len(block.u_factors)
    updates = [
        (block.u_factors[dim], dim + 1)
        for dim in range(d)
        if block.u_factors[dim] is not None
    ]
    updates += [
        (block.v_factors[dim], d + dim + 1)
        for dim in range(d)
        if block.v_factors[dim] is not None
    ]
    full = tensor.multi_mode_apply(block.core, updates)
    rows, cols = block.shape
    return full.reshape(rows, cols, order="F")


def storage_count(block) -> int:
    """Number of 64-bit scalars the block stores."""
    if isinstance(block, DenseBlock):
        return block.matrix.size
    if isinstance(block, LowRankBlock):
        return block.u.size + block.g.size + block.v.size
    return (
        sum(f.size for f in block.u_factors if f is not None)
        + sum(f.size for f in block.v_factors if f is not None)
        + block.core.size
    )
