"""Hierarchical operators: construction, matvec, storage and error estimates.

The hierarchical Tucker operator compresses every admissible leaf of the
block cluster tree into a Tucker block; the baseline hierarchical operator
uses conventional low-rank blocks built from the same interpolant, so the
two agree to rounding and differ only in storage and work.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .blocks import (
    DenseBlock,
    LowRankBlock,
    build_dense,
    build_lowrank,
    build_tlr,
    lowrank_apply,
    tlr_apply,
)
from .grids import (
    ADMISSIBLE,
    AdmissibilityRule,
    BlockClusterTree,
    UniformGrid,
    build_block_cluster_tree,
    build_cluster_tree,
)
from .kernels import CoefficientFn, KernelSpec, QuadratureConfig, diagonal_entry


@dataclass(frozen=True)
class BuildConfig:
    """Parameters of a hierarchical build: interpolation rank per mode, leaf
    box side, admissibility rule, kernel, coefficient and quadrature."""

    rank: int
    leaf_side: int
    rule: AdmissibilityRule
    kernel: KernelSpec
    coeff: CoefficientFn
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be positive")
        if not self.rank <= self.leaf_side <= 2 * self.rank:
            warnings.warn(
                f"leaf side {self.leaf_side} outside the recommended range "
                f"[rank, 2*rank] = [{self.rank}, {2 * self.rank}]; the linear "
                "storage bound assumes it",
                stacklevel=2,
            )


@dataclass
class HTLRMatrix:
    grid: UniformGrid
    config: BuildConfig
    block_tree: BlockClusterTree
    payloads: list  # leaf_id -> TuckerBlock | DenseBlock

    @property
    def num_points(self) -> int:
        return self.grid.num_points


@dataclass
class HMatrix:
    grid: UniformGrid
    config: BuildConfig
    block_tree: BlockClusterTree
    payloads: list  # leaf_id -> LowRankBlock | DenseBlock

    @property
    def num_points(self) -> int:
        return self.grid.num_points


@dataclass(frozen=True)
class StorageReport:
    dense_scalars: int
    factor_scalars: int
    core_scalars: int
    total_scalars: int
    theoretical_bound: float


def _cached_diag(cfg: BuildConfig, grid: UniformGrid) -> Optional[float]:
    if not cfg.kernel.translation_invariant:
        return None
    center = np.full(grid.d, 0.5 * grid.h)
    return diagonal_entry(cfg.kernel, center, grid.h, cfg.quadrature)


def _build_payloads(cfg, grid, tree, admissible_builder, threads=1):
    diag = _cached_diag(cfg, grid)

    def build_leaf(leaf):
        if leaf.kind == ADMISSIBLE:
            return admissible_builder(
                cfg.kernel, grid, leaf.tau.box, leaf.sigma.box, cfg.rank, grid.h
            )
        return build_dense(
            cfg.kernel, cfg.coeff, grid, leaf.tau.box, leaf.sigma.box,
            grid.h, cfg.quadrature, diag_value=diag,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(build_leaf, tree.leaves))
    return [build_leaf(leaf) for leaf in tree.leaves]


def construct(cfg: BuildConfig, grid: UniformGrid, threads: int = 1) -> HTLRMatrix:
    """Build the hierarchical Tucker operator for the configured kernel."""
    ctree = build_cluster_tree(grid, cfg.leaf_side)
    btree = build_block_cluster_tree(ctree, cfg.rule)
    payloads = _build_payloads(cfg, grid, btree, build_tlr, threads)
    return HTLRMatrix(grid=grid, config=cfg, block_tree=btree, payloads=payloads)


def construct_hmatrix(cfg: BuildConfig, grid: UniformGrid, threads: int = 1) -> HMatrix:
    """Build the baseline hierarchical operator with conventional low-rank
    leaves of rank rank^d."""
    ctree = build_cluster_tree(grid, cfg.leaf_side)
    btree = build_block_cluster_tree(ctree, cfg.rule)
    payloads = _build_payloads(cfg, grid, btree, build_lowrank, threads)
    return HMatrix(grid=grid, config=cfg, block_tree=btree, payloads=payloads)


def _hierarchical_matvec(op, u, apply_compressed):
    u = np.asarray(u, dtype=np.float64).ravel(order="F")
    n = op.grid.n
    d = op.grid.d
    if u.size != op.num_points:
        raise ValueError(f"vector length {u.size} != {op.num_points}")
    u_tensor = u.reshape((n,) * d, order="F")
    f_tensor = np.zeros((n,) * d)
    for leaf in op.block_tree.leaves:
        block = op.payloads[leaf.leaf_id]
        seg = u_tensor[leaf.sigma.box.slices].ravel(order="F")
        if isinstance(block, DenseBlock):
            out = block.matrix @ seg
        else:
            out = apply_compressed(block, seg)
        f_tensor[leaf.tau.box.slices] += out.reshape(
            leaf.tau.box.sizes, order="F"
        )
    return f_tensor.ravel(order="F")


def matvec(op: HTLRMatrix, u: np.ndarray) -> np.ndarray:
    """f = A u accumulated leaf by leaf in depth-first order."""
    return _hierarchical_matvec(op, u, tlr_apply)


def hmatrix_matvec(op: HMatrix, u: np.ndarray) -> np.ndarray:
    return _hierarchical_matvec(op, u, lowrank_apply)


def weak_storage_bound(d: int, rank: int, num_points: int) -> float:
    """Linear storage bound (16 d p^(2-d) + p^d + 2^d p^d) N for the Tucker
    hierarchy under weak admissibility."""
    p = float(rank)
    return (16.0 * d * p ** (2 - d) + p**d + 2**d * p**d) * num_points


def storage_report(op) -> StorageReport:
    """Exact stored-scalar counts by category plus the weak-admissibility
    theoretical bound for the operator's size."""
    dense = factors = cores = 0
    for block in op.payloads:
        if isinstance(block, DenseBlock):
            dense += block.matrix.size
        elif isinstance(block, LowRankBlock):
            factors += block.u.size + block.v.size
            cores += block.g.size
        else:
            factors += sum(f.size for f in block.u_factors if f is not None)
            factors += sum(f.size for f in block.v_factors if f is not None)
            cores += block.core.size
    total = dense + factors + cores
    bound = weak_storage_bound(op.grid.d, op.config.rank, op.num_points)
    return StorageReport(
        dense_scalars=dense,
        factor_scalars=factors,
        core_scalars=cores,
        total_scalars=total,
        theoretical_bound=bound,
    )


def operation_counts(op) -> dict:
    """Leaf visit counts for one matvec (dense and compressed leaves)."""
    dense = sum(
        1 for b in op.payloads if isinstance(b, DenseBlock)
    )
    return {
        "dense_leaves": dense,
        "compressed_leaves": len(op.payloads) - dense,
        "total_leaves": len(op.payloads),
    }


class DegenerateErrorEstimate(ValueError):
    """Raised when the sampled exact result has zero norm."""


def estimate_rel_error_random(
    op,
    exact_rows: Callable[[np.ndarray, np.ndarray], np.ndarray],
    u: np.ndarray,
    sample_size: int = 1000,
    seed: int = 0,
) -> float:
    """Relative l2 error of the fast matvec against exact row evaluations on
    a uniformly sampled (without replacement) row subset."""
    u = np.asarray(u, dtype=np.float64).ravel(order="F")
    n_rows = op.num_points
    if sample_size > n_rows:
        raise ValueError("sample size exceeds the number of rows")
    rng = np.random.default_rng(seed)
    rows = rng.choice(n_rows, size=sample_size, replace=False)
    if isinstance(op, HMatrix):
        approx = hmatrix_matvec(op, u)
    else:
        approx = matvec(op, u)
    exact = exact_rows(rows, u)
    denom = np.linalg.norm(exact)
    if denom == 0.0:
        raise DegenerateErrorEstimate("exact result has zero norm on the sample")
    return float(np.linalg.norm(approx[rows] - exact) / denom)
