"""Chebyshev nodes, Lagrange bases, and kernel interpolation data.

Provides the one-dimensional building blocks (nodes, basis evaluation,
factor matrices) used to assemble Tucker-form interpolants of kernel
interaction blocks, plus two diagnostics: a sampled Lebesgue constant and
the a-priori error bound for asymptotically smooth kernels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ChebGrid1D:
    """Chebyshev nodes of the first kind mapped to [lo, hi], stored in the
    naturally decreasing order xi_t = (hi-lo)/2 * cos((2t-1)pi/(2p)) + mid."""

    lo: float
    hi: float
    nodes: np.ndarray

    @property
    def order(self) -> int:
        return len(self.nodes)


def cheb_points(lo: float, hi: float, order: int) -> ChebGrid1D:
    if not lo < hi:
        raise ValueError("interval must satisfy lo < hi")
    if order < 1:
        raise ValueError("order must be >= 1")
    t = np.arange(1, order + 1)
    nodes = 0.5 * (hi - lo) * np.cos((2 * t - 1) * np.pi / (2 * order)) + 0.5 * (hi + lo)
    return ChebGrid1D(lo=lo, hi=hi, nodes=nodes)


def lagrange_eval(grid: ChebGrid1D, t: int, x: float) -> float:
    """Value of the t-th (1-based) Lagrange basis function at x."""
    if not 1 <= t <= grid.order:
        raise ValueError("node index out of range")
    if not grid.lo <= x <= grid.hi:
        raise ValueError("evaluation point outside the interval")
    xi = grid.nodes
    others = np.delete(np.arange(grid.order), t - 1)
    return float(np.prod((x - xi[others]) / (xi[t - 1] - xi[others])))


def factor_matrix(points: Sequence[float], grid: ChebGrid1D) -> np.ndarray:
    """Interpolation factor: entry (i, t) is the t-th Lagrange basis of the
    grid evaluated at the i-th point."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.size and (pts.min() < grid.lo or pts.max() > grid.hi):
        raise ValueError("interpolation points must lie inside the interval")
    xi = grid.nodes
    p = grid.order
    out = np.empty((pts.size, p))
    for t in range(p):
        others = np.delete(np.arange(p), t)
        out[:, t] = np.prod(
            (pts[:, None] - xi[None, others]) / (xi[t] - xi[others]), axis=1
        )
    return out


def core_tensor(kernel, grids_tau: Sequence[ChebGrid1D], grids_sigma: Sequence[ChebGrid1D]) -> np.ndarray:
    """Kernel values at all pairs of tensor-product Chebyshev nodes of the two
    boxes, as an order-2d tensor (target modes first, source modes last)."""
    from .kernels import pairwise  # local import to avoid a cycle

    d = len(grids_tau)
    if len(grids_sigma) != d:
        raise ValueError("box dimensions differ")
    x_axes = [g.nodes for g in grids_tau]
    y_axes = [g.nodes for g in grids_sigma]
    x_mesh = np.meshgrid(*x_axes, indexing="ij")
    y_mesh = np.meshgrid(*y_axes, indexing="ij")
    xpts = np.stack([m.ravel(order="F") for m in x_mesh], axis=-1)
    ypts = np.stack([m.ravel(order="F") for m in y_mesh], axis=-1)
    values = pairwise(kernel, xpts, ypts)
    shape = tuple(g.order for g in grids_tau) + tuple(g.order for g in grids_sigma)
    return values.ravel(order="F").reshape(shape, order="F")


def lebesgue_constant(order: int, samples: int = 20001) -> float:
    """Sampled Lebesgue constant: max over [-1,1] of the summed absolute
    Lagrange basis values."""
    if order < 1:
        raise ValueError("order must be >= 1")
    grid = cheb_points(-1.0, 1.0, order)
    xs = np.linspace(-1.0, 1.0, samples)
    total = np.abs(factor_matrix(xs, grid)).sum(axis=1)
    return float(total.max())


@dataclass(frozen=True)
class BoundParams:
    """Inputs of the interpolation error bound for asymptotically smooth
    kernels.  `eta` is the separation ratio dist/diam of the box pair;
    `c_as` and `gamma` are the kernel's smoothness constants."""

    c_as: float
    gamma: float
    eta: float
    p: int
    d: int
    lambda_p: float

    def __post_init__(self):
        for name in ("c_as", "gamma", "eta", "lambda_p"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.p < 1 or self.d < 1:
            raise ValueError("p and d must be positive")


def asymptotic_error_bound(b: BoundParams) -> float:
    """Relative sup-norm bound on the tensor Chebyshev interpolation error of
    an asymptotically smooth kernel over a well-separated box pair."""
    return (
        4.0
        * b.c_as
        * b.gamma ** (b.p + 1)
        * b.lambda_p ** (2 * b.d - 1)
        * b.d
        / (4.0 * b.eta) ** (b.p + 1)
    )
