"""Dense tensor arithmetic: mode products, contractions, reshapes and QR.

Tensors and matrices are plain ``numpy.ndarray`` objects with 64-bit float
entries.  All vector/tensor reshaping in this package uses the fixed
linearization in which the FIRST index varies fastest (column-major), so a
multi-index (i1, ..., id) of a shape-(n1, ..., nd) tensor sits at linear
position i1 + i2*n1 + i3*n1*n2 + ...  Modes are 1-based throughout, matching
the usual tensor-algebra convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class QRResult:
    """Thin QR factorization: ``q`` has orthonormal columns, ``r`` is upper
    triangular, and ``q @ r`` reconstructs the input."""

    q: np.ndarray
    r: np.ndarray


def _as_array(t) -> np.ndarray:
    a = np.asarray(t, dtype=np.float64)
    if a.ndim < 1:
        raise ValueError("tensor must have order >= 1")
    return a


def mode_product(t: np.ndarray, m: np.ndarray, mode: int) -> np.ndarray:
    """Contract dimension `mode` (1-based) of tensor `t` with the columns of
    matrix `m`; the result has the extent at `mode` replaced by m's row count.
    """
    t = _as_array(t)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("mode_product factor must be a matrix")
    if not 1 <= mode <= t.ndim:
        raise ValueError(f"mode {mode} out of range for order-{t.ndim} tensor")
    if m.shape[1] != t.shape[mode - 1]:
        raise ValueError(
            f"factor has {m.shape[1]} columns but tensor extent at mode "
            f"{mode} is {t.shape[mode - 1]}"
        )
    out = np.tensordot(m, t, axes=([1], [mode - 1]))
    # tensordot puts the new axis first; move it back into place
    return np.moveaxis(out, 0, mode - 1)


def contract(
    a: np.ndarray,
    b: np.ndarray,
    dims_a: Sequence[int],
    dims_b: Sequence[int],
) -> np.ndarray:
    """Contract tensors `a` and `b` over the given 1-based dimension lists.

    The result carries the free dimensions of `a` (in order) followed by the
    free dimensions of `b` (in order).
    """
    a = _as_array(a)
    b = _as_array(b)
    dims_a = list(dims_a)
    dims_b = list(dims_b)
    if len(dims_a) != len(dims_b):
        raise ValueError("dimension lists must have equal length")
    for dims, t, name in ((dims_a, a, "a"), (dims_b, b, "b")):
        if len(set(dims)) != len(dims):
            raise ValueError(f"duplicate dimensions for tensor {name}")
        for d in dims:
            if not 1 <= d <= t.ndim:
                raise ValueError(f"dimension {d} out of range for tensor {name}")
    for da, db in zip(dims_a, dims_b):
        if a.shape[da - 1] != b.shape[db - 1]:
            raise ValueError(
                f"extent mismatch: a dim {da} has {a.shape[da - 1]}, "
                f"b dim {db} has {b.shape[db - 1]}"
            )
    axes_a = [d - 1 for d in dims_a]
    axes_b = [d - 1 for d in dims_b]
    return np.tensordot(a, b, axes=(axes_a, axes_b))


def reshape(t: np.ndarray, new_shape: Sequence[int]) -> np.ndarray:
    """Reshape preserving the first-index-fastest linearization (metadata
    change only for the fixed data order)."""
    t = _as_array(t)
    new_shape = tuple(int(s) for s in new_shape)
    if int(np.prod(new_shape)) != t.size:
        raise ValueError(f"cannot reshape size-{t.size} tensor to {new_shape}")
    return np.reshape(t, new_shape, order="F")


def vec_to_tensor(v: np.ndarray, shape: Sequence[int]) -> np.ndarray:
    return reshape(np.asarray(v, dtype=np.float64).ravel(order="F"), shape)


def tensor_to_vec(t: np.ndarray) -> np.ndarray:
    return _as_array(t).ravel(order="F")


def qr(m: np.ndarray) -> QRResult:
    """Thin Householder QR of a tall matrix (rows >= cols)."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("qr expects a matrix")
    if m.shape[0] < m.shape[1]:
        raise ValueError(f"qr requires rows >= cols, got shape {m.shape}")
    q, r = np.linalg.qr(m, mode="reduced")
    return QRResult(q=q, r=r)


def multi_mode_apply(
    t: np.ndarray, factors: Sequence[tuple[np.ndarray, int]]
) -> np.ndarray:
    """Apply several mode products in sequence; modes must be distinct.

    Equivalent to the action of the Kronecker product of the factors on the
    linearized tensor.
    """
    modes = [mode for _, mode in factors]
    if len(set(modes)) != len(modes):
        raise ValueError("multi_mode_apply requires distinct modes")
    out = _as_array(t)
    for m, mode in factors:
        out = mode_product(out, m, mode)
    return out
