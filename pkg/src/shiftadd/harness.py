"""Baselines, metrics and the completeness decomposition.

Holds the orthonormal cosine-basis reference dictionary with its nominal
operation counts, the relative representation error, the penalized cost
model, and Gaussian elimination of an arbitrary invertible matrix into
shear/scaling/permutation factors.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .coding import SparseCode
from .counting import OpCount
from .errors import ContractError, DimensionError, SingularMatrixError
from .factors import Factor, TransformChain, apply
from .linalg import as_matrix, frobenius_sq

#: catalog position of the plain coordinate swap [[0, 1], [1, 0]]
SWAP_VARIANT = 15


@dataclass
class CostModel:
    """Penalized operation cost: additions and shifts at unit price,
    multiplications at ``gamma``."""

    gamma: float = 6.0

    def __post_init__(self):
        if self.gamma < 0:
            raise ContractError("gamma must be non-negative")


def weighted_cost(ops: OpCount, model: CostModel = None) -> float:
    model = model or CostModel()
    return ops.additions + ops.shifts + model.gamma * ops.multiplications


def dct_dictionary(n: int) -> np.ndarray:
    """Orthonormal type-II cosine basis; row k samples frequency k."""
    if n < 2:
        raise ContractError("need n >= 2")
    k = np.arange(n)[:, None]
    l = np.arange(n)[None, :]
    mat = np.cos(np.pi * (2 * l + 1) * k / (2.0 * n))
    mat[0, :] *= math.sqrt(1.0 / n)
    mat[1:, :] *= math.sqrt(2.0 / n)
    return mat


def dct_nominal_ops(n: int) -> OpCount:
    """Classical fast-transform budget: 2 n log2 n total, 3:1 adds to mults."""
    log2n = math.log2(n)
    return OpCount(
        additions=int(round(1.5 * n * log2n)),
        multiplications=int(round(0.5 * n * log2n)),
        shifts=0,
    )


def evaluate(y, dictionary, code) -> float:
    """Relative representation error in percent."""
    y = as_matrix(y)
    norm_y = frobenius_sq(y)
    if norm_y == 0.0:
        raise ContractError("dataset has zero energy")
    x = code.x if isinstance(code, SparseCode) else as_matrix(code)
    if isinstance(dictionary, TransformChain):
        recon = apply(dictionary, x)
    else:
        recon = as_matrix(dictionary) @ x
    return 100.0 * frobenius_sq(y - recon) / norm_y


def decompose_dense(s) -> TransformChain:
    """Factor an invertible matrix into shears, scalings and swaps.

    Gaussian elimination with partial pivoting reduces the matrix to a
    diagonal using at most n^2 - n shears (plus explicit swap blocks);
    the diagonal becomes n scalings.  The returned chain materializes back
    to the input up to elimination roundoff."""
    a = as_matrix(s).copy()
    n = a.shape[0]
    if a.shape[1] != n:
        raise DimensionError("decompose_dense needs a square matrix")
    scale = np.abs(a).max()
    if scale == 0.0:
        raise SingularMatrixError("zero matrix")
    tol = 1e-12 * scale * n

    ops = []  # row operations applied to a, in application order

    for c in range(n):
        pivot_row = c + int(np.argmax(np.abs(a[c:, c])))
        if abs(a[pivot_row, c]) <= tol:
            raise SingularMatrixError(f"pivot {c} below tolerance")
        if pivot_row != c:
            swap = Factor("B", (c, pivot_row), SWAP_VARIANT)
            a[[c, pivot_row], :] = a[[pivot_row, c], :]
            ops.append(swap)
        for r in range(c + 1, n):
            if a[r, c] == 0.0:
                continue
            mult = a[r, c] / a[c, c]
            a[r, :] -= mult * a[c, :]
            a[r, c] = 0.0
            ops.append(Factor("SHEAR", (c, r), coeff=-mult, side="lower"))
    for c in range(n - 1, 0, -1):
        for r in range(c - 1, -1, -1):
            if a[r, c] == 0.0:
                continue
            mult = a[r, c] / a[c, c]
            a[r, :] -= mult * a[c, :]
            a[r, c] = 0.0
            ops.append(Factor("SHEAR", (r, c), coeff=-mult, side="upper"))

    factors = []
    for i in range(n):
        d = a[i, i]
        if d != 1.0:
            pow2 = math.frexp(abs(d))[0] == 0.5
            factors.append(Factor("SCALE", (i,), coeff=float(d), pow2=pow2))
    # the chain is op_1^-1 ... op_K^-1 D: diagonal first, then the inverses
    # of the elimination steps in reverse
    for f in reversed(ops):
        if f.kind == "SHEAR":
            factors.append(
                Factor("SHEAR", f.indices, coeff=-float(f.coeff), side=f.side)
            )
        else:
            factors.append(f)  # a swap is its own inverse
    return TransformChain(n=n, factors=tuple(factors), scale_log2=Fraction(0), family="S")
