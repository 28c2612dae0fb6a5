"""Sparse representation builders.

Hard thresholding is the exact per-column coder for orthonormal
dictionaries; orthogonal matching pursuit handles general ones, working
from precomputed Gram products so the per-column work stays small.
"""

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import ContractError, DimensionError
from .linalg import as_matrix


@dataclass
class SparseCode:
    """Coefficient matrix with at most ``s`` nonzeros per column."""

    x: np.ndarray
    s: int

    def __post_init__(self):
        nnz = np.count_nonzero(self.x, axis=0)
        if nnz.size and nnz.max() > self.s:
            raise ContractError(
                f"column with {int(nnz.max())} nonzeros exceeds budget {self.s}"
            )


def hard_threshold(m, s: int) -> SparseCode:
    """Keep the s largest-magnitude entries of every column.

    Magnitude ties keep the smaller row index."""
    m = as_matrix(m)
    n = m.shape[0]
    if not 1 <= s <= n:
        raise ContractError(f"sparsity must be in 1..{n}, got {s}")
    if s == n:
        return SparseCode(x=m.copy(), s=s)
    # stable sort: equal magnitudes keep ascending row order
    order = np.argsort(-np.abs(m), axis=0, kind="stable")
    keep = order[:s, :]
    out = np.zeros_like(m)
    cols = np.broadcast_to(np.arange(m.shape[1]), keep.shape)
    out[keep, cols] = m[keep, cols]
    return SparseCode(x=out, s=s)


def omp(y, d, s: int) -> SparseCode:
    """Orthogonal matching pursuit against a unit-column dictionary.

    Greedy per column: take the atom with the largest absolute residual
    correlation, refit by least squares on the selected set, repeat up to s
    times; a rank-deficient selection stops that column early."""
    y = as_matrix(y)
    d = as_matrix(d)
    if d.shape[0] != y.shape[0]:
        raise DimensionError("dictionary and data row counts differ")
    k = d.shape[1]
    if not 1 <= s <= k:
        raise ContractError(f"sparsity must be in 1..{k}, got {s}")
    norms = np.linalg.norm(d, axis=0)
    if np.abs(norms - 1.0).max() > 1e-8:
        raise ContractError("dictionary columns must be unit norm")
    gram = np.ascontiguousarray(d.T @ d)
    corr0 = np.ascontiguousarray(d.T @ y)
    x = backend.omp_batch(gram, corr0, int(s))
    return SparseCode(x=x, s=s)


def normalize_columns(m):
    """Column-normalize a matrix; returns (normalized, scale vector).

    The scale vector holds the reciprocal column norms, so codes computed
    against the normalized matrix are mapped back by row-scaling with it."""
    m = as_matrix(m)
    norms = np.linalg.norm(m, axis=0)
    if np.any(norms == 0.0):
        raise ContractError("cannot normalize a zero column")
    scales = 1.0 / norms
    return m * scales[None, :], scales
