"""Closed-form objective-change scores for every factor family.

All scores measure how inserting one factor changes the squared Frobenius
representation error, relative to a cached baseline built from the two Gram
matrices Z = Y X^T and W = X X^T.  Each family's closed form is checked
against dense evaluation in the test suite; the learners never materialize
a dense candidate.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DimensionError
from .factors import catalog_o
from .linalg import as_matrix, frobenius_sq

SQRT2 = math.sqrt(2.0)
C_PLUS = 2.0 + SQRT2
C_MINUS = 2.0 - SQRT2


@dataclass
class ScoreTables:
    """Cached cross/self Gram matrices for one (targets, codes) pair."""

    z: np.ndarray  # Y X^T
    w: np.ndarray  # X X^T
    trace_z: float
    norm_y_sq: float
    norm_x_sq: float
    baseline: float  # |Y - X|_F^2 expanded through the Grams

    @property
    def n(self) -> int:
        return self.z.shape[0]


def build_tables(y, x) -> ScoreTables:
    y = as_matrix(y)
    x = as_matrix(x)
    if y.shape != x.shape:
        raise DimensionError(f"shape mismatch: {y.shape} vs {x.shape}")
    z = y @ x.T
    w = x @ x.T
    trace_z = float(np.trace(z))
    ny = frobenius_sq(y)
    nx = frobenius_sq(x)
    return ScoreTables(
        z=z,
        w=w,
        trace_z=trace_z,
        norm_y_sq=ny,
        norm_x_sq=nx,
        baseline=ny + nx - 2.0 * trace_z,
    )


def _check_pair(i, j):
    if not i < j:
        raise ContractError(f"need i < j, got ({i}, {j})")


# ---------------------------------------------------------------------------
# binary orthonormal blocks


def b_scores_grid(z: np.ndarray, num_variants: int = 16) -> np.ndarray:
    """Scores of all catalog blocks at all pairs: array (variants, n, n).

    Entry [t-1, i, j] is valid for i < j; the diagonal and lower triangle
    are +inf so the array can be argmin-scanned directly.
    """
    n = z.shape[0]
    zd = np.diag(z)
    zii = np.broadcast_to(zd[:, None], (n, n))
    zjj = np.broadcast_to(zd[None, :], (n, n))
    zsd = zii + zjj
    zso = z + z.T
    zdo = z - z.T
    grids = [
        C_PLUS * zii + C_MINUS * zjj - SQRT2 * zso,
        C_MINUS * zsd - SQRT2 * zdo,
        C_MINUS * zsd + SQRT2 * zdo,
        C_MINUS * zii + C_PLUS * zjj - SQRT2 * zso,
        C_MINUS * zii + C_PLUS * zjj + SQRT2 * zso,
        C_PLUS * zsd + SQRT2 * zdo,
        C_PLUS * zsd - SQRT2 * zdo,
        C_PLUS * zii + C_MINUS * zjj + SQRT2 * zso,
        2.0 * (zsd - zdo),
        2.0 * (zsd + zdo),
        4.0 * zjj,
        4.0 * zii,
        2.0 * (zsd + zso),
        4.0 * zsd,
        2.0 * (zsd - zso),
        np.zeros((n, n)),
    ]
    out = np.stack(grids[:num_variants])
    mask = ~np.triu(np.ones((n, n), dtype=bool), k=1)
    out[:, mask] = np.inf
    return out


def b_scores(tables: ScoreTables, i: int, j: int) -> np.ndarray:
    """The 16 catalog-block scores at pair (i, j)."""
    _check_pair(i, j)
    z = tables.z
    zii, zjj, zij, zji = z[i, i], z[j, j], z[i, j], z[j, i]
    zsd, zso, zdo = zii + zjj, zij + zji, zij - zji
    return np.array(
        [
            C_PLUS * zii + C_MINUS * zjj - SQRT2 * zso,
            C_MINUS * zsd - SQRT2 * zdo,
            C_MINUS * zsd + SQRT2 * zdo,
            C_MINUS * zii + C_PLUS * zjj - SQRT2 * zso,
            C_MINUS * zii + C_PLUS * zjj + SQRT2 * zso,
            C_PLUS * zsd + SQRT2 * zdo,
            C_PLUS * zsd - SQRT2 * zdo,
            C_PLUS * zii + C_MINUS * zjj + SQRT2 * zso,
            2.0 * (zsd - zdo),
            2.0 * (zsd + zdo),
            4.0 * zjj,
            4.0 * zii,
            2.0 * (zsd + zso),
            4.0 * zsd,
            2.0 * (zsd - zso),
            0.0,
        ]
    )


def block_score(tables: ScoreTables, indices, block) -> float:
    """Objective change of one orthonormal block embedded at ``indices``.

    Generic form 2 tr(Zt) - 2 tr(B^T Zt) over the touched submatrix; agrees
    with the 2x2 catalog closed forms and covers the 4x4 blocks.
    """
    idx = tuple(indices)
    if any(a >= b for a, b in zip(idx, idx[1:])):
        raise ContractError("indices must be strictly increasing")
    b = np.asarray(block, dtype=float)
    k = len(idx)
    if b.shape != (k, k):
        raise DimensionError(f"block shape {b.shape} does not match {k} indices")
    if np.abs(b.T @ b - np.eye(k)).max() > 1e-10:
        raise ContractError("block must be orthonormal")
    zt = tables.z[np.ix_(idx, idx)]
    return float(2.0 * np.trace(zt) - 2.0 * np.trace(b.T @ zt))


# ---------------------------------------------------------------------------
# unnormalized +-1 blocks


def o_scores_grid(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Scores of the 8 unnormalized binary blocks at all pairs (8, n, n)."""
    n = z.shape[0]
    zd = np.diag(z)
    wd = np.diag(w)
    base = wd[:, None] + wd[None, :]
    out = np.empty((8, n, n))
    for t, blk in enumerate(catalog_o()):
        a, b = blk[0, 0], blk[0, 1]
        c, d = blk[1, 0], blk[1, 1]
        out[t] = (
            base
            - 2.0 * (a - 1.0) * zd[:, None]
            - 2.0 * (d - 1.0) * zd[None, :]
            - 2.0 * b * z
            - 2.0 * c * z.T
            + 2.0 * (a * b + c * d) * w
        )
    mask = ~np.triu(np.ones((n, n), dtype=bool), k=1)
    out[:, mask] = np.inf
    return out


def o_scores(tables: ScoreTables, i: int, j: int) -> np.ndarray:
    """Objective changes of the 8 unnormalized binary blocks at (i, j)."""
    _check_pair(i, j)
    z, w = tables.z, tables.w
    out = np.empty(8)
    for t, blk in enumerate(catalog_o()):
        a, b = blk[0, 0], blk[0, 1]
        c, d = blk[1, 0], blk[1, 1]
        out[t] = (
            w[i, i]
            + w[j, j]
            - 2.0 * (a - 1.0) * z[i, i]
            - 2.0 * (d - 1.0) * z[j, j]
            - 2.0 * b * z[i, j]
            - 2.0 * c * z[j, i]
            + 2.0 * (a * b + c * d) * w[i, j]
        )
    return out


def o_local_optimality(y, x):
    """Sufficient local-optimality certificate for the +-1 block family.

    Holds when every code row's norm dominates every other row's error
    norm; returns (True, None) or (False, first violating (i, j))."""
    y = as_matrix(y)
    x = as_matrix(x)
    if y.shape != x.shape:
        raise DimensionError("o_local_optimality needs same-shape inputs")
    err = np.linalg.norm(y - x, axis=1)
    xn = np.linalg.norm(x, axis=1)
    n = y.shape[0]
    for i in range(n):
        for j in range(n):
            if i != j and xn[j] - err[i] < 0.0:
                return False, (i, j)
    return True, None


# ---------------------------------------------------------------------------
# shears and scalings, initialization scores (identity surroundings)


def shear_init_scores(tables: ScoreTables, i: int, j: int):
    """Best single-shear improvements at (i, j): (D1, D2, b_opt, c_opt).

    D1/b_opt shear the lower side (row j += b * row i), D2/c_opt the upper.
    Rows with zero energy score 0 with coefficient 0."""
    _check_pair(i, j)
    z, w = tables.z, tables.w
    if w[i, i] > 0.0:
        b_opt = (z[j, i] - w[i, j]) / w[i, i]
        d1 = -((z[j, i] - w[i, j]) ** 2) / w[i, i]
    else:
        b_opt, d1 = 0.0, 0.0
    if w[j, j] > 0.0:
        c_opt = (z[i, j] - w[j, i]) / w[j, j]
        d2 = -((z[i, j] - w[j, i]) ** 2) / w[j, j]
    else:
        c_opt, d2 = 0.0, 0.0
    return d1, d2, b_opt, c_opt


def _round_half_away(x: float) -> int:
    return math.floor(x + 0.5) if x >= 0 else math.ceil(x - 0.5)


def project_pow2(a: float) -> float:
    """Signed power of two nearest to ``a`` in log scale (ties away from zero)."""
    if a == 0.0 or not math.isfinite(a):
        raise ContractError("cannot project zero or non-finite to a power of two")
    exp = _round_half_away(math.log2(abs(a)))
    return math.copysign(math.ldexp(1.0, exp), a)


def scaling_init_score(tables: ScoreTables, i: int, power_of_two: bool):
    """Best single-coordinate scaling at index i: (F, coefficient).

    The unconstrained least-squares coefficient is Z_ii / W_ii; with the
    power-of-two flag it is projected to the nearest signed power of two in
    log scale.  Returns (0, 1) for a degenerate (zero-energy) row."""
    z, w = tables.z, tables.w
    wii = w[i, i]
    if wii <= 0.0:
        return 0.0, 1.0
    a_star = z[i, i] / wii
    if a_star == 0.0:
        return 0.0, 1.0
    coeff = project_pow2(a_star) if power_of_two else a_star
    f = -2.0 * z[i, i] * (coeff - 1.0) + wii * (coeff * coeff - 1.0)
    return f, coeff


# ---------------------------------------------------------------------------
# shears and scalings, update scores (factor embedded inside a chain)


@dataclass
class SweepContext:
    """State for re-optimizing one factor while the others stay fixed.

    ``left`` is the dense product of the factors applied after the slot,
    ``codes`` the image of the codes through the factors applied before it,
    and ``residual`` the error with the slot treated as identity.  ``cross``
    caches left^T residual codes^T, whose (r, c) entry is the correlation
    of the residual with the rank-one direction (left column r, codes row c);
    every update score reads from it."""

    left: np.ndarray  # n x n
    codes: np.ndarray  # n x N
    residual: np.ndarray  # n x N, targets - left @ codes
    cross: np.ndarray  # n x n
    code_row_sq: np.ndarray  # squared row norms of codes
    left_col_sq: np.ndarray  # squared column norms of left

    @classmethod
    def build(cls, targets, left, codes) -> "SweepContext":
        targets = as_matrix(targets)
        left = as_matrix(left)
        codes = as_matrix(codes)
        residual = targets - left @ codes
        return cls(
            left=left,
            codes=codes,
            residual=residual,
            cross=left.T @ residual @ codes.T,
            code_row_sq=np.sum(codes * codes, axis=1),
            left_col_sq=np.sum(left * left, axis=0),
        )

    @property
    def residual_sq(self) -> float:
        return frobenius_sq(self.residual)

    def shear_update_scores(self, i: int, j: int):
        """(E1, E2, b_opt, c_opt) for re-optimizing a shear at (i, j)."""
        _check_pair(i, j)
        e1, b_opt = self._rank_one_gain(row=i, col=j)
        e2, c_opt = self._rank_one_gain(row=j, col=i)
        return e1, e2, b_opt, c_opt

    def _rank_one_gain(self, row, col):
        denom = self.code_row_sq[row] * self.left_col_sq[col]
        if denom <= 0.0:
            return 0.0, 0.0
        num = self.cross[col, row]
        return num * num / denom, num / denom

    def scaling_update_score(self, i: int, power_of_two: bool):
        """(G, coefficient) for re-optimizing a scaling at index i."""
        denom = self.code_row_sq[i] * self.left_col_sq[i]
        if denom <= 0.0:
            return 0.0, 1.0
        num = self.cross[i, i]
        a_star = num / denom + 1.0
        if a_star == 0.0:
            return 0.0, 1.0
        if power_of_two:
            coeff = project_pow2(a_star)
            g = 2.0 * (coeff - 1.0) * num - (coeff - 1.0) ** 2 * denom
            return g, coeff
        return num * num / denom, a_star
