"""Elementary transform factors and factor chains.

A chain represents a square operator 2**g * F_m ... F_1 where every F is
one of a handful of cheap building blocks:

* ``B``  -- 2x2 binary orthonormal block from a fixed 16-entry catalog
            (the first 8 are scaled by 2**-0.5, the rest are signed
            permutations);
* ``O``  -- the unnormalized +-1 variant of the first 8 B blocks
            (determinant +-2, applied with additions only);
* ``H4`` -- 4x4 orthonormal block with entries +-1/2, built from the
            two-level Hadamard matrix by row/column signed permutations;
* ``M``  -- a full pairing stage: n/2 disjoint unnormalized binary blocks
            covering every coordinate, with the 2**-0.5 normalizations of
            all stages pooled into the chain's global scale;
* ``SHEAR`` -- unit-diagonal with one off-diagonal coefficient;
* ``SCALE`` -- diagonal differing from identity in one entry.

Factors are applied to column data: factor list order is application
order (factors[0] hits the input first).  Operation counts are per input
column, i.e. the cost of one matrix-vector product, and depend only on
the chain structure.
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .counting import OpCount
from .errors import ContractError, DimensionError, SingularMatrixError
from .sopot import SopotValue

SQRT2 = math.sqrt(2.0)
INV_SQRT2 = 1.0 / math.sqrt(2.0)

_G1_SIGNS = (
    ((-1, 1), (1, 1)),
    ((1, 1), (-1, 1)),
    ((1, -1), (1, 1)),
    ((1, 1), (1, -1)),
    ((1, -1), (-1, -1)),
    ((-1, -1), (1, -1)),
    ((-1, 1), (-1, -1)),
    ((-1, -1), (-1, 1)),
)

_G2_BLOCKS = (
    ((0, 1), (-1, 0)),
    ((0, -1), (1, 0)),
    ((1, 0), (0, -1)),
    ((-1, 0), (0, 1)),
    ((0, -1), (-1, 0)),
    ((-1, 0), (0, -1)),
    ((0, 1), (1, 0)),
    ((1, 0), (0, 1)),
)


def _freeze(a):
    a.setflags(write=False)
    return a


@lru_cache(maxsize=1)
def catalog_b():
    """The 16 binary orthonormal 2x2 blocks, in canonical score order.

    Positions 1..8 carry the 2**-0.5 normalization (two additions and two
    multiplications per application); positions 9..16 are signed
    permutations and cost nothing.  Position 16 is the identity.
    """
    blocks = [_freeze(np.array(s, dtype=float) * INV_SQRT2) for s in _G1_SIGNS]
    blocks += [_freeze(np.array(s, dtype=float)) for s in _G2_BLOCKS]
    return tuple(blocks)


@lru_cache(maxsize=1)
def catalog_o():
    """The 8 unnormalized +-1 blocks (sqrt(2) times catalog positions 1..8)."""
    return tuple(_freeze(np.array(s, dtype=float)) for s in _G1_SIGNS)


@lru_cache(maxsize=1)
def catalog_hadamard4():
    """Orthonormal 4x4 blocks with entries +-1/2.

    Candidates are signed row permutations and signed column permutations of
    the two-level Hadamard matrix, enumerated in a fixed (side, signs,
    permutation) order and deduplicated by exact equality, so catalog indices
    are reproducible.
    """
    h2 = np.array([[1.0, 1.0], [1.0, -1.0]])
    h4 = 0.5 * np.kron(h2, h2)
    seen = {}
    for side in (0, 1):
        for signs in itertools.product((-1, 1), repeat=4):
            d = np.diag(np.array(signs, dtype=float))
            for perm in itertools.permutations(range(4)):
                p = np.zeros((4, 4))
                p[np.arange(4), perm] = 1.0
                cand = d @ p @ h4 if side == 0 else h4 @ p @ d
                key = tuple(np.rint(2.0 * cand).astype(int).ravel().tolist())
                if key not in seen:
                    seen[key] = _freeze(cand)
    return tuple(seen.values())


@dataclass(frozen=True)
class Factor:
    """One elementary transform.

    ``indices`` addresses the touched coordinates: a pair (i, j) with i < j
    for B/O/SHEAR, an increasing 4-tuple for H4, a single (i,) for SCALE and
    nothing for M (whose ``pairs`` carry (i, j, variant) triples forming a
    partition).  ``variant`` is the 1-based catalog position for B/O/H4.
    """

    kind: str
    indices: tuple = ()
    variant: int = 0
    coeff: object = None  # float or SopotValue (SHEAR), float (SCALE)
    side: str = ""  # "lower" (row j += c * row i) or "upper" for SHEAR
    pow2: bool = False  # SCALE only: coefficient is +-2**k
    pairs: tuple = ()  # M only

    def __post_init__(self):
        k = self.kind
        if k in ("B", "O", "SHEAR"):
            i, j = self.indices
            if not 0 <= i < j:
                raise ContractError(f"{k} factor needs indices 0 <= i < j")
        if k == "B" and not 1 <= self.variant <= 16:
            raise ContractError("B variant must be in 1..16")
        if k == "O" and not 1 <= self.variant <= 8:
            raise ContractError("O variant must be in 1..8")
        if k == "H4":
            idx = self.indices
            if len(idx) != 4 or any(a >= b for a, b in zip(idx, idx[1:])):
                raise ContractError("H4 factor needs a strictly increasing 4-tuple")
            if not 1 <= self.variant <= len(catalog_hadamard4()):
                raise ContractError("H4 variant out of catalog range")
        if k == "SHEAR":
            if self.side not in ("lower", "upper"):
                raise ContractError("shear side must be 'lower' or 'upper'")
            if not isinstance(self.coeff, (float, int, SopotValue)):
                raise ContractError("shear coefficient must be a real or SopotValue")
        if k == "SCALE":
            (i,) = self.indices
            a = float(self.coeff)
            if a == 0.0:
                raise ContractError("scaling coefficient must be nonzero")
            if self.pow2 and math.frexp(abs(a))[0] != 0.5:
                raise ContractError("pow2 scaling coefficient must be +-2**k")
        if k == "M":
            if not self.pairs:
                raise ContractError("M stage needs pairs")
            for i, j, t in self.pairs:
                if not (0 <= i < j and 1 <= t <= 8):
                    raise ContractError("M pair must have i < j and variant in 1..8")

    def coeff_value(self) -> float:
        if isinstance(self.coeff, SopotValue):
            return self.coeff.value
        return float(self.coeff)

    def max_index(self) -> int:
        if self.kind == "M":
            return max(max(i, j) for i, j, _ in self.pairs)
        return max(self.indices)


@dataclass(frozen=True)
class TransformChain:
    """Ordered factor list with a global power-of-two scale exponent.

    The realized operator is 2**scale_log2 times the product of the
    factors, rightmost (= first list entry) applied first.
    """

    n: int
    factors: tuple
    scale_log2: Fraction = Fraction(0)
    family: str = "S"

    def __post_init__(self):
        for f in self.factors:
            if f.max_index() >= self.n:
                raise ContractError(f"factor index out of range for n={self.n}")
        if self.family == "M":
            stages = [f for f in self.factors]
            if any(f.kind != "M" for f in stages):
                raise ContractError("M-family chains may contain only M stages")
            if self.scale_log2 != Fraction(-len(stages), 2):
                raise ContractError("M-family scale must be -(stage count)/2")
            for f in stages:
                used = sorted(k for i, j, _ in f.pairs for k in (i, j))
                if used != list(range(self.n)):
                    raise ContractError("M stage pairs must partition 0..n-1")

    def __len__(self):
        return len(self.factors)


def _apply_factor(f: Factor, w: np.ndarray, counter: OpCount, inverse: bool):
    """Update the working matrix in place over the touched rows."""
    k = f.kind
    if k == "B":
        blk = catalog_b()[f.variant - 1]
        if inverse:
            blk = blk.T
        i, j = f.indices
        w[[i, j], :] = blk @ w[[i, j], :]
        if counter is not None and f.variant <= 8:
            counter.add(additions=2, multiplications=2)
    elif k == "O":
        blk = catalog_o()[f.variant - 1]
        i, j = f.indices
        if inverse:
            # det is +-2, so the inverse is the transpose with both touched
            # rows halved (a local shift, not a global scale)
            w[[i, j], :] = (0.5 * blk.T) @ w[[i, j], :]
            if counter is not None:
                counter.add(additions=2, shifts=2)
        else:
            w[[i, j], :] = blk @ w[[i, j], :]
            if counter is not None:
                counter.add(additions=2)
    elif k == "H4":
        blk = catalog_hadamard4()[f.variant - 1]
        if inverse:
            blk = blk.T
        idx = list(f.indices)
        w[idx, :] = blk @ w[idx, :]
        if counter is not None:
            counter.add(additions=12, shifts=4)
    elif k == "M":
        cat = catalog_o()
        for i, j, t in f.pairs:
            blk = cat[t - 1]
            if inverse:
                blk = blk.T
            w[[i, j], :] = blk @ w[[i, j], :]
        if counter is not None:
            counter.add(additions=2 * len(f.pairs))
    elif k == "SHEAR":
        i, j = f.indices
        c = f.coeff_value()
        if inverse:
            c = -c
        src, dst = (i, j) if f.side == "lower" else (j, i)
        if c != 0.0:
            w[dst, :] += c * w[src, :]
        if counter is not None:
            if isinstance(f.coeff, SopotValue):
                p = f.coeff.num_terms
                counter.add(additions=p, shifts=p)
            else:
                counter.add(additions=1, multiplications=1)
    elif k == "SCALE":
        (i,) = f.indices
        a = f.coeff_value()
        if inverse:
            if a == 0.0:
                raise SingularMatrixError("cannot invert a zero scaling")
            a = 1.0 / a
        w[i, :] *= a
        if counter is not None:
            counter.add(shifts=1) if f.pow2 else counter.add(multiplications=1)
    else:
        raise ContractError(f"unknown factor kind {k!r}")


def _pooled_inverse_scale(chain: TransformChain) -> Fraction:
    # A pairing stage touches every coordinate once, so its inverse's
    # halving is a uniform scalar and pools with the inverted global scale.
    stages = sum(1 for f in chain.factors if f.kind == "M")
    return -chain.scale_log2 - stages


def _count_scale(scale: Fraction, n: int, counter: OpCount):
    if counter is None or scale == 0:
        return
    if scale.denominator == 1:
        counter.add(shifts=n)
    else:
        counter.add(multiplications=n)


def _scale_value(scale: Fraction) -> float:
    if scale.denominator == 1:
        return math.ldexp(1.0, int(scale))
    return 2.0 ** float(scale)


def apply(chain: TransformChain, v, counter: OpCount = None) -> np.ndarray:
    """Apply the chain to columns of ``v``; counts cost per column."""
    w = np.array(v, dtype=np.float64)
    squeeze = w.ndim == 1
    if squeeze:
        w = w[:, None]
    if w.shape[0] != chain.n:
        raise DimensionError(f"input has {w.shape[0]} rows, chain needs {chain.n}")
    for f in chain.factors:
        _apply_factor(f, w, counter, inverse=False)
    if chain.scale_log2 != 0:
        w *= _scale_value(chain.scale_log2)
    _count_scale(chain.scale_log2, chain.n, counter)
    return w[:, 0] if squeeze else w


def apply_inverse(chain: TransformChain, v, counter: OpCount = None) -> np.ndarray:
    """Apply the exact inverse: reversed factor inverses, then the scale.

    Orthonormal blocks invert by transposition, shears by coefficient
    negation, scalings by reciprocal, +-1 blocks by a halved transpose;
    pairing stages pool their halvings into one power-of-two scale.
    """
    w = np.array(v, dtype=np.float64)
    squeeze = w.ndim == 1
    if squeeze:
        w = w[:, None]
    if w.shape[0] != chain.n:
        raise DimensionError(f"input has {w.shape[0]} rows, chain needs {chain.n}")
    for f in reversed(chain.factors):
        _apply_factor(f, w, counter, inverse=True)
    inv_scale = _pooled_inverse_scale(chain)
    if inv_scale != 0:
        w *= _scale_value(inv_scale)
    _count_scale(inv_scale, chain.n, counter)
    return w[:, 0] if squeeze else w


def chain_op_count(chain: TransformChain) -> OpCount:
    """Cost of applying the chain to one column; structure-only."""
    c = OpCount()
    for f in chain.factors:
        if f.kind == "B":
            if f.variant <= 8:
                c.add(additions=2, multiplications=2)
        elif f.kind == "O":
            c.add(additions=2)
        elif f.kind == "H4":
            c.add(additions=12, shifts=4)
        elif f.kind == "M":
            c.add(additions=2 * len(f.pairs))
        elif f.kind == "SHEAR":
            if isinstance(f.coeff, SopotValue):
                p = f.coeff.num_terms
                c.add(additions=p, shifts=p)
            else:
                c.add(additions=1, multiplications=1)
        elif f.kind == "SCALE":
            c.add(shifts=1) if f.pow2 else c.add(multiplications=1)
    _count_scale(chain.scale_log2, chain.n, c)
    return c


def materialize(chain: TransformChain) -> np.ndarray:
    """Dense matrix of the chain (testing and serialization checks)."""
    return apply(chain, np.eye(chain.n))


def factor_matrix(f: Factor, n: int) -> np.ndarray:
    """Dense n x n embedding of a single factor."""
    return apply(TransformChain(n=n, factors=(f,), family="S"), np.eye(n))


@dataclass(frozen=True)
class LiftingTriple:
    """Three unit-diagonal factors reproducing a 2x2 rotation/reflection.

    For a rotation [[c, -s], [s, c]] the factors are upper(u), lower(s),
    upper(u) with u = (c - 1)/s.  For a reflection [[c, s], [s, -c]] the
    last factor folds a sign flip of the second row into the upper shear.
    """

    matrices: tuple  # three 2x2 arrays, applied right to left
    coefficients: tuple  # (u, s)
    reflection: bool

    def product(self) -> np.ndarray:
        a, b, c = self.matrices
        return a @ b @ c


def lifting_decompose(block) -> LiftingTriple:
    """Decompose a 2x2 orthonormal block into the three-shear scheme."""
    m = np.asarray(block, dtype=float)
    if m.shape != (2, 2):
        raise DimensionError("lifting_decompose needs a 2x2 block")
    if np.abs(m.T @ m - np.eye(2)).max() > 1e-10:
        raise ContractError("block must be orthonormal")
    s = m[1, 0]
    if s == 0.0:
        raise ContractError("block is multiplier-less (s = 0), lifting not required")
    c = m[0, 0]
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    reflection = det < 0
    expected = (
        np.array([[c, s], [s, -c]]) if reflection else np.array([[c, -s], [s, c]])
    )
    if np.abs(m - expected).max() > 1e-10:
        raise ContractError("block is not a rotation or reflection in standard form")
    u = (c - 1.0) / s
    upper = np.array([[1.0, u], [0.0, 1.0]])
    lower = np.array([[1.0, 0.0], [s, 1.0]])
    last = np.array([[1.0, -u], [0.0, -1.0]]) if reflection else upper
    return LiftingTriple(
        matrices=(upper, lower, last), coefficients=(u, s), reflection=reflection
    )


#: Encoding cost of one raw float64 coefficient, in bits.
RAW_COEFF_BITS = 64.0
#: Encoding cost of one signed power-of-two term (sign plus 8-bit exponent).
TERM_BITS = 9.0


def _coeff_bits(coeff) -> float:
    if isinstance(coeff, SopotValue):
        return TERM_BITS * coeff.num_terms
    return RAW_COEFF_BITS


def coding_cost(chain: TransformChain) -> float:
    """Approximate number of bits needed to store the chain."""
    n = chain.n
    log2n = math.log2(n) if n > 1 else 0.0
    bits = 0.0
    stages = 0
    for f in chain.factors:
        if f.kind == "B":
            bits += 4.0 + 2.0 * log2n
        elif f.kind == "O":
            bits += 3.0 + 2.0 * log2n
        elif f.kind == "H4":
            bits += math.log2(len(catalog_hadamard4())) + 4.0 * log2n
        elif f.kind == "M":
            stages += 1
        elif f.kind == "SHEAR":
            bits += 1.0 + _coeff_bits(f.coeff) + 2.0 * log2n
        elif f.kind == "SCALE":
            bits += (TERM_BITS if f.pow2 else RAW_COEFF_BITS) + log2n
    if stages:
        # cost of encoding one index partition per stage, via Stirling
        bits += stages / math.log(2.0) * (n * math.log(n) - n + 1.0)
    return bits
