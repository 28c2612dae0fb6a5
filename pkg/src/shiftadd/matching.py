"""Index pairing for full pairing stages.

Exact maximum-weight perfect matching on the complete graph over the
coordinates, plus the cheap greedy alternative.  Small instances run
through an exact bitmask dynamic program with lexicographic tie-breaking;
larger ones go through the blossom implementation in networkx (which is
deterministic for a deterministically built graph).
"""

from dataclasses import dataclass
from functools import lru_cache

import networkx as nx
import numpy as np

from .errors import ContractError, DimensionError

#: largest n handled by the exact bitmask dynamic program
_DP_LIMIT = 16


@dataclass
class PairWeights:
    """Symmetric pairing benefits plus the best block variant per pair."""

    n: int
    w: np.ndarray  # n x n symmetric, diagonal unused
    tag: np.ndarray = None  # n x n int, best variant per pair (optional)

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.shape != (self.n, self.n):
            raise DimensionError("weight array must be n x n")
        if not np.allclose(self.w, self.w.T, atol=1e-12 * (1 + np.abs(self.w).max())):
            raise ContractError("weights must be symmetric")

    @classmethod
    def from_variant_scores(cls, score_grid: np.ndarray) -> "PairWeights":
        """Build pairing benefits from a (variants, n, n) objective-change grid.

        The benefit of a pair is the achievable objective decrease
        -min_t score[t]; pairs where every variant worsens the objective
        are clamped to zero benefit but keep their least-harmful variant.
        """
        n = score_grid.shape[1]
        best = score_grid.min(axis=0)
        tag = score_grid.argmin(axis=0) + 1
        w = np.where(np.isfinite(best), np.maximum(0.0, -best), 0.0)
        w = np.triu(w, k=1)
        w = w + w.T
        tag = np.where(np.isfinite(best), tag, 0)
        tag = np.triu(tag, k=1)
        tag = tag + tag.T
        return cls(n=n, w=w, tag=tag)


def _check_even(n):
    if n < 2 or n % 2:
        raise ContractError(f"perfect matching needs an even n >= 2, got {n}")


def _dp_matching(w: np.ndarray):
    """Exact DP over subsets; returns the lexicographically smallest optimum."""
    n = w.shape[0]
    full = (1 << n) - 1

    @lru_cache(maxsize=None)
    def best(mask):
        if mask == 0:
            return 0.0
        i = (mask & -mask).bit_length() - 1
        rest = mask ^ (1 << i)
        out = -np.inf
        j = rest
        while j:
            k = (j & -j).bit_length() - 1
            j ^= 1 << k
            cand = w[i, k] + best(rest ^ (1 << k))
            if cand > out:
                out = cand
        return out

    pairs = []
    mask = full
    while mask:
        i = (mask & -mask).bit_length() - 1
        rest = mask ^ (1 << i)
        target = best(mask)
        j = rest
        chosen = None
        while j:
            k = (j & -j).bit_length() - 1
            j ^= 1 << k
            if w[i, k] + best(rest ^ (1 << k)) == target:
                chosen = k
                break  # ascending k scan gives the lexicographically smallest list
        pairs.append((i, chosen))
        mask = rest ^ (1 << chosen)
    best.cache_clear()
    return pairs


def _blossom_matching(w: np.ndarray):
    n = w.shape[0]
    g = nx.Graph()
    g.add_nodes_from(range(n))
    for i in range(n - 1):
        for j in range(i + 1, n):
            g.add_edge(i, j, weight=w[i, j])
    mate = nx.max_weight_matching(g, maxcardinality=True)
    return sorted(tuple(sorted(p)) for p in mate)


def exact_matching(weights: PairWeights):
    """Perfect matching maximizing the total benefit.

    Returns n/2 pairs (i, j) with i < j, sorted by i.  Ties between optimal
    matchings are broken toward the lexicographically smallest pair list on
    instances small enough for the exact dynamic program.
    """
    _check_even(weights.n)
    if weights.n <= _DP_LIMIT:
        pairs = _dp_matching(weights.w)
    else:
        pairs = _blossom_matching(weights.w)
    return sorted(tuple(sorted(p)) for p in pairs)


def greedy_matching(weights: PairWeights):
    """Repeatedly take the best still-available pair; cheap but sub-optimal."""
    _check_even(weights.n)
    n = weights.n
    used = np.zeros(n, dtype=bool)
    pairs = []
    for _ in range(n // 2):
        best_val = -np.inf
        best_pair = None
        for i in range(n - 1):
            if used[i]:
                continue
            for j in range(i + 1, n):
                if used[j]:
                    continue
                if weights.w[i, j] > best_val:
                    best_val = weights.w[i, j]
                    best_pair = (i, j)
        i, j = best_pair
        used[i] = used[j] = True
        pairs.append((i, j))
    return sorted(pairs)


def total_weight(weights: PairWeights, pairs) -> float:
    return float(sum(weights.w[i, j] for i, j in pairs))
