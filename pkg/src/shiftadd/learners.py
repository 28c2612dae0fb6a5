"""Training procedures for every factor family.

All learners share the same skeleton: warm-start the codes from the
eigenbasis of the data's second-moment matrix, then greedily place or
re-optimize factors using the closed-form scores, re-coding between
sweeps.  Objective traces record every factor commit and every re-coding
step; reports carry the cost and coding size of the returned chain.
"""

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import backend
from .coding import SparseCode, hard_threshold, normalize_columns, omp
from .counting import OpCount
from .errors import ContractError
from .factors import (
    Factor,
    TransformChain,
    _apply_factor,
    apply,
    apply_inverse,
    catalog_b,
    catalog_hadamard4,
    catalog_o,
    chain_op_count,
    coding_cost,
    materialize,
)
from .linalg import as_matrix, frobenius_sq, left_singular_basis
from .matching import PairWeights, exact_matching, greedy_matching
from .scoring import (
    SweepContext,
    b_scores_grid,
    o_local_optimality,
    o_scores_grid,
    project_pow2,
)
from .sopot import INFINITE_PRECISION, quantize


@dataclass
class LearnConfig:
    """Shared learner options.

    ``m`` budgets individual factors, ``q`` budgets full pairing stages.
    ``p`` is the coefficient precision (term count) for the general
    learner, or the infinite-precision sentinel to keep raw floats;
    scalings snap to signed powers of two exactly when ``p`` is finite.
    """

    s: int
    m: int = 1
    q: int = 1
    p: float = INFINITE_PRECISION
    k_iters: int = None  # per-algorithm default when None
    matcher: str = "exact"
    kron_sample: int = 20000
    seed: int = 0

    @property
    def power_of_two_scalings(self) -> bool:
        return self.p != INFINITE_PRECISION


@dataclass
class TrainReport:
    objective_trace: list
    epsilon_trace: list
    best_objective: float
    op_count: OpCount
    coding_bits: float
    notes: dict = field(default_factory=dict)


def _data_matrix(data) -> np.ndarray:
    return as_matrix(getattr(data, "y", data))


def _initial_code(y: np.ndarray, s: int) -> SparseCode:
    if y.shape[1] < y.shape[0]:
        raise ContractError(
            "need at least as many samples as dimensions "
            f"({y.shape[1]} < {y.shape[0]})"
        )
    u = left_singular_basis(y)
    return hard_threshold(u.T @ y, s)


def _epsilon(obj: float, norm_y_sq: float) -> float:
    if norm_y_sq <= 0.0:
        raise ContractError("dataset has zero energy")
    return 100.0 * obj / norm_y_sq


def _check_precision(p):
    if p == INFINITE_PRECISION:
        return
    if int(p) != p or p < 1:
        raise ContractError(f"precision must be a positive integer or inf, got {p}")


def _finish(chain, code, trace, eps_trace, best_obj, notes=None):
    return TrainReport(
        objective_trace=trace,
        epsilon_trace=eps_trace,
        best_objective=best_obj,
        op_count=chain_op_count(chain),
        coding_bits=coding_cost(chain),
        notes=notes or {},
    )


# ---------------------------------------------------------------------------
# orthonormal chains of 2x2 catalog blocks


def learn_b(data, cfg: LearnConfig):
    """Coordinate-descent training of a chain of binary orthonormal blocks.

    All factor slots start as the identity variant and are revisited for a
    fixed number of outer iterations; every slot update is an exact argmin
    over pairs and catalog variants (the identity variant stays available,
    so a slot can revert to a no-op), and every re-coding is the exact
    thresholding minimizer, hence the objective never increases."""
    y = _data_matrix(data)
    n = y.shape[0]
    if cfg.m < 1:
        raise ContractError("factor budget must be >= 1")
    m = cfg.m
    k_iters = cfg.k_iters if cfg.k_iters is not None else 10
    cat = catalog_b()
    code = _initial_code(y, cfg.s)
    x = code.x
    norm_y = frobenius_sq(y)
    norm_x = frobenius_sq(x)
    factors = [Factor("B", (0, 1), 16)] * m
    trace = [frobenius_sq(y - x)]
    eps_trace = []

    for _ in range(k_iters):
        # y_cur = (product of factors after slot k)^T applied to y, built for
        # k = 0; x_cur = factors before slot k applied to x; z = y_cur x_cur^T
        y_cur = y.copy()
        for f in factors[:0:-1]:
            i, j = f.indices
            y_cur[[i, j], :] = cat[f.variant - 1].T @ y_cur[[i, j], :]
        x_cur = x.copy()
        z = y_cur @ x_cur.T
        for k in range(m):
            grid = b_scores_grid(z)
            t, i, j = np.unravel_index(int(np.argmin(grid)), grid.shape)
            best = float(grid[t, i, j])
            factors[k] = Factor("B", (int(i), int(j)), int(t) + 1)
            trace.append(norm_y + norm_x - 2.0 * float(np.trace(z)) + best)
            blk = cat[int(t)]
            x_cur[[i, j], :] = blk @ x_cur[[i, j], :]
            z[:, [i, j]] = z[:, [i, j]] @ blk.T
            if k + 1 < m:
                nxt = factors[k + 1]
                a, b = nxt.indices
                blk_n = cat[nxt.variant - 1]
                y_cur[[a, b], :] = blk_n @ y_cur[[a, b], :]
                z[[a, b], :] = blk_n @ z[[a, b], :]
        chain = TransformChain(n, tuple(factors), Fraction(0), "B")
        coded = apply_inverse(chain, y)
        code = hard_threshold(coded, cfg.s)
        x = code.x
        norm_x = frobenius_sq(x)
        obj = frobenius_sq(coded) - norm_x
        trace.append(obj)
        eps_trace.append(_epsilon(obj, norm_y))

    chain = TransformChain(n, tuple(factors), Fraction(0), "B")
    report = _finish(chain, code, trace, eps_trace, min(trace))
    return chain, code, report


def learn_m(data, cfg: LearnConfig):
    """Single-pass training of full pairing stages.

    Each stage scores all pairs over the 8 normalized block variants and
    commits a perfect pairing of the coordinates chosen by the configured
    matcher; the per-stage normalizations pool into one global scale.
    Because every coordinate must be paired even when no variant helps it,
    a stage can regress; the best (chain, codes) state seen is returned."""
    y = _data_matrix(data)
    n = y.shape[0]
    if n % 2:
        raise ContractError("pairing stages need an even dimension")
    if cfg.q < 0:
        raise ContractError("stage budget must be >= 0")
    if cfg.matcher not in ("exact", "greedy"):
        raise ContractError(f"unknown matcher {cfg.matcher!r}")
    match = exact_matching if cfg.matcher == "exact" else greedy_matching
    q = cfg.q
    code = _initial_code(y, cfg.s)
    x = code.x
    norm_y = frobenius_sq(y)
    x_part = x.copy()  # unnormalized stage product applied to x
    stages = []
    obj = frobenius_sq(y - x)
    trace = [obj]
    cat_o = catalog_o()
    best_obj, best_count, best_code = obj, 0, code

    for ell in range(1, q + 1):
        z = 2.0 ** (-(ell - 1) / 2.0) * (y @ x_part.T)
        grid = b_scores_grid(z, 8)
        weights = PairWeights.from_variant_scores(grid)
        pairs = match(weights)
        stage_pairs = tuple(
            sorted((i, j, int(weights.tag[i, j])) for i, j in pairs)
        )
        stages.append(Factor("M", pairs=stage_pairs))
        for i, j, t in stage_pairs:
            x_part[[i, j], :] = cat_o[t - 1] @ x_part[[i, j], :]
        obj = frobenius_sq(y - 2.0 ** (-ell / 2.0) * x_part)
        trace.append(obj)
        if obj < best_obj:
            best_obj, best_count, best_code = obj, ell, code

    chain = TransformChain(n, tuple(stages), Fraction(-q, 2), "M")
    coded = apply_inverse(chain, y)
    final_code = hard_threshold(coded, cfg.s)
    obj = frobenius_sq(coded) - frobenius_sq(final_code.x)
    trace.append(obj)
    if obj <= best_obj:
        best_obj, best_count, best_code = obj, q, final_code
    best_chain = TransformChain(
        n, tuple(stages[:best_count]), Fraction(-best_count, 2), "M"
    )
    eps_trace = [_epsilon(best_obj, norm_y)]
    report = _finish(best_chain, best_code, trace, eps_trace, best_obj)
    return best_chain, best_code, report


def _sample_tuples(rng, n, count, touched):
    """Random increasing 4-tuples plus every tuple touching ``touched``."""
    draws = np.argsort(rng.random((count, n)), axis=1)[:, :4]
    draws = np.sort(draws, axis=1)
    parts = [draws]
    if touched:
        others = [v for v in range(n) if v not in touched]
        for k in range(1, 5):
            for inside in itertools.combinations(touched, k):
                rest = itertools.combinations(others, 4 - k)
                block = np.array(
                    [sorted(inside + r) for r in rest], dtype=np.int64
                ).reshape(-1, 4)
                parts.append(block)
    stacked = np.concatenate(parts, axis=0).astype(np.int64)
    return np.unique(stacked, axis=0)


def learn_b_kron(data, cfg: LearnConfig):
    """Greedy appending of 4x4 Hadamard-derived blocks, one pass.

    Every append takes the global argmin of the generic block score over
    candidate 4-tuples and the block catalog.  Tuples are enumerated
    exhaustively for small dimensions; above that, each append scans a
    seeded random sample plus all tuples touching the previous commit.
    The catalog has no identity, so appends past the useful budget can
    regress; the best (chain, codes) state seen is returned."""
    y = _data_matrix(data)
    n = y.shape[0]
    if n < 4:
        raise ContractError("4x4 blocks need dimension >= 4")
    if cfg.m < 1:
        raise ContractError("factor budget must be >= 1")
    code = _initial_code(y, cfg.s)
    x = code.x
    norm_y = frobenius_sq(y)
    norm_x = frobenius_sq(x)
    x_cur = x.copy()
    z = y @ x_cur.T
    cat = catalog_hadamard4()
    cat_flat = np.ascontiguousarray(np.stack([c.ravel() for c in cat]))
    rng = np.random.default_rng(cfg.seed)
    exhaustive = n <= 16 or cfg.kron_sample <= 0
    if exhaustive:
        all_tuples = np.array(
            list(itertools.combinations(range(n), 4)), dtype=np.int64
        )
    factors = []
    obj = frobenius_sq(y - x)
    trace = [obj]
    best_obj, best_count, best_code = obj, 0, code

    for _ in range(cfg.m):
        if exhaustive:
            tuples = all_tuples
        else:
            touched = factors[-1].indices if factors else None
            tuples = _sample_tuples(rng, n, cfg.kron_sample, touched)
        _, t_idx, c_idx = backend.hadamard4_scan(z, tuples, cat_flat)
        idx = tuple(int(v) for v in tuples[t_idx])
        factors.append(Factor("H4", idx, int(c_idx) + 1))
        blk = cat[int(c_idx)]
        lidx = list(idx)
        x_cur[lidx, :] = blk @ x_cur[lidx, :]
        z[:, lidx] = z[:, lidx] @ blk.T
        obj = norm_y + norm_x - 2.0 * float(np.trace(z))
        trace.append(obj)
        if obj < best_obj:
            best_obj, best_count, best_code = obj, len(factors), code

    chain = TransformChain(n, tuple(factors), Fraction(0), "BKron")
    coded = apply_inverse(chain, y)
    final_code = hard_threshold(coded, cfg.s)
    obj = frobenius_sq(coded) - frobenius_sq(final_code.x)
    trace.append(obj)
    if obj <= best_obj:
        best_obj, best_count, best_code = obj, len(factors), final_code
    best_chain = TransformChain(n, tuple(factors[:best_count]), Fraction(0), "BKron")
    eps_trace = [_epsilon(best_obj, norm_y)]
    report = _finish(best_chain, best_code, trace, eps_trace, best_obj)
    return best_chain, best_code, report


# ---------------------------------------------------------------------------
# unnormalized binary chains


def learn_o(data, cfg: LearnConfig):
    """Greedy appending of unnormalized +-1 blocks.

    These blocks cannot be re-ordered behind the objective the way the
    orthonormal ones can, so after every append the codes are re-derived
    through the exact chain inverse and the score tables rebuilt.  The
    loop stops early when the local-optimality certificate holds or no
    block improves the objective; the best (chain, codes) pair seen is
    returned."""
    y = _data_matrix(data)
    n = y.shape[0]
    code = _initial_code(y, cfg.s)
    x = code.x
    norm_y = frobenius_sq(y)
    v_cur = x.copy()
    obj = frobenius_sq(y - v_cur)
    factors = []
    trace = [obj]
    eps_trace = []
    best_obj = obj
    best_factors = ()
    best_code = code
    cat_o = catalog_o()
    stopped_early = False

    for _ in range(cfg.m):
        certified, _witness = o_local_optimality(y, v_cur)
        if certified:
            stopped_early = True
            break
        z = y @ v_cur.T
        w = v_cur @ v_cur.T
        grid = o_scores_grid(z, w)
        t, i, j = np.unravel_index(int(np.argmin(grid)), grid.shape)
        h = float(grid[t, i, j])
        if h >= 0.0:
            stopped_early = True
            break
        factors.append(Factor("O", (int(i), int(j)), int(t) + 1))
        v_cur[[i, j], :] = cat_o[int(t)] @ v_cur[[i, j], :]
        obj = obj + h
        trace.append(obj)
        if obj < best_obj:
            best_obj, best_factors, best_code = obj, tuple(factors), code
        chain = TransformChain(n, tuple(factors), Fraction(0), "O")
        code = hard_threshold(apply_inverse(chain, y), cfg.s)
        x = code.x
        v_cur = apply(chain, x)
        obj = frobenius_sq(y - v_cur)
        trace.append(obj)
        eps_trace.append(_epsilon(obj, norm_y))
        if obj < best_obj:
            best_obj, best_factors, best_code = obj, tuple(factors), code

    chain = TransformChain(n, best_factors, Fraction(0), "O")
    report = _finish(
        chain,
        best_code,
        trace,
        eps_trace,
        best_obj,
        notes={"stopped_early": stopped_early},
    )
    return chain, best_code, report


# ---------------------------------------------------------------------------
# general chains of shears and scalings


def _make_scaling(i: int, a: float, force_pow2: bool) -> Factor:
    pow2 = force_pow2 or (a != 0.0 and math.frexp(abs(a))[0] == 0.5)
    return Factor("SCALE", (int(i),), coeff=float(a), pow2=pow2)


def _make_shear(i: int, j: int, side: str, coeff_raw: float, p) -> Factor:
    coeff = coeff_raw if p == INFINITE_PRECISION else quantize(coeff_raw, p)
    return Factor("SHEAR", (int(i), int(j)), coeff=coeff, side=side)


def _best_init_factor(z, w, p, pow2_scalings):
    """Global argmin over single-shear and single-scaling init scores."""
    n = z.shape[0]
    wd = np.diag(w).copy()
    zd = np.diag(z).copy()
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    safe_row = wd[:, None] > 0.0
    safe_col = wd[None, :] > 0.0

    num1 = z.T - w  # entry (i, j): lower-shear numerator at pair (i, j)
    d1 = np.where(upper & safe_row, -(num1**2) / np.where(safe_row, wd[:, None], 1.0), np.inf)
    num2 = z - w
    d2 = np.where(upper & safe_col, -(num2**2) / np.where(safe_col, wd[None, :], 1.0), np.inf)

    f_scores = np.zeros(n)
    coeffs = np.ones(n)
    for i in range(n):
        if wd[i] <= 0.0:
            continue
        a_star = zd[i] / wd[i]
        if a_star == 0.0:
            continue
        coeff = project_pow2(a_star) if pow2_scalings else a_star
        f_scores[i] = -2.0 * zd[i] * (coeff - 1.0) + wd[i] * (coeff * coeff - 1.0)
        coeffs[i] = coeff

    k1 = int(np.argmin(d1))
    k2 = int(np.argmin(d2))
    ki = int(np.argmin(f_scores))
    best1, best2, besti = d1.ravel()[k1], d2.ravel()[k2], f_scores[ki]
    choice = min(
        (best1, 0), (best2, 1), (besti, 2), key=lambda c: (c[0], c[1])
    )
    if choice[1] == 0:
        i, j = np.unravel_index(k1, d1.shape)
        b_raw = num1[i, j] / wd[i]
        return _make_shear(i, j, "lower", float(b_raw), p)
    if choice[1] == 1:
        i, j = np.unravel_index(k2, d2.shape)
        c_raw = num2[i, j] / wd[j]
        return _make_shear(i, j, "upper", float(c_raw), p)
    return _make_scaling(ki, float(coeffs[ki]), pow2_scalings)


def _best_update_factor(ctx: SweepContext, p, pow2_scalings):
    """Re-optimize one slot from the sweep context; returns (factor, objective).

    Selection uses the unquantized gains; the committed objective is then
    recomputed with the quantized coefficient."""
    n = ctx.cross.shape[0]
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    xr = ctx.code_row_sq
    ac = ctx.left_col_sq

    den1 = xr[:, None] * ac[None, :]  # pair (i, j): code row i, left col j
    safe1 = den1 > 0.0
    e1 = np.where(upper & safe1, ctx.cross.T**2 / np.where(safe1, den1, 1.0), -np.inf)
    den2 = xr[None, :] * ac[:, None]
    safe2 = den2 > 0.0
    e2 = np.where(upper & safe2, ctx.cross**2 / np.where(safe2, den2, 1.0), -np.inf)
    dend = xr * ac
    safed = dend > 0.0
    g = np.where(safed, np.diag(ctx.cross) ** 2 / np.where(safed, dend, 1.0), 0.0)

    k1 = int(np.argmax(e1))
    k2 = int(np.argmax(e2))
    ki = int(np.argmax(g))
    choice = max(
        (float(e1.ravel()[k1]), -0), (float(e2.ravel()[k2]), -1), (float(g[ki]), -2),
        key=lambda c: (c[0], c[1]),
    )
    r2 = ctx.residual_sq

    if choice[1] == 0 and np.isfinite(choice[0]):
        i, j = (int(v) for v in np.unravel_index(k1, e1.shape))
        num = ctx.cross[j, i]
        den = den1[i, j]
        f = _make_shear(i, j, "lower", num / den, p)
        c_val = f.coeff_value()
        return f, r2 - 2.0 * c_val * num + c_val * c_val * den
    if choice[1] == -1 and np.isfinite(choice[0]):
        i, j = (int(v) for v in np.unravel_index(k2, e2.shape))
        num = ctx.cross[i, j]
        den = den2[i, j]
        f = _make_shear(i, j, "upper", num / den, p)
        c_val = f.coeff_value()
        return f, r2 - 2.0 * c_val * num + c_val * c_val * den
    i = ki
    num = float(ctx.cross[i, i])
    den = float(dend[i]) if dend[i] > 0.0 else 0.0
    if den <= 0.0:
        return _make_scaling(i, 1.0, False), r2
    a_star = num / den + 1.0
    if a_star == 0.0:
        return _make_scaling(i, 1.0, False), r2
    coeff = project_pow2(a_star) if pow2_scalings else a_star
    delta = coeff - 1.0
    return (
        _make_scaling(i, coeff, pow2_scalings),
        r2 - 2.0 * delta * num + delta * delta * den,
    )


def _peel_right(left: np.ndarray, f: Factor):
    """left <- left @ f^{-1} via a single column operation."""
    if f.kind == "SHEAR":
        i, j = f.indices
        src, dst = (i, j) if f.side == "lower" else (j, i)
        c = f.coeff_value()
        if c != 0.0:
            left[:, src] -= c * left[:, dst]
    elif f.kind == "SCALE":
        (i,) = f.indices
        left[:, i] /= f.coeff_value()
    else:
        raise ContractError(f"cannot peel factor kind {f.kind!r}")


def _omp_recode(y, factors, n, s):
    chain = TransformChain(n, tuple(factors), Fraction(0), "S")
    s_mat = materialize(chain)
    s_norm, scales = normalize_columns(s_mat)
    coded = omp(y, s_norm, s)
    x = scales[:, None] * coded.x
    code = SparseCode(x=x, s=s)
    obj = frobenius_sq(y - s_mat @ x)
    return code, obj


def learn_s(data, cfg: LearnConfig):
    """Two-phase training of a general shear/scaling chain.

    Phase one initializes each slot sequentially by the best single-factor
    score against the current chain image; phase two revisits every slot
    with the in-chain update scores.  Coefficients are snapped to the
    configured precision after selection.  Pursuit re-coding is not an
    exact minimizer here, so the objective need not fall monotonically;
    the best (chain, codes) pair seen is tracked and returned."""
    y = _data_matrix(data)
    n = y.shape[0]
    if cfg.m < 1:
        raise ContractError("factor budget must be >= 1")
    _check_precision(cfg.p)
    p = cfg.p
    pow2 = cfg.power_of_two_scalings
    k_iters = cfg.k_iters if cfg.k_iters is not None else 5
    code = _initial_code(y, cfg.s)
    x = code.x
    norm_y = frobenius_sq(y)

    factors = []
    x_cur = x.copy()
    z = y @ x_cur.T
    w = x_cur @ x_cur.T
    obj = frobenius_sq(y - x_cur)
    trace = [obj]
    eps_trace = []
    best_obj = obj
    best_factors = ()
    best_code = code

    def consider(ob, facs, cd):
        nonlocal best_obj, best_factors, best_code
        if ob < best_obj:
            best_obj, best_factors, best_code = ob, tuple(facs), cd

    # phase one: sequential initialization against the running chain image
    for _ in range(cfg.m):
        f = _best_init_factor(z, w, p, pow2)
        factors.append(f)
        _apply_factor(f, x_cur, None, inverse=False)
        dst = (
            f.indices[0]
            if f.kind == "SCALE"
            else (f.indices[1] if f.side == "lower" else f.indices[0])
        )
        z[:, dst] = y @ x_cur[dst]
        w[dst, :] = x_cur @ x_cur[dst]
        w[:, dst] = w[dst, :]
        obj = frobenius_sq(y - x_cur)
        trace.append(obj)
        consider(obj, factors, code)

    code, obj = _omp_recode(y, factors, n, cfg.s)
    x = code.x
    trace.append(obj)
    eps_trace.append(_epsilon(obj, norm_y))
    phase_a_obj = obj
    consider(obj, factors, code)

    # phase two: revisit each slot with the in-chain update scores
    m = len(factors)
    for _ in range(k_iters):
        left = materialize(TransformChain(n, tuple(factors[1:]), Fraction(0), "S"))
        codes_part = x.copy()
        for k in range(m):
            ctx = SweepContext.build(y, left, codes_part)
            f_new, obj = _best_update_factor(ctx, p, pow2)
            factors[k] = f_new
            trace.append(obj)
            consider(obj, factors, code)
            if k + 1 < m:
                _peel_right(left, factors[k + 1])
                _apply_factor(f_new, codes_part, None, inverse=False)
        code, obj = _omp_recode(y, factors, n, cfg.s)
        x = code.x
        trace.append(obj)
        eps_trace.append(_epsilon(obj, norm_y))
        consider(obj, factors, code)

    chain = TransformChain(n, best_factors, Fraction(0), "S")
    report = _finish(
        chain,
        best_code,
        trace,
        eps_trace,
        best_obj,
        notes={"phase_a_objective": phase_a_obj},
    )
    return chain, best_code, report
