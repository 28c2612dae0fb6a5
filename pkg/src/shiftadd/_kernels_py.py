"""Pure NumPy implementations of the hot kernels.

Selected automatically when the compiled extension is unavailable (or when
SHIFTADD_PURE_PYTHON is set).  Same semantics as the compiled versions,
including scan order and tie-breaking; atoms whose scores agree only up to
accumulation rounding may resolve to either candidate, with identical
reconstructions.
"""

import numpy as np

BACKEND_NAME = "python"


def omp_batch(gram: np.ndarray, corr0: np.ndarray, s: int) -> np.ndarray:
    """Greedy pursuit for every column from precomputed Gram products.

    ``gram`` is D^T D for a unit-column dictionary, ``corr0`` is D^T Y.
    Selects up to ``s`` atoms per column (argmax absolute correlation,
    least-squares refit via a rank-growing Cholesky factor), stopping early
    on zero correlations or a rank-deficient selection.
    """
    k, n_cols = corr0.shape
    s = min(s, k)
    x = np.zeros((k, n_cols))
    for col in range(n_cols):
        h0 = corr0[:, col]
        h = h0.copy()
        sel = []
        coef = None
        lower = np.zeros((s, s))
        for it in range(s):
            a = np.abs(h)
            if sel:
                a[sel] = -1.0
            atom = int(np.argmax(a))
            if a[atom] <= 0.0:
                break
            if it == 0:
                lower[0, 0] = 1.0
            else:
                g = gram[sel, atom]
                wv = np.linalg.solve(lower[:it, :it], g)
                rem = 1.0 - wv @ wv
                if rem <= 1e-12:
                    break
                lower[it, :it] = wv
                lower[it, it] = np.sqrt(rem)
            sel.append(atom)
            m = len(sel)
            ll = lower[:m, :m]
            coef = np.linalg.solve(ll.T, np.linalg.solve(ll, h0[sel]))
            h = h0 - gram[:, sel] @ coef
        if sel:
            x[sel, col] = coef
    return x


def hadamard4_scan(z: np.ndarray, tuples: np.ndarray, cat_flat: np.ndarray):
    """Best (score, tuple index, catalog index) over 4-index blocks.

    Score of a candidate block B at tuple t is 2 tr(Zt) - 2 <B, Zt> with
    Zt the 4x4 submatrix of z.  Scans tuples in order, candidates in order,
    keeping the first minimum; chunked to bound the temporary arrays.
    """
    best_score = np.inf
    best_tuple = -1
    best_cand = -1
    chunk = 8192
    n_tuples = tuples.shape[0]
    for start in range(0, n_tuples, chunk):
        t = tuples[start : start + chunk]
        sub = z[t[:, :, None], t[:, None, :]].reshape(len(t), 16)
        tr = sub[:, 0] + sub[:, 5] + sub[:, 10] + sub[:, 15]
        scores = 2.0 * tr[:, None] - 2.0 * (sub @ cat_flat.T)
        flat = int(np.argmin(scores))
        val = float(scores.ravel()[flat])
        if val < best_score:
            best_score = val
            best_tuple = start + flat // cat_flat.shape[0]
            best_cand = flat % cat_flat.shape[0]
    return best_score, best_tuple, best_cand
