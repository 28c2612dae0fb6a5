# Compiled versions of the hot kernels; semantics (including selection
# order and tie-breaking) match shiftadd._kernels_py exactly.

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"


def omp_batch(double[:, ::1] gram, double[:, ::1] corr0, int s):
    """Greedy pursuit for every column from precomputed Gram products."""
    cdef int k = corr0.shape[0]
    cdef int n_cols = corr0.shape[1]
    if s > k:
        s = k
    out = np.zeros((k, n_cols))
    cdef double[:, ::1] x = out
    cdef double[::1] h = np.empty(k)
    cdef double[::1] h0 = np.empty(k)
    cdef double[:, ::1] lower = np.empty((s, s))
    cdef double[::1] wv = np.empty(s)
    cdef double[::1] coef = np.empty(s)
    cdef int[::1] sel = np.empty(s, dtype=np.int32)
    cdef int col, it, m, atom, i, j, q
    cdef double best, av, rem, acc

    for col in range(n_cols):
        for i in range(k):
            h0[i] = corr0[i, col]
            h[i] = h0[i]
        m = 0
        for it in range(s):
            # argmax |h| over unselected atoms (first maximum wins)
            atom = -1
            best = 0.0
            for i in range(k):
                av = fabs(h[i])
                taken = False
                for j in range(m):
                    if sel[j] == i:
                        taken = True
                        break
                if taken:
                    continue
                if av > best:
                    best = av
                    atom = i
            if atom < 0 or best <= 0.0:
                break
            if it == 0:
                lower[0, 0] = 1.0
            else:
                # forward-substitute L w = gram[sel, atom]
                for i in range(m):
                    acc = gram[sel[i], atom]
                    for j in range(i):
                        acc -= lower[i, j] * wv[j]
                    wv[i] = acc / lower[i, i]
                rem = 1.0
                for i in range(m):
                    rem -= wv[i] * wv[i]
                if rem <= 1e-12:
                    break
                for i in range(m):
                    lower[it, i] = wv[i]
                lower[it, it] = sqrt(rem)
            sel[m] = atom
            m += 1
            # solve L L^T coef = h0[sel]
            for i in range(m):
                acc = h0[sel[i]]
                for j in range(i):
                    acc -= lower[i, j] * coef[j]
                coef[i] = acc / lower[i, i]
            for i in range(m - 1, -1, -1):
                acc = coef[i]
                for j in range(i + 1, m):
                    acc -= lower[j, i] * coef[j]
                coef[i] = acc / lower[i, i]
            # refresh correlations h = h0 - gram[:, sel] coef
            for i in range(k):
                acc = h0[i]
                for j in range(m):
                    acc -= gram[i, sel[j]] * coef[j]
                h[i] = acc
        for j in range(m):
            x[sel[j], col] = coef[j]
    return out


def hadamard4_scan(double[:, ::1] z, long[:, ::1] tuples, double[:, ::1] cat_flat):
    """Best (score, tuple index, catalog index) over 4-index blocks."""
    cdef Py_ssize_t n_tuples = tuples.shape[0]
    cdef Py_ssize_t n_cands = cat_flat.shape[0]
    cdef double sub[16]
    cdef Py_ssize_t t, c, a, b
    cdef long ia, ib
    cdef double tr, acc, score
    cdef double best_score = np.inf
    cdef Py_ssize_t best_tuple = -1
    cdef Py_ssize_t best_cand = -1

    for t in range(n_tuples):
        tr = 0.0
        for a in range(4):
            ia = tuples[t, a]
            for b in range(4):
                ib = tuples[t, b]
                sub[4 * a + b] = z[ia, ib]
            tr += z[ia, ia]
        for c in range(n_cands):
            acc = 0.0
            for a in range(16):
                acc += cat_flat[c, a] * sub[a]
            score = 2.0 * (tr - acc)
            if score < best_score:
                best_score = score
                best_tuple = t
                best_cand = c
    return best_score, int(best_tuple), int(best_cand)
