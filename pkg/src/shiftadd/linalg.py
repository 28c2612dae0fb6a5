"""Dense matrix substrate.

Matrices are float64 NumPy arrays in C (row-major) order.  The only
non-trivial routine here is a cyclic Jacobi eigendecomposition, used to
initialize the learners from the data's second-moment matrix; it is small,
dependency-free and fully deterministic, including eigenvalue ordering,
tie-breaking and sign conventions.
"""

import numpy as np

from .errors import ContractError, DimensionError, SolverError


def as_matrix(a) -> np.ndarray:
    """Validate and convert to a float64, C-order, finite 2-D array."""
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D array, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ContractError("matrix entries must be finite")
    return m


def matmul(a, b) -> np.ndarray:
    """Matrix product with an explicit shape check."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def frobenius_sq(a) -> float:
    """Squared Frobenius norm, sum of squared entries."""
    a = np.asarray(a, dtype=np.float64)
    return float(np.sum(a * a))


def _first_significant_row(col, tol):
    idx = np.nonzero(np.abs(col) > tol)[0]
    return int(idx[0]) if idx.size else len(col)


def jacobi_eigh(s, tol=1e-12, max_sweeps=60):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, V) with eigenvalues sorted in descending order and
    V's columns the matching eigenvectors.  Within a group of (numerically)
    equal eigenvalues, columns are ordered by the row index of their first
    significant entry, and every column's first significant entry is made
    positive.

    Raises SolverError if the off-diagonal mass has not vanished after
    ``max_sweeps`` full sweeps.
    """
    a = as_matrix(s).copy()
    n = a.shape[0]
    if a.shape[1] != n:
        raise DimensionError("jacobi_eigh needs a square matrix")
    if n and not np.allclose(a, a.T, atol=1e-10 * (1.0 + np.abs(a).max())):
        raise ContractError("jacobi_eigh needs a symmetric matrix")
    a = 0.5 * (a + a.T)

    v = np.eye(n)
    scale = np.abs(a).max() if n else 0.0
    if scale == 0.0:
        eigvals = np.zeros(n)
        return eigvals, v
    thresh = tol * scale

    converged = False
    for _ in range(max_sweeps):
        off = np.abs(a - np.diag(np.diag(a))).max() if n > 1 else 0.0
        if off <= thresh:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= thresh * 1e-4:
                    continue
                phi = 0.5 * np.arctan2(2.0 * apq, a[q, q] - a[p, p])
                c, sn = np.cos(phi), np.sin(phi)
                app, aqq = a[p, p], a[q, q]
                a[p, p] = c * c * app + sn * sn * aqq - 2.0 * sn * c * apq
                a[q, q] = sn * sn * app + c * c * aqq + 2.0 * sn * c * apq
                a[p, q] = a[q, p] = 0.0
                # rotate the remaining rows/columns in one vectorized pass
                mask = np.ones(n, dtype=bool)
                mask[[p, q]] = False
                aip = a[mask, p].copy()
                aiq = a[mask, q].copy()
                a[mask, p] = c * aip - sn * aiq
                a[mask, q] = c * aiq + sn * aip
                a[p, mask] = a[mask, p]
                a[q, mask] = a[mask, q]
                vip = v[:, p].copy()
                viq = v[:, q].copy()
                v[:, p] = c * vip - sn * viq
                v[:, q] = sn * vip + c * viq
    else:
        converged = np.abs(a - np.diag(np.diag(a))).max() <= thresh
    if not converged:
        raise SolverError(f"Jacobi sweep budget ({max_sweeps}) exhausted")

    eigvals = np.diag(a).copy()

    # Deterministic ordering: descending eigenvalue; near-equal eigenvalues
    # ordered by first significant eigenvector row; signs canonicalized.
    col_tol = 1e-12
    for j in range(n):
        m = np.abs(v[:, j]).max()
        r = _first_significant_row(v[:, j], col_tol * m)
        if r < n and v[r, j] < 0:
            v[:, j] = -v[:, j]
    order = sorted(
        range(n),
        key=lambda j: (
            -eigvals[j],
            _first_significant_row(v[:, j], col_tol * np.abs(v[:, j]).max()),
        ),
    )
    # Stabilize ordering across tiny eigenvalue noise: group by value within
    # a relative tolerance, then sort each group by the secondary key.
    eig_tol = 1e-10 * max(1.0, np.abs(eigvals).max())
    order2 = []
    i = 0
    by_val = sorted(range(n), key=lambda j: -eigvals[j])
    while i < n:
        k = i
        while k + 1 < n and abs(eigvals[by_val[k + 1]] - eigvals[by_val[i]]) <= eig_tol:
            k += 1
        group = sorted(
            by_val[i : k + 1],
            key=lambda j: _first_significant_row(
                v[:, j], col_tol * np.abs(v[:, j]).max()
            ),
        )
        order2.extend(group)
        i = k + 1
    order = order2

    return eigvals[order], np.ascontiguousarray(v[:, order])


def left_singular_basis(y) -> np.ndarray:
    """Orthonormal eigenbasis of y @ y.T, columns sorted by descending eigenvalue.

    This is the left factor of the singular value decomposition of ``y``,
    which is all the learners consume.
    """
    y = as_matrix(y)
    gram = y @ y.T
    _, u = jacobi_eigh(gram)
    return u
