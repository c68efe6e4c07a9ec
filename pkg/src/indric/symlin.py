"""Dense symmetric-matrix kernel for small dimensions (d up to ~50).

Eigenvalues come from cyclic Jacobi sweeps, definite solves from a
Cholesky factorization whose pivots double as a positive-definiteness
detector.  Everything is plain ``float64`` ndarrays; the batched variants
operate on stacks of shape ``(n, d, d)`` so trajectory-wide checks stay
vectorized.  All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

import numpy as np

from .errors import NonSquare, NotPositiveDefinite

# Accuracy targets. Jacobi sweeps stop once the off-diagonal Frobenius
# mass drops below _OFF_TOL * ||M||_F, which pins eigenvalues to ~EIG_TOL.
EIG_TOL = 1e-10
LIN_TOL = 1e-12
_OFF_TOL = 1e-12
_MAX_SWEEPS = 60


def _as_matrix(m):
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise NonSquare(f"expected a 2-d matrix, got ndim={a.ndim}")
    return a


def symmetrize(m):
    """Return (M + M^T)/2, discarding the antisymmetric part."""
    a = _as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {a.shape}")
    return 0.5 * (a + a.T)


def symmetrize_stack(stack):
    """Symmetrize every matrix of an (n, d, d) stack."""
    a = np.asarray(stack, dtype=float)
    return 0.5 * (a + a.transpose(0, 2, 1))


def sym_matrix(m, tol=0.0):
    """Validate symmetry of ``m`` (within ``tol``) and return it exactly symmetric."""
    a = _as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {a.shape}")
    skew = np.abs(a - a.T).max(initial=0.0)
    if skew > tol * (1.0 + np.abs(a).max(initial=0.0)):
        raise ValueError(f"matrix is not symmetric (max asymmetry {skew:.3e})")
    return 0.5 * (a + a.T)


def eigenvalues_stack(stack):
    """Eigenvalues (ascending) of every symmetric matrix in an (n, d, d) stack.

    Cyclic Jacobi rotations applied to the whole stack at once; each matrix
    gets its own rotation angle per (p, q) pair.
    """
    a = np.array(stack, dtype=float)
    if a.ndim == 2:
        a = a[None]
    n, d, d2 = a.shape
    if d != d2:
        raise NonSquare(f"expected square matrices, got shape {a.shape}")
    if d == 1:
        return a[:, :, 0].copy()

    norm_f = np.sqrt(np.einsum("nij,nij->n", a, a))
    stop = _OFF_TOL * norm_f
    eye = np.eye(d, dtype=bool)
    for _ in range(_MAX_SWEEPS):
        off = np.sqrt(np.einsum("nij,nij->n", a * ~eye, a * ~eye))
        if np.all(off <= stop):
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[:, p, q]
                active = apq != 0.0
                if not active.any():
                    continue
                app = a[:, p, p]
                aqq = a[:, q, q]
                with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                    tau = (aqq - app) / (2.0 * apq)
                    sign = np.where(tau >= 0.0, 1.0, -1.0)
                    t = sign / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
                t = np.where(active & np.isfinite(t), t, 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                row_p = a[:, p, :].copy()
                row_q = a[:, q, :].copy()
                a[:, p, :] = c[:, None] * row_p - s[:, None] * row_q
                a[:, q, :] = s[:, None] * row_p + c[:, None] * row_q
                col_p = a[:, :, p].copy()
                col_q = a[:, :, q].copy()
                a[:, :, p] = c[:, None] * col_p - s[:, None] * col_q
                a[:, :, q] = s[:, None] * col_p + c[:, None] * col_q
                zero = np.where(active, 0.0, a[:, p, q])
                a[:, p, q] = zero
                a[:, q, p] = zero
    diag = np.einsum("nii->ni", a)
    return np.sort(diag, axis=1)


def eigenvalues(m):
    """All eigenvalues of a symmetric matrix, ascending."""
    return eigenvalues_stack(_as_matrix(m)[None])[0]


def min_eigenvalue(m):
    """Smallest eigenvalue of a symmetric matrix."""
    return float(eigenvalues(m)[0])


def min_eig_stack(stack):
    """Smallest eigenvalue of each matrix in an (n, d, d) stack."""
    return eigenvalues_stack(stack)[:, 0]


def max_eig_stack(stack):
    """Largest eigenvalue of each matrix in an (n, d, d) stack."""
    return eigenvalues_stack(stack)[:, -1]


def is_definite(m, margin):
    """True iff the smallest eigenvalue is at least ``margin`` (margin >= 0)."""
    return min_eigenvalue(m) >= margin


def cholesky_definite(m):
    """Lower-triangular L with L L^T = M; raises NotPositiveDefinite on a bad pivot."""
    return cholesky_stack(_as_matrix(m)[None])[0]


def cholesky_stack(stack):
    """Batched Cholesky of an (n, d, d) stack of symmetric matrices.

    The first non-positive (or non-finite) pivot aborts the whole batch and
    reports which matrix failed: a failed pivot is exactly how loss of
    positive definiteness is detected upstream.
    """
    a = np.asarray(stack, dtype=float)
    n, d, _ = a.shape
    low = np.zeros_like(a)
    for j in range(d):
        pivot = a[:, j, j] - np.einsum("nk,nk->n", low[:, j, :j], low[:, j, :j])
        bad = ~(pivot > 0.0)  # also catches NaN
        if bad.any():
            where = int(np.argmax(bad))
            raise NotPositiveDefinite(
                f"non-positive pivot {pivot[where]:.6e} in column {j}"
                f" (batch index {where})",
                pivot=j,
                where=where,
            )
        low[:, j, j] = np.sqrt(pivot)
        if j + 1 < d:
            low[:, j + 1 :, j] = (
                a[:, j + 1 :, j]
                - np.einsum("nik,nk->ni", low[:, j + 1 :, :j], low[:, j, :j])
            ) / low[:, j, j, None]
    return low


def solve_definite(m, rhs):
    """Solve M X = rhs for symmetric positive definite M.

    Uses the pivot-checked Cholesky factorization; never forms an inverse.
    ``rhs`` may be a vector or a matrix.
    """
    a = _as_matrix(m) if np.ndim(m) == 2 else np.asarray(m, dtype=float)
    b = np.asarray(rhs, dtype=float)
    vector = b.ndim == 1
    if vector:
        b = b[:, None]
    x = solve_definite_stack(a[None], b[None])[0]
    return x[:, 0] if vector else x


def solve_definite_stack(mstack, rstack):
    """Batched SPD solve: X[k] with M[k] X[k] = R[k] for each k."""
    low = cholesky_stack(mstack)
    b = np.asarray(rstack, dtype=float)
    n, d, _ = low.shape
    y = np.empty_like(b)
    for i in range(d):
        y[:, i, :] = (
            b[:, i, :] - np.einsum("nk,nkm->nm", low[:, i, :i], y[:, :i, :])
        ) / low[:, i, i, None]
    x = np.empty_like(b)
    for i in range(d - 1, -1, -1):
        x[:, i, :] = (
            y[:, i, :] - np.einsum("nk,nkm->nm", low[:, i + 1 :, i], x[:, i + 1 :, :])
        ) / low[:, i, i, None]
    return x
