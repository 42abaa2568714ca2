"""Small dense symmetric linear algebra.

Everything in this package reduces to symmetric d x d problems with
d <= 8 (d in {1, 2, 3} for the built-in benchmark systems).  The scalar
entry points (:func:`eigh`, :func:`pinv`, :func:`min_eig`) run a cyclic
Jacobi sweep, which is exact enough at this size that the invariant
tests can use tight tolerances.  The ``*_batch`` helpers handle the hot
paths (one block per grid node, up to 1e5 blocks) through LAPACK; a
cross-check test binds the two routes together.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInput

#: relative eigenvalue cutoff used by default in pseudoinverses
DEFAULT_RANK_TOL = 1e-10


def symmetrize(m):
    """Return the symmetric part ``(m + m.T) / 2``."""
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def _check_sym(m):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInput("matrix has non-finite entries")
    return 0.5 * (m + m.T)


def eigh(m, max_sweeps=50):
    """Eigendecomposition of a small symmetric matrix by cyclic Jacobi.

    Parameters
    ----------
    m : (d, d) array_like
        Symmetric matrix (symmetrized defensively on entry).
    max_sweeps : int
        Upper bound on full Jacobi sweeps; convergence is quadratic and
        a handful of sweeps suffices for d <= 8.

    Returns
    -------
    w : (d,) ndarray
        Eigenvalues in ascending order.
    v : (d, d) ndarray
        Orthonormal eigenvectors as columns, ``m == v @ diag(w) @ v.T``.
    """
    a = _check_sym(m).copy()
    d = a.shape[0]
    v = np.eye(d)
    if d == 1:
        return a[0].copy(), v

    scale = max(1.0, float(np.linalg.norm(a)))
    stop = 1e-15 * scale
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2.0)
        if off <= stop:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if abs(apq) <= 1e-18 * scale:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rot = np.array([[c, s], [-s, c]])
                rows = a[[p, q], :]
                a[[p, q], :] = rot.T @ rows
                cols = a[:, [p, q]]
                a[:, [p, q]] = cols @ rot
                # re-symmetrize the rotated pair against round-off
                a[q, p] = a[p, q]
                v[:, [p, q]] = v[:, [p, q]] @ rot
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def pinv(m, rank_tol=DEFAULT_RANK_TOL):
    """Moore-Penrose pseudoinverse of a symmetric matrix.

    Eigenvalues with ``|lam| <= rank_tol * max|lam|`` are truncated, so
    the zero matrix maps to the zero matrix.
    """
    if rank_tol <= 0.0:
        raise InvalidInput("rank_tol must be positive")
    w, v = eigh(m)
    cut = rank_tol * np.max(np.abs(w)) if w.size else 0.0
    winv = np.where(np.abs(w) > cut, 1.0 / np.where(w == 0.0, 1.0, w), 0.0)
    out = (v * winv) @ v.T
    return 0.5 * (out + out.T)


def min_eig(m):
    """Smallest eigenvalue of a symmetric matrix."""
    return float(eigh(m)[0][0])


# ---------------------------------------------------------------------------
# batched helpers (hot paths: one small block per grid node)
# ---------------------------------------------------------------------------


def eigh_batch(ms):
    """Batched symmetric eigendecomposition of an (n, d, d) stack."""
    ms = np.asarray(ms, dtype=float)
    if not np.all(np.isfinite(ms)):
        raise InvalidInput("matrix stack has non-finite entries")
    return np.linalg.eigh(ms)


def min_eig_batch(ms):
    """Smallest eigenvalue of every block in an (n, d, d) stack."""
    return eigh_batch(ms)[0][:, 0]


def pinv_apply_batch(ms, rhs, rank_tol=DEFAULT_RANK_TOL, zero_tol=0.0):
    """Apply blockwise pseudoinverses: ``out[:, k] = pinv(ms[k]) @ rhs[:, k]``.

    Parameters
    ----------
    ms : (n, d, d) ndarray
        Stack of symmetric blocks.
    rhs : (d, n) ndarray
        One right-hand-side column per block.
    rank_tol : float
        Relative truncation threshold within each block.
    zero_tol : float
        Absolute truncation floor; eigenvalues with ``|lam| <= zero_tol``
        are treated as zero regardless of the block scale.  Used by the
        certifier to evaluate dual values next to the semidefinite
        boundary.

    Returns
    -------
    out : (d, n) ndarray
    truncated : (n,) bool ndarray
        Marks blocks where at least one eigenvalue was truncated (the
        blocks that were singular within tolerance).
    """
    w, v = eigh_batch(ms)
    cut = np.maximum(rank_tol * np.max(np.abs(w), axis=1, keepdims=True), zero_tol)
    keep = np.abs(w) > cut
    winv = np.where(keep, 1.0 / np.where(w == 0.0, 1.0, w), 0.0)
    # v.T @ rhs per block, scale by winv, then back
    proj = np.einsum("kdi,dk->ki", v, rhs)
    out = np.einsum("kdi,ki->dk", v, winv * proj)
    return out, ~np.all(keep, axis=1)
