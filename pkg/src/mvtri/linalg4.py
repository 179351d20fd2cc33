"""Fixed-size 4x4 kernels, vectorized over a leading batch axis."""

from __future__ import annotations

import numpy as np

_PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def adjugate4(m: np.ndarray) -> np.ndarray:
    """Adjugate of each 4x4 matrix in ``m`` (shape (..., 4, 4)) by cofactor expansion."""
    m = np.asarray(m, dtype=np.float64)
    (m00, m01, m02, m03), (m10, m11, m12, m13), (m20, m21, m22, m23), (m30, m31, m32, m33) = (
        [m[..., i, j] for j in range(4)] for i in range(4)
    )
    s0 = m00 * m11 - m10 * m01
    s1 = m00 * m12 - m10 * m02
    s2 = m00 * m13 - m10 * m03
    s3 = m01 * m12 - m11 * m02
    s4 = m01 * m13 - m11 * m03
    s5 = m02 * m13 - m12 * m03
    c5 = m22 * m33 - m32 * m23
    c4 = m21 * m33 - m31 * m23
    c3 = m21 * m32 - m31 * m22
    c2 = m20 * m33 - m30 * m23
    c1 = m20 * m32 - m30 * m22
    c0 = m20 * m31 - m30 * m21
    adj = np.empty(m.shape)
    adj[..., 0, 0] = m11 * c5 - m12 * c4 + m13 * c3
    adj[..., 0, 1] = -m01 * c5 + m02 * c4 - m03 * c3
    adj[..., 0, 2] = m31 * s5 - m32 * s4 + m33 * s3
    adj[..., 0, 3] = -m21 * s5 + m22 * s4 - m23 * s3
    adj[..., 1, 0] = -m10 * c5 + m12 * c2 - m13 * c1
    adj[..., 1, 1] = m00 * c5 - m02 * c2 + m03 * c1
    adj[..., 1, 2] = -m30 * s5 + m32 * s2 - m33 * s1
    adj[..., 1, 3] = m20 * s5 - m22 * s2 + m23 * s1
    adj[..., 2, 0] = m10 * c4 - m11 * c2 + m13 * c0
    adj[..., 2, 1] = -m00 * c4 + m01 * c2 - m03 * c0
    adj[..., 2, 2] = m30 * s4 - m31 * s2 + m33 * s0
    adj[..., 2, 3] = -m20 * s4 + m21 * s2 - m23 * s0
    adj[..., 3, 0] = -m10 * c3 + m11 * c1 - m12 * c0
    adj[..., 3, 1] = m00 * c3 - m01 * c1 + m02 * c0
    adj[..., 3, 2] = -m30 * s3 + m31 * s1 - m32 * s0
    adj[..., 3, 3] = m20 * s3 - m21 * s1 + m22 * s0
    return adj


def det4(m: np.ndarray) -> np.ndarray:
    """Determinant via the first row of the adjugate product."""
    m = np.asarray(m, dtype=np.float64)
    return np.einsum("...j,...j->...", m[..., 0, :], adjugate4(m)[..., :, 0])


def inv4(m: np.ndarray) -> np.ndarray:
    """Closed-form inverse of each 4x4 matrix: adj(m) / det(m)."""
    m = np.asarray(m, dtype=np.float64)
    adj = adjugate4(m)
    det = np.einsum("...j,...j->...", m[..., 0, :], adj[..., :, 0])
    return adj / det[..., None, None]


def jacobi_eigh4(m: np.ndarray, tol: float = 1e-15, max_sweeps: int = 40):
    """Cyclic Jacobi eigendecomposition of symmetric 4x4 matrices.

    Parameters
    ----------
    m : array, shape (..., 4, 4)
        Symmetric matrices. Only the symmetric part is meaningful.
    tol : float
        A pair (p, q) is treated as decoupled once
        ``|m_pq| <= tol * sqrt(|m_pp * m_qq|)``. This relative test keeps
        small eigenvalues accurate on graded matrices such as ``A^T A``.
    max_sweeps : int
        Hard cap on the number of full sweeps over the six pairs.

    Returns
    -------
    w : array, shape (..., 4)
        Eigenvalues, unsorted (diagonal order after convergence).
    v : array, shape (..., 4, 4)
        Orthonormal eigenvectors as columns, ``m @ v[..., :, k] = w[..., k] * v[..., :, k]``.
    sweeps : int
        Number of sweeps executed.
    """
    a = np.array(m, dtype=np.float64)
    batch_shape = a.shape[:-2]
    a = a.reshape(-1, 4, 4)
    v = np.broadcast_to(np.eye(4), a.shape).copy()
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        rotated = False
        for p, q in _PAIRS:
            apq = a[:, p, q]
            app = a[:, p, p]
            aqq = a[:, q, q]
            active = np.abs(apq) > tol * np.sqrt(np.abs(app * aqq))
            if not active.any():
                a[:, p, q] = 0.0
                a[:, q, p] = 0.0
                continue
            rotated = True
            safe = np.where(active, apq, 1.0)
            with np.errstate(over="ignore"):
                theta = (aqq - app) / (2.0 * safe)
            t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            new_pp = app - t * apq
            new_qq = aqq + t * apq
            cs = c[:, None]
            ss = s[:, None]
            col_p = a[:, :, p].copy()
            col_q = a[:, :, q]
            a[:, :, p] = cs * col_p - ss * col_q
            a[:, :, q] = ss * col_p + cs * col_q
            row_p = a[:, p, :].copy()
            row_q = a[:, q, :]
            a[:, p, :] = cs * row_p - ss * row_q
            a[:, q, :] = ss * row_p + cs * row_q
            a[:, p, p] = new_pp
            a[:, q, q] = new_qq
            a[:, p, q] = 0.0
            a[:, q, p] = 0.0
            vp = v[:, :, p].copy()
            vq = v[:, :, q]
            v[:, :, p] = cs * vp - ss * vq
            v[:, :, q] = ss * vp + cs * vq
        if not rotated:
            break
    w = np.diagonal(a, axis1=1, axis2=2).copy()
    return w.reshape(*batch_shape, 4), v.reshape(*batch_shape, 4, 4), sweeps


def spectral_norm(mat: np.ndarray, rtol: float = 1e-12, max_iter: int = 10_000) -> float:
    """Largest singular value of ``mat`` by power iteration on ``mat^T mat``."""
    mat = np.asarray(mat, dtype=np.float64)
    gram = mat.T @ mat
    x = np.ones(gram.shape[0]) / np.sqrt(gram.shape[0])
    lam = 0.0
    for _ in range(max_iter):
        y = gram @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        x = y / norm
        new_lam = float(x @ gram @ x)
        if abs(new_lam - lam) <= rtol * abs(new_lam):
            lam = new_lam
            break
        lam = new_lam
    return float(np.sqrt(lam))
