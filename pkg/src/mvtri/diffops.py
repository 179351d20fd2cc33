"""Soft-argmax decoding, MPJPE metrics, analytic Jacobians and the heatmap file format."""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .dlt import (
    SiiConfig,
    build_dlt_batch,
    build_dlt_matrix,
    gram,
    sii_operator,
    solve_sii_batch,
    _single,
)
from .errors import ShapeMismatch, ZeroMass

EPS_MASS = 1e-12
HEATMAP_MAGIC = int.from_bytes(b"MVHM", "little")


# --------------------------------------------------------------------------- soft-argmax


def _checked_heatmap(h) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if h.ndim == 2:
        h = h[None]
    if h.ndim != 3:
        raise ShapeMismatch(f"heatmap must be (K, H, W) or (H, W), got {h.shape}")
    if not np.all(np.isfinite(h)) or np.any(h < 0):
        raise ValueError("heatmap entries must be finite and nonnegative")
    return h


def _joint_map(h, joint: int, eps_mass: float):
    h = _checked_heatmap(h)
    if not 0 <= joint < h.shape[0]:
        raise IndexError(f"joint {joint} out of range for {h.shape[0]} heatmaps")
    hm = h[joint]
    mass = hm.sum()
    if not mass > eps_mass:
        raise ZeroMass(f"joint {joint}: total heatmap mass {mass:.3g} <= {eps_mass:g}")
    return hm, mass


def soft_argmax(h, joint: int = 0, eps_mass: float = EPS_MASS) -> np.ndarray:
    """Heatmap expectation ``(sum x H, sum y H) / sum H`` with x = column, y = row."""
    hm, mass = _joint_map(h, joint, eps_mass)
    rows, cols = hm.shape
    u = hm.sum(axis=0) @ np.arange(cols) / mass
    v = hm.sum(axis=1) @ np.arange(rows) / mass
    return np.array([u, v])


def soft_argmax_all(h, eps_mass: float = EPS_MASS) -> np.ndarray:
    """Decode every joint of a (K, H, W) stack; returns (K, 2)."""
    h = _checked_heatmap(h)
    return np.stack([soft_argmax(h, k, eps_mass) for k in range(h.shape[0])])


def soft_argmax_jacobian(h, joint: int = 0, eps_mass: float = EPS_MASS) -> np.ndarray:
    """Derivative of ``soft_argmax`` w.r.t. every cell, shape (2, H*W), row-major cells."""
    hm, mass = _joint_map(h, joint, eps_mass)
    rows, cols = hm.shape
    u, v = soft_argmax(h, joint, eps_mass)
    ys, xs = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    return np.stack([(xs - u).ravel(), (ys - v).ravel()]) / mass


# --------------------------------------------------------------------------- metrics


def mpjpe_2d(pred, gt, normalize: bool = False) -> float:
    """Per-view mean joint distance, summed over views.

    ``pred`` and ``gt`` are (views, J, 2). With ``normalize=True`` the sum over
    views becomes a mean, the more common convention.
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.ndim == 2 and gt.ndim == 2:
        pred, gt = pred[None], gt[None]
    if pred.shape != gt.shape or pred.ndim != 3 or pred.shape[-1] != 2:
        raise ShapeMismatch(f"2D joint sets must both be (views, J, 2), got {pred.shape} and {gt.shape}")
    per_view = np.linalg.norm(pred - gt, axis=-1).mean(axis=-1)
    return float(per_view.mean() if normalize else per_view.sum())


def mpjpe_3d(pred, gt) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.shape[-1] != 3:
        raise ShapeMismatch(f"3D joint sets must match and be (J, 3), got {pred.shape} and {gt.shape}")
    return float(np.linalg.norm(pred - gt, axis=-1).mean())


# --------------------------------------------------------------------------- triangulation Jacobian


def sii_jacobian_batch(uv, cameras, cfg: SiiConfig = SiiConfig(), items=None):
    """SII triangulation plus ``d(x, y, z) / d(u_1, v_1, ..., u_n, v_n)``.

    Differentiates the unrolled iterations exactly; the start vector is a
    constant. The forward result is the one :func:`solve_sii_batch` returns.

    Returns
    -------
    result : BatchResult
    jac : array, shape (N, 3, 2n)
        NaN for systems flagged at infinity.
    """
    A = build_dlt_batch(uv, cameras)
    result = solve_sii_batch(A, cfg, items=items, return_trace=True)
    P = np.asarray(cameras, dtype=np.float64)
    N, rows, _ = A.shape
    n = rows // 2
    p3 = np.broadcast_to(P[..., 2, :], (N, n, 4))
    p3 = np.repeat(p3, 2, axis=1)  # (N, 2n, 4): derivative of row k w.r.t. its coordinate

    # dM_k = p3_k a_k^T + a_k p3_k^T for coordinate k (row k of A)
    dM = np.einsum("nki,nkj->nkij", p3, A) + np.einsum("nki,nkj->nkij", A, p3)
    B = sii_operator(gram(A), cfg.shift)
    dB = -np.einsum("nij,nkjl,nlm->nkim", B, dM, B)

    trace = result.trace
    dx = np.zeros((N, rows, 4))
    for t in range(1, len(trace)):
        x_prev = trace[t - 1]
        y = np.einsum("nij,nj->ni", B, x_prev)
        norm = np.sqrt(np.einsum("ni,ni->n", y, y))
        dy = np.einsum("nkij,nj->nki", dB, x_prev) + np.einsum("nij,nkj->nki", B, dx)
        x_t = trace[t]
        proj = dy - np.einsum("nki,ni->nk", dy, x_t)[..., None] * x_t[:, None, :]
        dx = proj / norm[:, None, None]

    sign = np.where(np.einsum("ni,ni->n", result.x, trace[-1]) < 0, -1.0, 1.0)
    dx = dx * sign[:, None, None]
    w = result.x[:, 3]
    jac = (dx[..., :3] - result.points[:, None, :] * dx[..., 3:4]) / w[:, None, None]
    jac = np.swapaxes(jac, 1, 2)
    jac[result.at_infinity] = np.nan
    return result, jac


def triangulate_sii_with_jacobian(observations, cfg: SiiConfig = SiiConfig(), item: int = 0):
    """Single-point version of :func:`sii_jacobian_batch` on a list of observations.

    Returns ``(TriangulationOutput, jacobian)`` where the Jacobian is 3 x 2n,
    columns ordered ``u_1, v_1, ..., u_n, v_n``.
    """
    observations = list(observations)
    build_dlt_matrix(observations)  # validates view count
    uv = np.array([[obs.uv for obs in observations]])
    cams = np.stack([obs.P for obs in observations])
    result, jac = sii_jacobian_batch(uv, cams, cfg, items=[item])
    out = _single(result)
    return out, jac[0]


# --------------------------------------------------------------------------- heatmap files


def write_heatmaps(path, h) -> None:
    """Little-endian uint32 header (magic, K, H, W) followed by float32 cells."""
    h = _checked_heatmap(h)
    K, H, W = h.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4I", HEATMAP_MAGIC, K, H, W))
        fh.write(h.astype("<f4").tobytes())


def read_heatmaps(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 16:
        raise ValueError(f"{path}: truncated heatmap header")
    magic, K, H, W = struct.unpack("<4I", data[:16])
    if magic != HEATMAP_MAGIC:
        raise ValueError(f"{path}: bad magic 0x{magic:08x}")
    expected = 16 + 4 * K * H * W
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes for {K}x{H}x{W}, got {len(data)}")
    return np.frombuffer(data, dtype="<f4", offset=16).reshape(K, H, W).astype(np.float64)


def write_joints_csv(path, joints) -> None:
    joints = np.asarray(joints, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        fh.write("# mvtri-schema v1\n")
        w = csv.writer(fh)
        w.writerow(["joint", "u", "v"])
        for k, (u, v) in enumerate(joints):
            w.writerow([k, f"{u:.17g}", f"{v:.17g}"])
