"""Feature transform layers on explicit point-set features.

A feature vector of length C is read channel-major as C/d consecutive
d-blocks; a block-diagonal transform multiplies each block by its own d x d
matrix (or one matrix broadcast to every block).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfRange, ShapeMismatch, SingularTransform

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class RotationEncoding:
    """A bounded scalar mapped onto the upper half circle, as a 2x2 rotation."""

    cos: float
    sin: float
    theta_min: float
    theta_max: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.cos, self.sin], [-self.sin, self.cos]])


def encode_scalar(theta: float, theta_min: float, theta_max: float) -> RotationEncoding:
    """Encode ``theta`` in ``[theta_min, theta_max]``: endpoints go to angles pi and 0."""
    if not theta_min < theta_max:
        raise ValueError(f"empty interval [{theta_min}, {theta_max}]")
    if not theta_min <= theta <= theta_max:
        raise OutOfRange(f"{theta} outside [{theta_min}, {theta_max}]")
    # (theta - mid) / half_width, arranged so both endpoints evaluate to exactly -1 and +1
    c = ((theta - theta_min) - (theta_max - theta)) / (theta_max - theta_min)
    c = min(1.0, max(-1.0, c))
    return RotationEncoding(cos=c, sin=math.sqrt(1.0 - c * c), theta_min=theta_min, theta_max=theta_max)


@dataclass(frozen=True)
class FeatureBlock:
    values: np.ndarray
    block_dim: int

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).ravel()
        if self.block_dim < 1 or v.size % self.block_dim:
            raise ShapeMismatch(f"length {v.size} is not divisible by block size {self.block_dim}")
        if not np.all(np.isfinite(v)):
            raise ValueError("feature values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def blocks(self) -> np.ndarray:
        return self.values.reshape(-1, self.block_dim)

    @property
    def block_count(self) -> int:
        return self.values.size // self.block_dim

    @classmethod
    def from_points(cls, points) -> "FeatureBlock":
        """Stack homogeneous 4-vectors (or Cartesian 3-vectors, w = 1 appended)."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if pts.shape[1] == 3:
            pts = np.hstack([pts, np.ones((pts.shape[0], 1))])
        return cls(pts.ravel(), 4)


@dataclass(frozen=True)
class BlockDiagonalTransform:
    blocks: np.ndarray

    def __post_init__(self):
        b = np.array(self.blocks, dtype=np.float64)
        if b.ndim == 2:
            b = b[None]
        if b.ndim != 3 or b.shape[1] != b.shape[2]:
            raise ShapeMismatch(f"blocks must be (k, d, d), got {b.shape}")
        b.setflags(write=False)
        object.__setattr__(self, "blocks", b)

    @property
    def block_dim(self) -> int:
        return self.blocks.shape[1]

    @property
    def condition_numbers(self) -> np.ndarray:
        return np.linalg.cond(self.blocks)

    def norm_distortion(self) -> float:
        """Largest ``|sigma - 1|`` over all block singular values; 0 for orthogonal blocks."""
        s = np.linalg.svd(self.blocks, compute_uv=False)
        return float(np.max(np.abs(s - 1.0)))

    def inverse(self) -> "BlockDiagonalTransform":
        if np.any(self.condition_numbers > MAX_CONDITION):
            raise SingularTransform("a block is not invertible to working precision")
        return BlockDiagonalTransform(np.linalg.inv(self.blocks))

    def __matmul__(self, other: "BlockDiagonalTransform") -> "BlockDiagonalTransform":
        return BlockDiagonalTransform(np.matmul(self.blocks, other.blocks))

    @classmethod
    def from_encodings(cls, encodings) -> "BlockDiagonalTransform":
        return cls(np.stack([e.matrix for e in encodings]))


def ftl_apply(z: FeatureBlock, T: BlockDiagonalTransform) -> FeatureBlock:
    if z.block_dim != T.block_dim:
        raise ShapeMismatch(f"feature block size {z.block_dim} != transform block size {T.block_dim}")
    k = T.blocks.shape[0]
    if k not in (1, z.block_count):
        raise ShapeMismatch(f"{k} transform blocks for {z.block_count} feature blocks")
    out = np.einsum("kij,kj->ki", np.broadcast_to(T.blocks, (z.block_count,) + T.blocks.shape[1:]), z.blocks)
    return FeatureBlock(out.ravel(), z.block_dim)


def _checked_4x4(M) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.shape != (4, 4):
        raise ShapeMismatch(f"expected a 4x4 transform, got {M.shape}")
    if not np.all(np.isfinite(M)) or np.linalg.cond(M) > MAX_CONDITION:
        raise SingularTransform("4x4 transform is singular to working precision")
    return M


def ftl_canonicalize(z: FeatureBlock, world_from_cam) -> FeatureBlock:
    """Map camera-frame point features to world coordinates with one broadcast 4x4 block."""
    return ftl_apply(z, BlockDiagonalTransform(_checked_4x4(world_from_cam)))


def ftl_condition(z: FeatureBlock, cam_from_world) -> FeatureBlock:
    """Inverse direction of :func:`ftl_canonicalize`: world features into a camera frame."""
    return ftl_apply(z, BlockDiagonalTransform(_checked_4x4(cam_from_world)))


def rigid_transform(R, t) -> np.ndarray:
    T = np.eye(4)
    T[:3, :3] = R
    T[:3, 3] = t
    return T


def invert_rigid(T) -> np.ndarray:
    T = np.asarray(T, dtype=np.float64)
    R = T[:3, :3]
    return rigid_transform(R.T, -R.T @ T[:3, 3])


def rotation_from_axis_angle(axis, angle: float) -> np.ndarray:
    """Rodrigues' formula."""
    k = np.asarray(axis, dtype=np.float64)
    k = k / np.linalg.norm(k)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * K @ K
