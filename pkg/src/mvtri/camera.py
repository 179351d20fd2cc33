"""Pinhole cameras, projection and the camera JSON format.

World units are millimeters and image units pixels by convention; nothing
here depends on the choice.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateFrame, DepthDegenerate, RankDeficient

EPS_DEPTH = 1e-12


def as_projection(P) -> np.ndarray:
    """Validate and return ``P`` as a read-only float64 3x4 array."""
    P = np.array(P, dtype=np.float64)
    if P.shape != (3, 4):
        raise RankDeficient(f"projection matrix must be 3x4, got shape {P.shape}")
    if not np.all(np.isfinite(P)):
        raise RankDeficient("projection matrix has non-finite entries")
    if np.linalg.matrix_rank(P) < 3:
        raise RankDeficient("projection matrix is not rank 3")
    P.setflags(write=False)
    return P


def project(P, X, eps_depth: float = EPS_DEPTH) -> np.ndarray:
    """Project homogeneous world point(s) ``X`` (shape (4,) or (N, 4)) to pixels.

    Raises
    ------
    DepthDegenerate
        If any point has ``|p3 . X| <= eps_depth``.
    """
    P = np.asarray(P, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    # fixed summation order, so single and batched calls agree bit for bit
    h = X[..., 0, None] * P[:, 0]
    for k in range(1, 4):
        h = h + X[..., k, None] * P[:, k]
    depth = h[..., 2]
    if np.any(np.abs(depth) <= eps_depth):
        raise DepthDegenerate("point lies on the principal plane (p3 . X ~ 0)")
    return h[..., :2] / depth[..., None]


def homogenize(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.concatenate([X, np.ones(X.shape[:-1] + (1,))], axis=-1)


def lookat_camera(center, target, up, focal: float, principal_point) -> np.ndarray:
    """Build ``K [R | -R c]`` for a camera at ``center`` looking at ``target``.

    The camera frame is x right, y down, z forward, so image v grows
    opposite to ``up``.
    """
    center = np.asarray(center, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - center
    norm_f = np.linalg.norm(forward)
    if norm_f == 0.0 or not np.isfinite(norm_f):
        raise DegenerateFrame("camera center coincides with target")
    forward /= norm_f
    right = np.cross(forward, np.asarray(up, dtype=np.float64))
    norm_r = np.linalg.norm(right)
    if norm_r <= 1e-12 * max(1.0, np.linalg.norm(up)):
        raise DegenerateFrame("up vector is parallel to the viewing direction")
    right /= norm_r
    down = np.cross(forward, right)
    R = np.stack([right, down, forward])
    K = np.array(
        [
            [focal, 0.0, principal_point[0]],
            [0.0, focal, principal_point[1]],
            [0.0, 0.0, 1.0],
        ]
    )
    return as_projection(K @ np.hstack([R, (-R @ center)[:, None]]))


def camera_center(P) -> np.ndarray:
    """Center of projection: the right null vector of ``P``, dehomogenized."""
    _, _, vt = np.linalg.svd(np.asarray(P, dtype=np.float64))
    c = vt[-1]
    return c[:3] / c[3]


@dataclass(frozen=True)
class CameraRig:
    """Ordered cameras sharing an image size ``(W, H)`` in pixels."""

    cameras: tuple
    image_size: tuple[int, int]
    names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        cams = tuple(as_projection(P) for P in self.cameras)
        object.__setattr__(self, "cameras", cams)
        names = tuple(self.names) or tuple(f"cam{i}" for i in range(len(cams)))
        if len(names) != len(cams):
            raise ValueError("need exactly one name per camera")
        if len(set(names)) != len(names):
            raise ValueError("camera names must be unique")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "image_size", (int(self.image_size[0]), int(self.image_size[1])))

    def __len__(self) -> int:
        return len(self.cameras)

    @property
    def stack(self) -> np.ndarray:
        """Projection matrices as one (n, 3, 4) array."""
        return np.stack(self.cameras)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def project_all(self, X) -> np.ndarray:
        """Project Cartesian points (J, 3) into every view; returns (n, J, 2)."""
        Xh = homogenize(np.atleast_2d(X))
        return np.stack([project(P, Xh) for P in self.cameras])

    def to_json(self) -> dict:
        return {
            "image_size": list(self.image_size),
            "cameras": [
                {"name": name, "P": P.tolist()} for name, P in zip(self.names, self.cameras)
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "CameraRig":
        try:
            size = data["image_size"]
            entries = data["cameras"]
            names = [str(c["name"]) for c in entries]
            mats = [c["P"] for c in entries]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed camera file: missing {exc}") from exc
        if len(size) != 2:
            raise ValueError("image_size must be [W, H]")
        for name, P in zip(names, mats):
            if np.shape(P) != (3, 4):
                raise RankDeficient(f"camera {name!r}: P must be 3 rows of 4 numbers")
        return cls(cameras=tuple(mats), image_size=tuple(size), names=tuple(names))


def load_rig(path) -> CameraRig:
    with open(path) as fh:
        return CameraRig.from_json(json.load(fh))


def save_rig(rig: CameraRig, path) -> None:
    Path(path).write_text(json.dumps(rig.to_json(), indent=2))
