"""Synthetic camera rings, sampled scenes and the Monte-Carlo sweeps for the DLT accuracy studies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .camera import CameraRig, homogenize, lookat_camera
from .diffops import mpjpe_2d
from .dlt import (
    SiiConfig,
    build_dlt_batch,
    smallest_singular_values,
    solve_oracle_batch,
    solve_sii_batch,
    theorem1_constant,
)
from .errors import OutOfFrustum
from .rng import DEFAULT_SEED, trial_rng

DEFAULT_BBOX = ((-250.0, -250.0, -250.0), (250.0, 250.0, 250.0))
DEFAULT_JOINTS = 17


@dataclass(frozen=True)
class RigConfig:
    n_cameras: int = 4
    radius: float = 3000.0
    height: float = 1500.0
    focal: float = 1150.0
    image_size: tuple[int, int] = (256, 256)

    def build(self) -> CameraRig:
        return make_camera_ring(self.n_cameras, self.radius, self.height, self.focal, self.image_size)


@dataclass(frozen=True)
class NoiseModel:
    std: float = 0.0
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not self.std >= 0:
            raise ValueError(f"noise std must be >= 0, got {self.std}")


@dataclass(frozen=True)
class SyntheticScene:
    rig: CameraRig
    joints: np.ndarray  # (J, 3) mm
    clean: np.ndarray  # (n, J, 2) px
    noisy: np.ndarray  # (n, J, 2) px
    noise: NoiseModel = field(default_factory=NoiseModel)

    @property
    def uv(self) -> np.ndarray:
        """Noisy observations arranged per point, (J, n, 2), as the batch solvers expect."""
        return np.transpose(self.noisy, (1, 0, 2))


def make_camera_ring(
    n: int = 4,
    radius: float = 3000.0,
    height: float = 1500.0,
    focal: float = 1150.0,
    image_size=(256, 256),
) -> CameraRig:
    """``n`` cameras evenly spaced on the circle ``x^2 + y^2 = radius^2`` at ``z = height``,
    all looking at the origin with z up."""
    if n < 2:
        raise ValueError(f"a ring needs at least 2 cameras, got {n}")
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    W, H = image_size
    cams = []
    for k in range(n):
        a = 2 * math.pi * k / n
        center = (radius * math.cos(a), radius * math.sin(a), height)
        cams.append(lookat_camera(center, (0.0, 0.0, 0.0), (0.0, 0.0, 1.0), focal, (W / 2, H / 2)))
    return CameraRig(tuple(cams), (W, H))


def in_frustum(rig: CameraRig, X) -> np.ndarray:
    """Mask of points in front of every camera and inside every image."""
    Xh = homogenize(np.atleast_2d(X))
    W, H = rig.image_size
    ok = np.ones(Xh.shape[0], dtype=bool)
    for P in rig.cameras:
        h = Xh @ P.T
        depth = h[:, 2]
        front = depth > 0
        u = h[:, 0] / np.where(front, depth, 1.0)
        v = h[:, 1] / np.where(front, depth, 1.0)
        ok &= front & (u >= 0) & (u < W) & (v >= 0) & (v < H)
    return ok


def sample_scene(
    rig: CameraRig,
    J: int = DEFAULT_JOINTS,
    bbox=DEFAULT_BBOX,
    noise: NoiseModel = NoiseModel(),
    max_resample: int = 100,
    trial: int = 0,
) -> SyntheticScene:
    """Uniform joints in ``bbox`` plus i.i.d. Gaussian pixel noise.

    Joints that leave some camera's image are redrawn, at most
    ``max_resample`` rounds. Everything is a pure function of
    ``(noise.seed, trial)``.
    """
    lo, hi = (np.asarray(b, dtype=np.float64) for b in bbox)
    gen = trial_rng(noise.seed, trial)
    joints = gen.uniform(lo, hi, size=(J, 3))
    bad = ~in_frustum(rig, joints)
    rounds = 0
    while bad.any():
        if rounds == max_resample:
            raise OutOfFrustum(f"{int(bad.sum())} joint(s) still outside the image after {max_resample} redraws")
        joints[bad] = gen.uniform(lo, hi, size=(int(bad.sum()), 3))
        bad = ~in_frustum(rig, joints)
        rounds += 1
    clean = rig.project_all(joints)
    unit = gen.standard_normal(clean.shape)
    noisy = clean.copy() if noise.std == 0 else clean + noise.std * unit
    return SyntheticScene(rig=rig, joints=joints, clean=clean, noisy=noisy, noise=noise)


def _scene_bank(rig, trials, J, bbox, seed):
    """Joints, clean projections and unit noise for every trial, stacked."""
    scenes = [sample_scene(rig, J, bbox, NoiseModel(1.0, seed), trial=t) for t in range(trials)]
    joints = np.stack([s.joints for s in scenes])  # (trials, J, 3)
    clean = np.stack([s.clean for s in scenes])  # (trials, n, J, 2)
    unit = np.stack([s.noisy - s.clean for s in scenes])
    return joints, clean, unit


@dataclass(frozen=True)
class SingularRow:
    s: float
    mean_sigma_min: float
    bound: float


def sigma_min_sweep(
    rig: CameraRig,
    s_grid,
    trials: int = 2000,
    seed: int = DEFAULT_SEED,
    J: int = 1,
    bbox=DEFAULT_BBOX,
) -> list[SingularRow]:
    """Monte-Carlo mean of ``sigma_min(A*)`` against the bound ``C s``.

    ``J`` fixed joints are drawn once; each trial perturbs them with fresh unit
    noise scaled by every ``s`` (common random numbers across the grid).
    """
    if trials < 100:
        raise ValueError(f"need at least 100 trials, got {trials}")
    C = theorem1_constant(rig.cameras)
    base = sample_scene(rig, J, bbox, NoiseModel(0.0, seed))
    n = len(rig)
    unit = np.stack([trial_rng(seed, t + 1).standard_normal((J, n, 2)) for t in range(trials)])
    clean = np.broadcast_to(np.transpose(base.clean, (1, 0, 2)), unit.shape)
    rows = []
    for s in s_grid:
        uv = clean + s * unit if s else clean
        A = build_dlt_batch(uv.reshape(-1, n, 2), rig.stack)
        rows.append(SingularRow(float(s), float(smallest_singular_values(A).mean()), C * float(s)))
    return rows


@dataclass(frozen=True)
class AccuracyRow:
    s: float
    mpjpe2d: float
    mpjpe3d_oracle: float
    mpjpe3d_sii: dict  # iterations -> mean 3D-MPJPE
    excluded: int


def noise_accuracy_sweep(
    rig: CameraRig,
    s_grid,
    trials: int = 500,
    T_list=(1, 2),
    seed: int = DEFAULT_SEED,
    J: int = DEFAULT_JOINTS,
    bbox=DEFAULT_BBOX,
    shift: float = 1e-3,
) -> list[AccuracyRow]:
    """Mean 2D-MPJPE of the noisy input and mean 3D-MPJPE of each solver per noise level.

    Trial ``t`` is a fresh scene; its unit noise is shared across the grid.
    2D-MPJPE is measured against the noise-free projections and averaged over
    views. A trial is excluded when any solver puts one of its joints at
    infinity.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    n = len(rig)
    joints, clean, unit = _scene_bank(rig, trials, J, bbox, seed)
    gt = joints.reshape(-1, 3)
    items = np.arange(trials * J)
    rows = []
    for s in s_grid:
        noisy = clean + s * unit if s else clean
        uv = np.transpose(noisy, (0, 2, 1, 3)).reshape(-1, n, 2)
        A = build_dlt_batch(uv, rig.stack)
        results = {"oracle": solve_oracle_batch(A)}
        for T in T_list:
            results[T] = solve_sii_batch(A, SiiConfig(iterations=T, shift=shift, seed=seed), items=items)
        bad = np.zeros(trials, dtype=bool)
        for res in results.values():
            bad |= res.at_infinity.reshape(trials, J).any(axis=1)
        keep = ~bad

        def err3d(res):
            e = np.linalg.norm(res.points - gt, axis=1).reshape(trials, J)
            return float(e[keep].mean()) if keep.any() else math.nan

        e2d = [mpjpe_2d(noisy[t], clean[t], normalize=True) for t in np.flatnonzero(keep)]
        rows.append(
            AccuracyRow(
                s=float(s),
                mpjpe2d=float(np.mean(e2d)) if e2d else math.nan,
                mpjpe3d_oracle=err3d(results["oracle"]),
                mpjpe3d_sii={T: err3d(results[T]) for T in T_list},
                excluded=int(bad.sum()),
            )
        )
    return rows
