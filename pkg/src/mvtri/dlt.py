"""DLT triangulation: system assembly, eigensolver oracle and shifted inverse iterations.

All solvers work on a batch of DLT matrices of shape ``(N, 2n, 4)``; the
single-system functions are thin wrappers that run a batch of one, so both
paths produce bit-identical numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .camera import as_projection
from .errors import InsufficientViews, NumericalFailure, PointAtInfinity
from .linalg4 import inv4, jacobi_eigh4, spectral_norm
from .rng import DEFAULT_SEED, unit_sphere4

W_EPSILON = 1e-9


@dataclass(frozen=True)
class Observation:
    view: int
    uv: tuple[float, float]
    P: np.ndarray

    def __post_init__(self):
        uv = tuple(float(c) for c in self.uv)
        if len(uv) != 2 or not all(math.isfinite(c) for c in uv):
            raise ValueError(f"observation in view {self.view} has invalid pixel coordinates {self.uv!r}")
        object.__setattr__(self, "uv", uv)
        object.__setattr__(self, "P", as_projection(self.P))


@dataclass(frozen=True)
class DltSystem:
    """The 2n x 4 DLT matrix; rows 2i and 2i+1 come from view i."""

    A: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=np.float64)
        if A.ndim != 2 or A.shape[1] != 4 or A.shape[0] % 2:
            raise ValueError(f"DLT matrix must be (2n, 4), got {A.shape}")
        if A.shape[0] < 4:
            raise InsufficientViews(f"need at least 2 views, got {A.shape[0] // 2}")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @property
    def n(self) -> int:
        return self.A.shape[0] // 2


@dataclass(frozen=True)
class SiiConfig:
    iterations: int = 2
    shift: float = 1e-3
    seed: int = DEFAULT_SEED
    w_epsilon: float = W_EPSILON

    def __post_init__(self):
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ValueError(f"iterations must be a positive integer, got {self.iterations!r}")
        if not self.shift > 0:
            raise ValueError(f"shift must be positive, got {self.shift!r}")
        if not self.w_epsilon > 0:
            raise ValueError(f"w_epsilon must be positive, got {self.w_epsilon!r}")


@dataclass(frozen=True)
class TriangulationOutput:
    point: np.ndarray
    x: np.ndarray
    residual: float
    iterations_used: int
    method: str

    @property
    def at_infinity(self) -> bool:
        return not np.all(np.isfinite(self.point))


@dataclass(frozen=True)
class BatchResult:
    """Per-system arrays for a batch solve. ``points`` rows are NaN where ``at_infinity``."""

    points: np.ndarray
    x: np.ndarray
    residual: np.ndarray
    at_infinity: np.ndarray
    iterations_used: int
    method: str
    # iterates x_0 (start) .. x_T before sign canonicalization, SII only
    trace: list = field(default=None, repr=False)

    def __len__(self) -> int:
        return self.points.shape[0]

    def item(self, i: int) -> TriangulationOutput:
        return TriangulationOutput(
            point=self.points[i],
            x=self.x[i],
            residual=float(self.residual[i]),
            iterations_used=self.iterations_used,
            method=self.method,
        )


@dataclass(frozen=True)
class Theorem1Bound:
    constant: float
    noise_std: float

    @property
    def value(self) -> float:
        return self.constant * self.noise_std


# --------------------------------------------------------------------------- assembly


def build_dlt_matrix(observations) -> DltSystem:
    """Stack ``u p3 - p1`` and ``v p3 - p2`` for every observation."""
    observations = list(observations)
    if len(observations) < 2:
        raise InsufficientViews(f"need at least 2 views, got {len(observations)}")
    rows = []
    for obs in observations:
        u, v = obs.uv
        rows.append(u * obs.P[2] - obs.P[0])
        rows.append(v * obs.P[2] - obs.P[1])
    return DltSystem(np.array(rows))


def build_dlt_batch(uv, cameras) -> np.ndarray:
    """Vectorized assembly.

    Parameters
    ----------
    uv : array, shape (N, n, 2)
        Pixel observations of N points in n views.
    cameras : array, shape (n, 3, 4) or (N, n, 3, 4)
        Projection matrices, shared or per point.

    Returns
    -------
    array, shape (N, 2n, 4)
    """
    uv = np.asarray(uv, dtype=np.float64)
    P = np.asarray(cameras, dtype=np.float64)
    if uv.ndim != 3 or uv.shape[-1] != 2:
        raise ValueError(f"uv must be (N, n, 2), got {uv.shape}")
    N, n, _ = uv.shape
    if n < 2:
        raise InsufficientViews(f"need at least 2 views, got {n}")
    if P.ndim == 3:
        P = P[None]
    if P.shape[-3:] != (n, 3, 4):
        raise ValueError(f"cameras must be ({n}, 3, 4) or (N, {n}, 3, 4), got {P.shape}")
    A = np.empty((N, 2 * n, 4))
    A[:, 0::2] = uv[..., 0, None] * P[..., 2, :] - P[..., 0, :]
    A[:, 1::2] = uv[..., 1, None] * P[..., 2, :] - P[..., 1, :]
    return A


def gram(A: np.ndarray) -> np.ndarray:
    """``A^T A`` for a batch, (N, 2n, 4) -> (N, 4, 4)."""
    return np.einsum("nki,nkj->nij", A, A, optimize=False)


# --------------------------------------------------------------------------- shared helpers


def canonical_sign(x: np.ndarray, w_epsilon: float = W_EPSILON) -> np.ndarray:
    """Flip rows of ``x`` so that ``x[3] >= 0``.

    Rows with ``|x[3]| <= w_epsilon`` instead get a positive first nonzero
    component.
    """
    w = x[:, 3]
    first = x[np.arange(x.shape[0]), np.argmax(x != 0, axis=1)]
    ref = np.where(np.abs(w) > w_epsilon, w, first)
    return x * np.where(ref < 0, -1.0, 1.0)[:, None]


def dehomogenize(x: np.ndarray, w_epsilon: float = W_EPSILON):
    """Return Cartesian points and the at-infinity mask (NaN rows where masked)."""
    w = x[:, 3]
    at_inf = np.abs(w) <= w_epsilon
    safe = np.where(at_inf, 1.0, w)
    pts = x[:, :3] / safe[:, None]
    pts[at_inf] = np.nan
    return pts, at_inf


def _residuals(A: np.ndarray, x: np.ndarray) -> np.ndarray:
    r = np.einsum("nkj,nj->nk", A, x)
    return np.sqrt(np.einsum("nk,nk->n", r, r))


def _finish(A, x, w_epsilon, iterations, method, trace=None) -> BatchResult:
    x = canonical_sign(x, w_epsilon)
    pts, at_inf = dehomogenize(x, w_epsilon)
    return BatchResult(
        points=pts,
        x=x,
        residual=_residuals(A, x),
        at_infinity=at_inf,
        iterations_used=iterations,
        method=method,
        trace=trace,
    )


def _as_batch(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 2:
        A = A[None]
    if A.ndim != 3 or A.shape[2] != 4 or A.shape[1] % 2 or A.shape[1] < 4:
        raise ValueError(f"expected DLT matrices of shape (N, 2n>=4, 4), got {A.shape}")
    return A


def _single(result: BatchResult) -> TriangulationOutput:
    out = result.item(0)
    if out.at_infinity:
        raise PointAtInfinity(
            f"homogeneous solution has |w| = {abs(out.x[3]):.3g} <= w_epsilon", output=out
        )
    return out


# --------------------------------------------------------------------------- oracle


def min_eigvecs(M: np.ndarray):
    """Smallest eigenpair of each symmetric 4x4 in ``M`` by cyclic Jacobi."""
    w, v, sweeps = jacobi_eigh4(M)
    k = np.argmin(w, axis=1)
    idx = np.arange(M.shape[0])
    return w[idx, k], v[idx, :, k], sweeps


def solve_oracle_batch(A, w_epsilon: float = W_EPSILON) -> BatchResult:
    """Exact minimizer of ``||A x||`` on the unit sphere for every system."""
    A = _as_batch(A)
    _, x, sweeps = min_eigvecs(gram(A))
    return _finish(A, x, w_epsilon, sweeps, "oracle")


def triangulate_oracle(sys: DltSystem, w_epsilon: float = W_EPSILON) -> TriangulationOutput:
    """Eigensolver triangulation of one system.

    Raises
    ------
    PointAtInfinity
        When the solution cannot be dehomogenized; ``exc.output`` still holds it.
    """
    return _single(solve_oracle_batch(sys.A, w_epsilon))


# --------------------------------------------------------------------------- SII


def sii_start(seed: int, items, stream: int = 0) -> np.ndarray:
    """Random unit start vectors; a pure function of ``(seed, item, stream)``."""
    return unit_sphere4(seed, items, stream)


def sii_operator(M: np.ndarray, shift: float) -> np.ndarray:
    """``(M + shift I)^-1`` by closed-form cofactor inversion."""
    return inv4(M + shift * np.eye(4))


def _iterate(B, x, iterations, trace):
    if trace is not None:
        trace.append(x.copy())
    for _ in range(iterations):
        x = np.einsum("nij,nj->ni", B, x)
        norm = np.sqrt(np.einsum("ni,ni->n", x, x))
        bad = ~np.isfinite(norm) | (norm <= np.finfo(float).tiny)
        x = x / np.where(bad, 1.0, norm)[:, None]
        if trace is not None:
            trace.append(x.copy())
        if bad.any():
            return x, bad
    return x, np.zeros(x.shape[0], dtype=bool)


def solve_sii_batch(A, cfg: SiiConfig = SiiConfig(), items=None, return_trace: bool = False) -> BatchResult:
    """Shifted inverse iterations on ``A^T A`` for a batch of systems.

    ``items`` are the RNG stream indices of the systems (default ``0..N-1``);
    pass explicit indices to make a sub-batch reproduce the full-batch draws.
    Systems whose iterate collapses are restarted once from an independent
    stream; a second collapse raises :class:`NumericalFailure`.
    """
    A = _as_batch(A)
    N = A.shape[0]
    items = np.arange(N) if items is None else np.asarray(items)
    B = sii_operator(gram(A), cfg.shift)
    trace = [] if return_trace else None
    x, bad = _iterate(B, sii_start(cfg.seed, items), cfg.iterations, trace)
    if bad.any():
        idx = np.flatnonzero(bad)
        retry_trace = [] if return_trace else None
        x_retry, bad_retry = _iterate(
            B[idx], sii_start(cfg.seed, items[idx], stream=1), cfg.iterations, retry_trace
        )
        if bad_retry.any():
            raise NumericalFailure(
                f"{int(bad_retry.sum())} system(s) collapsed during inverse iteration after a re-draw"
            )
        x[idx] = x_retry
        if return_trace:
            for full, part in zip(trace, retry_trace):
                full[idx] = part
    return _finish(A, x, cfg.w_epsilon, cfg.iterations, "sii", trace)


def triangulate_sii(sys: DltSystem, cfg: SiiConfig = SiiConfig(), item: int = 0) -> TriangulationOutput:
    """Triangulate one system with ``cfg.iterations`` shifted inverse iterations."""
    return _single(solve_sii_batch(sys.A, cfg, items=[item]))


# --------------------------------------------------------------------------- bounds


def smallest_singular_values(A) -> np.ndarray:
    """``sigma_min`` of each system, evaluated as ``||A v||`` at the Jacobi minimizer ``v``.

    Equal to ``sqrt(lambda_min(A^T A))`` mathematically, but does not lose the
    bottom half of the digits to squaring.
    """
    A = _as_batch(A)
    _, v, _ = min_eigvecs(gram(A))
    return _residuals(A, v)


def smallest_singular_value(sys: DltSystem) -> float:
    return float(smallest_singular_values(sys.A)[0])


def third_row_stack(cameras) -> np.ndarray:
    """The 2n x 4 matrix with each camera's third row repeated twice."""
    return np.repeat(np.stack([np.asarray(P, dtype=np.float64)[2] for P in cameras]), 2, axis=0)


def theorem1_constant(cameras) -> float:
    """Noise-to-``sigma_min`` slope ``2n sqrt(2/pi) ||P||_2`` for the rig."""
    cameras = list(cameras)
    if len(cameras) < 2:
        raise InsufficientViews(f"need at least 2 cameras, got {len(cameras)}")
    n = len(cameras)
    return 2 * n * math.sqrt(2 / math.pi) * spectral_norm(third_row_stack(cameras))


def theorem1_bound(cameras, noise_std: float) -> Theorem1Bound:
    if noise_std < 0:
        raise ValueError("noise std must be nonnegative")
    return Theorem1Bound(theorem1_constant(cameras), float(noise_std))
