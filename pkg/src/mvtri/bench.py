"""Batched solves on a thread pool and the SII-vs-oracle timing harness."""

from __future__ import annotations

import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .dlt import BatchResult, SiiConfig, build_dlt_batch, solve_oracle_batch, solve_sii_batch
from .synth import NoiseModel, RigConfig, sample_scene

THREADS_ENV = "MVTRI_THREADS"


def resolve_threads(requested: int | None = None) -> int:
    """Explicit request, else ``$MVTRI_THREADS``, else 1."""
    if requested is None:
        env = os.environ.get(THREADS_ENV)
        requested = int(env) if env else 1
    if requested < 1:
        raise ValueError(f"thread count must be >= 1, got {requested}")
    return requested


def _solve(A, method, cfg, items):
    if method == "sii":
        return solve_sii_batch(A, cfg, items=items)
    if method == "oracle":
        return solve_oracle_batch(A, cfg.w_epsilon)
    raise ValueError(f"unknown method {method!r}")


def solve_batch(A, method: str = "sii", cfg: SiiConfig = SiiConfig(), threads: int = 1, items=None) -> BatchResult:
    """Solve a batch, split into ``threads`` contiguous chunks run concurrently.

    Per-system RNG streams are keyed on ``items`` (default ``0..N-1``), so the
    numbers do not depend on the thread count.
    """
    A = np.asarray(A, dtype=np.float64)
    N = A.shape[0]
    items = np.arange(N) if items is None else np.asarray(items)
    if threads == 1 or N < 2 * threads:
        return _solve(A, method, cfg, items)
    bounds = np.linspace(0, N, threads + 1).astype(int)
    chunks = [(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda c: _solve(A[c[0] : c[1]], method, cfg, items[c[0] : c[1]]), chunks))
    return BatchResult(
        points=np.concatenate([p.points for p in parts]),
        x=np.concatenate([p.x for p in parts]),
        residual=np.concatenate([p.residual for p in parts]),
        at_infinity=np.concatenate([p.at_infinity for p in parts]),
        iterations_used=max(p.iterations_used for p in parts),
        method=parts[0].method,
    )


@dataclass(frozen=True)
class TimingRow:
    method: str
    batch: int
    threads: int
    reps: int
    median: float
    p10: float
    p90: float

    @property
    def throughput(self) -> float:
        return self.batch / self.median


def fingerprint(threads: int) -> dict:
    return {
        "threads": threads,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "machine": platform.machine(),
        "profile": "cpython-numpy-vectorized",
    }


def timing_systems(batch: int, noise_std: float = 5.0, seed: int = 0, rig=None) -> np.ndarray:
    """Pre-built DLT matrices for a timing run (construction is not timed)."""
    rig = rig or RigConfig().build()
    scene = sample_scene(rig, batch, noise=NoiseModel(noise_std, seed))
    return build_dlt_batch(scene.uv, rig.stack)


def time_solvers(
    batches,
    reps: int = 30,
    warmup: int = 3,
    threads: int = 1,
    cfg: SiiConfig = SiiConfig(),
    methods=("sii", "oracle"),
    seed: int = 0,
) -> list[TimingRow]:
    """Wall-clock statistics per (method, batch size) over ``reps`` timed runs."""
    if reps < 30:
        raise ValueError(f"need at least 30 repetitions, got {reps}")
    rows = []
    with threadpool_limits(limits=threads):
        for batch in batches:
            if batch < 1:
                raise ValueError(f"batch sizes must be >= 1, got {batch}")
            A = timing_systems(batch, seed=seed)
            for method in methods:
                for _ in range(warmup):
                    solve_batch(A, method, cfg, threads)
                samples = np.empty(reps)
                for r in range(reps):
                    t0 = time.perf_counter()
                    solve_batch(A, method, cfg, threads)
                    samples[r] = time.perf_counter() - t0
                p10, med, p90 = np.percentile(samples, [10, 50, 90])
                rows.append(TimingRow(method, batch, threads, reps, float(med), float(p10), float(p90)))
    return rows


def speedups(rows) -> dict:
    """Oracle median / SII median per batch size."""
    by = {(r.method, r.batch): r for r in rows}
    return {
        b: by[("oracle", b)].median / by[("sii", b)].median
        for (m, b) in by
        if m == "sii" and ("oracle", b) in by
    }
