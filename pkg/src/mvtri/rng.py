"""Counter-based SplitMix64 streams.

Every draw is a pure function of ``(seed, item, counter)`` so batched solves
give identical start vectors regardless of batch layout or thread count.
"""

from __future__ import annotations

import numpy as np

DEFAULT_SEED = 0x5EED_D17_2020

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def splitmix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer applied elementwise to a uint64 array."""
    z = np.asarray(x, dtype=np.uint64) + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MUL1
    z = (z ^ (z >> np.uint64(27))) * _MUL2
    return z ^ (z >> np.uint64(31))


def item_keys(seed: int, items: np.ndarray) -> np.ndarray:
    """Per-item stream keys derived from the global seed."""
    seed_arr = np.full(np.shape(items), seed & _MASK64, dtype=np.uint64)
    return splitmix64(seed_arr ^ splitmix64(np.asarray(items, dtype=np.uint64)))


def uniforms(keys: np.ndarray, counters: np.ndarray) -> np.ndarray:
    """Doubles in [0, 1) at the given counter positions of each stream."""
    z = splitmix64(keys + np.asarray(counters, dtype=np.uint64) * _GOLDEN)
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def unit_sphere4(seed: int, items, stream: int = 0) -> np.ndarray:
    """Uniform unit vectors in R^4, one per item, by rejection from the cube.

    Candidates are drawn from [-1, 1]^4 and kept when they land inside the
    unit ball (and away from the origin), then normalized. ``stream`` selects
    an independent sub-stream, used for re-draws.
    """
    items = np.atleast_1d(np.asarray(items, dtype=np.uint64))
    keys = item_keys(seed ^ (stream * 0xA24BAED4963EE407), items)
    out = np.empty((items.size, 4))
    pending = np.arange(items.size)
    attempt = 0
    while pending.size:
        base = np.uint64(4 * attempt)
        counters = base + np.arange(4, dtype=np.uint64)
        cand = 2.0 * uniforms(keys[pending, None], counters[None, :]) - 1.0
        r2 = np.einsum("ij,ij->i", cand, cand)
        ok = (r2 <= 1.0) & (r2 > 1e-12)
        out[pending[ok]] = cand[ok] / np.sqrt(r2[ok])[:, None]
        pending = pending[~ok]
        attempt += 1
    return out


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """PCG64 generator for one trial, keyed on ``(seed, index)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed & _MASK64, index])))
