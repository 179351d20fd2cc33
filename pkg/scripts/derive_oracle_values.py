"""Brute-force minimizers of ||A x|| on the unit sphere, used to freeze test constants.

Independent of the package's eigensolvers: a random sphere sample picks the
basin, then Nelder-Mead polishes the Rayleigh quotient in extended precision
(mpmath) on a column-scaled parameterization.

    python scripts/derive_oracle_values.py
"""

import mpmath
import numpy as np
from scipy.optimize import minimize

from mvtri.dlt import build_dlt_batch
from mvtri.synth import NoiseModel, RigConfig, sample_scene

mpmath.mp.dps = 40

CASES = [  # (seed, noise std px, joints)
    (20201, 5.0, 3),
]


def brute_force_min(A, samples=400_000, seed=0):
    rng = np.random.default_rng(seed)
    S = rng.standard_normal((samples, 4))
    S /= np.linalg.norm(S, axis=1, keepdims=True)
    vals = np.linalg.norm(S @ A.T, axis=1)
    x0 = S[np.argmin(vals)]

    Amp = mpmath.matrix(A.tolist())
    scale = np.linalg.norm(A, axis=0)  # change of variables y = scale * x

    def obj(y):
        x = mpmath.matrix((y / scale).tolist())
        r = Amp * x
        return float(mpmath.sqrt(sum(v**2 for v in r) / sum(v**2 for v in x)))

    res = minimize(obj, x0 * scale, method="Nelder-Mead",
                   options={"xatol": 1e-14, "fatol": 1e-16, "maxiter": 40000, "maxfev": 80000})
    y = res.x
    for _ in range(3):
        res = minimize(obj, y, method="Nelder-Mead",
                       options={"xatol": 1e-15, "fatol": 1e-18, "maxiter": 40000, "maxfev": 80000})
        y = res.x
    return float(vals.min()), res.fun


def main():
    rig = RigConfig().build()
    for seed, s, J in CASES:
        scene = sample_scene(rig, J, noise=NoiseModel(s, seed))
        A = build_dlt_batch(scene.uv, rig.stack)
        for j in range(J):
            coarse, fine = brute_force_min(A[j], seed=j)
            print(f"seed={seed} s={s} joint={j}: sample min {coarse:.10g}, polished {fine!r}")


if __name__ == "__main__":
    main()
