"""How fast SII converges on the default ring: the contraction (l4 + shift) / (l3 + shift).

Prints quantiles of the per-step ratio, in the eigenvalues of A^T A, over a
range of noise levels, and the iteration count that brings the 99th
percentile below 1e-6. Useful for choosing T on a new rig.

    python scripts/convergence_ratio.py
"""

import argparse

import numpy as np

from mvtri.dlt import build_dlt_batch, gram
from mvtri.synth import NoiseModel, RigConfig, sample_scene


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shift", type=float, default=1e-3)
    ap.add_argument("--joints", type=int, default=2000)
    args = ap.parse_args()

    rig = RigConfig().build()
    print(f"{'s px':>6} {'median rho':>11} {'p99 rho':>9} {'T for 1e-6':>11}")
    for s in (1.0, 5.0, 10.0, 20.0, 40.0, 56.0):
        scene = sample_scene(rig, args.joints, noise=NoiseModel(s, 1))
        w = np.sort(np.linalg.eigvalsh(gram(build_dlt_batch(scene.uv, rig.stack))), axis=1)
        rho = (w[:, 0] + args.shift) / (w[:, 1] + args.shift)
        p50, p99 = np.quantile(rho, [0.5, 0.99])
        steps = int(np.ceil(np.log(1e-6) / np.log(p99))) if p99 < 1 else -1
        print(f"{s:6.1f} {p50:11.2e} {p99:9.2e} {steps:11d}")


if __name__ == "__main__":
    main()
