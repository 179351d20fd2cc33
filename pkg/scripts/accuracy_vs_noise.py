"""3D-MPJPE of the Jacobi oracle and of SII with a few iteration counts, against 2D noise.

    python scripts/accuracy_vs_noise.py --out results/ --iters 1,2,5,20
"""

import argparse
from pathlib import Path

import numpy as np

from mvtri.io import write_table
from mvtri.svg import line_plot
from mvtri.synth import RigConfig, noise_accuracy_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--iters", default="1,2,5,20")
    ap.add_argument("--max-2d", type=float, default=70.0, help="largest view-averaged 2D-MPJPE (px)")
    args = ap.parse_args()

    T_list = tuple(int(t) for t in args.iters.split(","))
    grid = np.linspace(0.0, args.max_2d / np.sqrt(np.pi / 2), 11)
    rows = noise_accuracy_sweep(RigConfig().build(), grid, trials=args.trials, T_list=T_list)

    args.out.mkdir(parents=True, exist_ok=True)
    header = ["s", "mpjpe2d", "mpjpe3d_oracle"] + [f"mpjpe3d_sii_T{T}" for T in T_list] + ["excluded"]
    write_table(args.out / "sweep_accuracy.csv", header,
                [[r.s, r.mpjpe2d, r.mpjpe3d_oracle, *[r.mpjpe3d_sii[T] for T in T_list], r.excluded] for r in rows])
    series = {"oracle": [r.mpjpe3d_oracle for r in rows]}
    series.update({f"SII T={T}": [r.mpjpe3d_sii[T] for r in rows] for T in T_list})
    line_plot(args.out / "sweep_accuracy.svg", [r.mpjpe2d for r in rows], series,
              "2D-MPJPE (px)", "3D-MPJPE (mm)", "DLT accuracy vs 2D noise")

    print(f"{'2D px':>7} {'oracle':>10} " + " ".join(f"{'T=' + str(T):>10}" for T in T_list) + "   rel diff per T")
    for r in rows:
        rel = ["-" if r.s == 0 else f"{abs(r.mpjpe3d_sii[T] - r.mpjpe3d_oracle) / r.mpjpe3d_oracle:.1e}" for T in T_list]
        print(f"{r.mpjpe2d:7.2f} {r.mpjpe3d_oracle:10.3f} " + " ".join(f"{r.mpjpe3d_sii[T]:10.3f}" for T in T_list)
              + "   " + " ".join(rel))


if __name__ == "__main__":
    main()
