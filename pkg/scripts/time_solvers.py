"""Single-threaded median solve times of SII (T=2) and the Jacobi oracle.

    python scripts/time_solvers.py --batches 1,64,1024,4096,16384
"""

import argparse

from mvtri.bench import fingerprint, speedups, time_solvers


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batches", default="1,64,1024,4096,16384")
    ap.add_argument("--reps", type=int, default=30)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    batches = [int(b) for b in args.batches.split(",")]
    rows = time_solvers(batches, reps=args.reps, threads=args.threads)
    print(fingerprint(args.threads))
    print(f"{'method':>7} {'batch':>6} {'median ms':>10} {'p10 ms':>8} {'p90 ms':>8} {'pts/s':>12}")
    for r in rows:
        print(f"{r.method:>7} {r.batch:>6} {r.median * 1e3:10.3f} {r.p10 * 1e3:8.3f} {r.p90 * 1e3:8.3f} {r.throughput:12.0f}")
    for b, s in sorted(speedups(rows).items()):
        print(f"batch {b}: oracle / SII = {s:.2f}x")


if __name__ == "__main__":
    main()
