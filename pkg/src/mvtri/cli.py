"""``mvtri`` command line: triangulate files, run the DLT sweeps, time the solvers."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .bench import fingerprint, resolve_threads, solve_batch, speedups, time_solvers
from .camera import load_rig
from .diffops import read_heatmaps, soft_argmax_all, write_joints_csv
from .dlt import SiiConfig, build_dlt_batch
from .errors import MvtriError, NumericalFailure
from .ftl import encode_scalar
from .rng import DEFAULT_SEED
from .svg import line_plot
from .synth import DEFAULT_BBOX, RigConfig, noise_accuracy_sweep, sigma_min_sweep

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    out_dir: Path
    fmt: str = "csv"
    svg: bool = False
    cameras: Path | None = None
    observations: Path | None = None
    heatmaps: Path | None = None
    rig: RigConfig = field(default_factory=RigConfig)
    method: str = "sii"
    sii: SiiConfig = field(default_factory=SiiConfig)
    noise_grid: tuple = ()
    trials: int = 0
    iters_list: tuple = (1, 2)
    joints: int = 0
    batches: tuple = ()
    reps: int = 30
    warmup: int = 3
    threads: int = 1
    theta_range: tuple = (0.0, 1.0)
    values: tuple = ()

    def output(self, name: str) -> Path:
        path = (self.out_dir / name).resolve()
        if self.out_dir.resolve() not in path.parents:
            raise UsageError(f"refusing to write outside --out-dir: {path}")
        return path


def _floats(text: str) -> tuple:
    """Comma list of numbers; ``a:b`` or ``a:b:step`` expands to an inclusive range."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            bits = [float(b) for b in part.split(":")]
            start, stop = bits[0], bits[1]
            step = bits[2] if len(bits) == 3 else 1.0
            if step <= 0:
                raise argparse.ArgumentTypeError(f"range step must be positive in {part!r}")
            out.extend(np.arange(start, stop + step / 2, step).tolist())
        else:
            out.append(float(part))
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return tuple(out)


def _ints(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mvtri", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out-dir", type=Path, default=Path("mvtri_out"))
        sp.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)

    def solver(sp):
        sp.add_argument("--iters", type=int, default=2)
        sp.add_argument("--shift", type=float, default=1e-3)
        sp.add_argument("--threads", type=int, default=None)

    def rig(sp):
        sp.add_argument("--cameras", type=Path, help="camera JSON; overrides the ring parameters")
        sp.add_argument("--n-cameras", type=int, default=4)
        sp.add_argument("--radius", type=float, default=3000.0)
        sp.add_argument("--height", type=float, default=1500.0)
        sp.add_argument("--focal", type=float, default=1150.0)
        sp.add_argument("--image-size", type=_ints, default=(256, 256))
        sp.add_argument("--svg", action="store_true", help="also write an SVG line plot")

    sp = sub.add_parser("triangulate", help="triangulate an observation CSV")
    common(sp)
    solver(sp)
    sp.add_argument("--cameras", type=Path, required=True)
    sp.add_argument("--observations", type=Path, required=True)
    sp.add_argument("--method", choices=("sii", "oracle"), default="sii")

    sp = sub.add_parser("sweep-singular", help="mean sigma_min(A*) vs noise, with the C s bound")
    common(sp)
    rig(sp)
    sp.add_argument("--noise-grid", type=_floats, default=_floats("0:20"))
    sp.add_argument("--trials", type=int, default=2000)
    sp.add_argument("--joints", type=int, default=1)

    sp = sub.add_parser("sweep-accuracy", help="3D-MPJPE of oracle and SII vs 2D noise")
    common(sp)
    rig(sp)
    sp.add_argument("--shift", type=float, default=1e-3)
    sp.add_argument("--noise-grid", type=_floats, default=_floats("0:55:5"))
    sp.add_argument("--trials", type=int, default=500)
    sp.add_argument("--iters-list", type=_ints, default=(1, 2))
    sp.add_argument("--joints", type=int, default=17)

    sp = sub.add_parser("timing", help="median solve time of SII vs the Jacobi oracle")
    common(sp)
    solver(sp)
    sp.add_argument("--batches", type=_ints, default=(1, 64, 1024, 4096))
    sp.add_argument("--reps", type=int, default=30)
    sp.add_argument("--warmup", type=int, default=3)

    sp = sub.add_parser("ftl-demo", help="print circle encodings of scalars")
    sp.add_argument("--theta-min", type=float, default=0.0)
    sp.add_argument("--theta-max", type=float, default=1.0)
    sp.add_argument("--values", type=_floats, default=_floats("0:1:0.25"))

    sp = sub.add_parser("decode", help="soft-argmax a heatmap file into joint CSV")
    common(sp)
    sp.add_argument("--heatmaps", type=Path, required=True)
    return p


def to_config(args) -> RunConfig:
    cfg = RunConfig(command=args.command, out_dir=getattr(args, "out_dir", Path(".")))
    cfg.fmt = getattr(args, "fmt", "csv")
    seed = getattr(args, "seed", DEFAULT_SEED)
    try:
        if hasattr(args, "iters"):
            cfg.sii = SiiConfig(iterations=args.iters, shift=args.shift, seed=seed)
            cfg.threads = resolve_threads(args.threads)
        elif hasattr(args, "shift"):
            cfg.sii = SiiConfig(shift=args.shift, seed=seed)
        else:
            cfg.sii = SiiConfig(seed=seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.command == "triangulate":
        cfg.cameras, cfg.observations, cfg.method = args.cameras, args.observations, args.method
    if args.command in ("sweep-singular", "sweep-accuracy"):
        if len(args.image_size) != 2:
            raise UsageError("--image-size needs W,H")
        if args.n_cameras < 2:
            raise UsageError("--n-cameras must be at least 2")
        if args.radius <= 0:
            raise UsageError("--radius must be positive")
        cfg.cameras = args.cameras
        cfg.rig = RigConfig(args.n_cameras, args.radius, args.height, args.focal, tuple(args.image_size))
        cfg.noise_grid, cfg.trials, cfg.joints, cfg.svg = args.noise_grid, args.trials, args.joints, args.svg
        if any(s < 0 for s in cfg.noise_grid):
            raise UsageError("noise levels must be >= 0")
        if cfg.joints < 1:
            raise UsageError("--joints must be >= 1")
        if args.command == "sweep-singular" and cfg.trials < 100:
            raise UsageError(f"--trials must be at least 100, got {cfg.trials}")
        if args.command == "sweep-accuracy":
            if cfg.trials < 1:
                raise UsageError(f"--trials must be positive, got {cfg.trials}")
            if not args.iters_list or min(args.iters_list) < 1:
                raise UsageError("--iters-list entries must be >= 1")
            cfg.iters_list = args.iters_list
    if args.command == "timing":
        if not args.batches or min(args.batches) < 1:
            raise UsageError("--batches entries must be >= 1")
        if args.reps < 30:
            raise UsageError("--reps must be at least 30")
        if args.warmup < 0:
            raise UsageError("--warmup must be >= 0")
        cfg.batches, cfg.reps, cfg.warmup = args.batches, args.reps, args.warmup
    if args.command == "ftl-demo":
        if not args.theta_min < args.theta_max:
            raise UsageError("--theta-min must be below --theta-max")
        cfg.theta_range, cfg.values = (args.theta_min, args.theta_max), args.values
    if args.command == "decode":
        cfg.heatmaps = args.heatmaps
    return cfg


# --------------------------------------------------------------------------- commands


def cmd_triangulate(cfg: RunConfig) -> int:
    rig = load_rig(cfg.cameras)
    records = io.read_observations(cfg.observations, rig.names)
    points: dict = {}
    for rec in records:
        points.setdefault((rec.frame, rec.joint), []).append(rec)
    keys = sorted(points)
    item_of = {k: i for i, k in enumerate(keys)}
    # group points by the exact camera set so each group is one batch
    groups: dict = {}
    for key in keys:
        cams = tuple(sorted(rig.index(r.camera) for r in points[key]))
        groups.setdefault(cams, []).append(key)
    out = {}
    for cams, gkeys in groups.items():
        if len(cams) < 2:
            for key in gkeys:
                out[key] = None
            continue
        uv = np.array(
            [[next((r.u, r.v) for r in points[k] if rig.index(r.camera) == c) for c in cams] for k in gkeys]
        )
        A = build_dlt_batch(uv, rig.stack[list(cams)])
        res = solve_batch(A, cfg.method, cfg.sii, cfg.threads, items=[item_of[k] for k in gkeys])
        for i, key in enumerate(gkeys):
            out[key] = (res.points[i], res.residual[i], res.iterations_used, bool(res.at_infinity[i]))

    rows = []
    for key in keys:
        frame, joint = key
        r = out[key]
        if r is None:
            rows.append([frame, joint, None, None, None, None, None, cfg.method, "insufficient_views"])
            continue
        p, resid, iters, inf = r
        flag = "point_at_infinity" if inf else "ok"
        xyz = [None] * 3 if inf else list(p)
        rows.append([frame, joint, *xyz, resid, iters, cfg.method, flag])
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.fmt == "json":
        recs = [{h: _jsonable(v) for h, v in zip(io.TRI_HEADER, row)} for row in rows]
        io.write_json(cfg.output("triangulated.json"), {"points": recs})
    else:
        io.write_table(cfg.output("triangulated.csv"), io.TRI_HEADER, rows)
    return EXIT_OK


def _rig_for(cfg: RunConfig):
    return load_rig(cfg.cameras) if cfg.cameras else cfg.rig.build()


def cmd_sweep_singular(cfg: RunConfig) -> int:
    rig = _rig_for(cfg)
    rows = sigma_min_sweep(rig, cfg.noise_grid, cfg.trials, cfg.sii.seed, J=cfg.joints, bbox=DEFAULT_BBOX)
    header = ["s", "mean_sigma_min", "bound"]
    table = [[r.s, r.mean_sigma_min, r.bound] for r in rows]
    _write(cfg, "sweep_singular", header, table)
    if cfg.svg:
        s = [r.s for r in rows]
        line_plot(
            cfg.output("sweep_singular.svg"),
            s,
            {"mean sigma_min(A*)": [r.mean_sigma_min for r in rows]},
            "noise std s (px)",
            "E[sigma_min(A*)]",
            "smallest singular value vs noise",
        )
    return EXIT_OK


def cmd_sweep_accuracy(cfg: RunConfig) -> int:
    rig = _rig_for(cfg)
    rows = noise_accuracy_sweep(
        rig, cfg.noise_grid, cfg.trials, cfg.iters_list, cfg.sii.seed, J=cfg.joints, shift=cfg.sii.shift
    )
    header = ["s", "mpjpe2d", "mpjpe3d_oracle"] + [f"mpjpe3d_sii_T{T}" for T in cfg.iters_list] + ["excluded"]
    table = [[r.s, r.mpjpe2d, r.mpjpe3d_oracle, *[r.mpjpe3d_sii[T] for T in cfg.iters_list], r.excluded] for r in rows]
    _write(cfg, "sweep_accuracy", header, table)
    if cfg.svg:
        series = {"oracle": [r.mpjpe3d_oracle for r in rows]}
        series.update({f"SII T={T}": [r.mpjpe3d_sii[T] for r in rows] for T in cfg.iters_list})
        line_plot(cfg.output("sweep_accuracy.svg"), [r.mpjpe2d for r in rows], series,
                  "2D-MPJPE (px)", "3D-MPJPE (mm)", "DLT accuracy vs 2D noise")
    return EXIT_OK


def cmd_timing(cfg: RunConfig) -> int:
    rows = time_solvers(cfg.batches, cfg.reps, cfg.warmup, cfg.threads, cfg.sii)
    ratio = speedups(rows)
    header = ["method", "batch", "threads", "reps", "median_s", "p10_s", "p90_s", "throughput_pts_per_s", "speedup"]
    table = [
        [r.method, r.batch, r.threads, r.reps, r.median, r.p10, r.p90, r.throughput,
         ratio.get(r.batch) if r.method == "sii" else None]
        for r in rows
    ]
    env = fingerprint(cfg.threads)
    _write(cfg, "timing", header, table, comments=[" ".join(f"{k}={v}" for k, v in env.items())], extra={"environment": env})
    for b, s in sorted(ratio.items()):
        print(f"batch {b}: oracle/SII median time = {s:.2f}x")
    return EXIT_OK


def cmd_ftl_demo(cfg: RunConfig) -> int:
    lo, hi = cfg.theta_range
    print(f"theta in [{lo:g}, {hi:g}]")
    print(f"{'theta':>10} {'cos':>10} {'sin':>10}")
    for t in cfg.values:
        e = encode_scalar(t, lo, hi)
        print(f"{t:>10.4g} {e.cos:>10.6f} {e.sin:>10.6f}")
    return EXIT_OK


def cmd_decode(cfg: RunConfig) -> int:
    joints = soft_argmax_all(read_heatmaps(cfg.heatmaps))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_joints_csv(cfg.output("joints2d.csv"), joints)
    return EXIT_OK


def _jsonable(v):
    if isinstance(v, (float, np.floating)):
        return None if np.isnan(v) else float(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def _write(cfg: RunConfig, stem: str, header, table, comments=(), extra=None) -> None:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.fmt == "json":
        recs = [{h: _jsonable(v) for h, v in zip(header, row)} for row in table]
        io.write_json(cfg.output(f"{stem}.json"), {"rows": recs, **(extra or {})})
    else:
        io.write_table(cfg.output(f"{stem}.csv"), header, table, comments)


COMMANDS = {
    "triangulate": cmd_triangulate,
    "sweep-singular": cmd_sweep_singular,
    "sweep-accuracy": cmd_sweep_accuracy,
    "timing": cmd_timing,
    "ftl-demo": cmd_ftl_demo,
    "decode": cmd_decode,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = to_config(args)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        parser.error(str(exc))
    except NumericalFailure as exc:
        print(f"mvtri: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (io.ParseError, MvtriError, ValueError, OSError, KeyError) as exc:
        print(f"mvtri: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
