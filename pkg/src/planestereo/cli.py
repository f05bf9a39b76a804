"""``planestereo`` command line: run, eval, bench, synth.

Exit codes: 0 success, 1 I/O failure, 2 invalid flags or inputs,
3 seeding failed, 4 no overlap between prediction and ground truth.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as sio
from .core import PipelineConfig, gradient_mask
from .errors import (
    ConfigError,
    CorruptFile,
    DimensionTooSmall,
    EmptyCloud,
    InvalidPlane,
    NoOverlap,
    SeedingFailed,
    UnsupportedFormat,
)
from .evaluation import accuracy, benchmark, reference_ms, to_csv, to_json_lines
from .pipeline import run
from .synth import parse_scene, render

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_SEEDING, EXIT_NO_OVERLAP = 0, 1, 2, 3, 4

# flag name -> PipelineConfig field
_CONFIG_FLAGS = {
    "iters": "n_iters",
    "max_disp": "max_disparity",
    "t_lo": "t_lo",
    "t_hi": "t_hi",
    "gradient_threshold": "gradient_threshold",
    "sz_occ": "sz_occ_init",
    "corner_threshold": "corner_threshold",
    "per_bin_cap": "per_bin_cap",
    "sparse_accept": "sparse_accept_cost",
    "uniqueness_ratio": "uniqueness_ratio",
    "bins_u": "bins_u",
    "bins_v": "bins_v",
}


class UsageError(Exception):
    pass


def _add_config_flags(p, with_iters=True):
    d = PipelineConfig()
    g = p.add_argument_group("pipeline")
    if with_iters:
        g.add_argument("--iters", type=int, default=d.n_iters, help="refinement iterations")
    g.add_argument("--max-disp", type=int, default=d.max_disparity, help="disparity search range N_D")
    g.add_argument("--t-lo", type=float, default=d.t_lo, help="cost below which a pixel is a confident support")
    g.add_argument("--t-hi", type=float, default=d.t_hi, help="cost above which a pixel is invalid")
    g.add_argument("--gradient-threshold", type=int, default=d.gradient_threshold, help="edge-mask gradient threshold")
    g.add_argument("--sz-occ", type=int, default=d.sz_occ_init, help="initial occupancy cell size (power of two)")
    g.add_argument("--corner-threshold", type=int, default=d.corner_threshold, help="segment-test intensity threshold")
    g.add_argument("--per-bin-cap", type=int, default=d.per_bin_cap, help="corners kept per spatial bin")
    g.add_argument("--sparse-accept", type=float, default=d.sparse_accept_cost, help="max cost for a seed match")
    g.add_argument("--uniqueness-ratio", type=float, default=d.uniqueness_ratio,
                   help="best cost must be below ratio x runner-up")
    g.add_argument("--bins-u", type=int, default=d.bins_u, help="spatial bins across")
    g.add_argument("--bins-v", type=int, default=d.bins_v, help="spatial bins down")


def _config(args, **extra):
    kw = {field: getattr(args, flag) for flag, field in _CONFIG_FLAGS.items() if hasattr(args, flag)}
    kw.update(extra)
    return PipelineConfig(**kw)


def _int_list(text):
    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _float_list(text):
    try:
        out = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _print_trace(result, out=None):
    out = out or sys.stdout
    print(f"{'iter':>4} {'sz_occ':>6} {'supports':>8} {'triangles':>9} {'mean C_f':>9} {'valid':>8} {'ms':>8}", file=out)
    for r in result.trace:
        print(f"{r.iteration:4d} {r.sz_occ:6d} {r.n_supports:8d} {r.n_triangles:9d} "
              f"{r.mean_cost:9.5f} {r.n_valid:8d} {r.ms:8.2f}", file=out)


def cmd_run(args):
    cfg = _config(args)
    calib = sio.CameraCalib.parse(args.calib) if args.calib else None
    if args.ply and calib is None:
        raise UsageError("--ply needs --calib f,B,cx,cy")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    left = sio.read_gray(args.left)
    right = sio.read_gray(args.right)
    if left.shape != right.shape:
        raise UsageError(f"left {left.shape[::-1]} and right {right.shape[::-1]} differ in size")
    result = run(left, right, cfg, threads=args.threads)
    sio.write_disparity(result.disparity, args.out)
    if args.dense:
        sio.write_disparity(result.dense, args.dense)
    if args.costs:
        sio.write_float_map(np.where(result.mask, result.cost, np.nan), args.costs)
    if args.ply:
        n = sio.export_pointcloud(result.disparity, left, calib, args.ply, args.min_ply_disp, args.binary_ply)
        print(f"wrote {n} points to {args.ply}")
    _print_trace(result)
    return EXIT_OK


def cmd_eval(args):
    pred = sio.read_disparity(args.pred)
    gt = sio.read_disparity(args.gt)
    if pred.shape != gt.shape:
        raise UsageError(f"prediction {pred.shape[::-1]} and ground truth {gt.shape[::-1]} differ in size")
    mask = None
    if args.left:
        img = sio.read_gray(args.left)
        if img.shape != pred.shape:
            raise UsageError(f"--left image {img.shape[::-1]} does not match {pred.shape[::-1]}")
        mask = gradient_mask(img, args.gradient_threshold)
    rep = accuracy(pred, gt, mask, args.thresholds)
    print(rep.table())
    row = rep.as_dict()
    if args.json:
        Path(args.json).write_text(json.dumps(row, indent=2) + "\n")
    if args.csv:
        Path(args.csv).write_text(to_csv([row]))
    return EXIT_OK


_IMAGE_EXTS = (".png", ".pgm")


def find_pairs(root):
    """(name, left, right) triples: subdirectories holding left/right images, or ``*_left``/``*_right`` files."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"no such directory: {root}")
    pairs = []
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        for ext in _IMAGE_EXTS:
            lp, rp = sub / f"left{ext}", sub / f"right{ext}"
            if lp.is_file() and rp.is_file():
                pairs.append((sub.name, lp, rp))
                break
    for lp in sorted(root.iterdir()):
        if lp.is_file() and lp.suffix.lower() in _IMAGE_EXTS and lp.stem.endswith("_left"):
            rp = lp.with_name(lp.stem[: -len("_left")] + "_right" + lp.suffix)
            if rp.is_file():
                pairs.append((lp.stem[: -len("_left")], lp, rp))
    return pairs


def cmd_bench(args):
    if args.repeat < 3:
        raise UsageError("--repeat must be >= 3")
    if any(n < 1 for n in args.iters):
        raise UsageError("--iters values must be >= 1")
    configs = [_config(args, n_iters=n) for n in args.iters]
    pairs = find_pairs(args.dataset)
    if not pairs:
        raise UsageError(f"no stereo pairs found in {args.dataset}")
    rows = []
    for name, lp, rp in pairs:
        left, right = sio.read_gray(lp), sio.read_gray(rp)
        h, w = left.shape
        row = {"pair": name, "width": w, "height": h}
        for cfg in configs:
            rep = benchmark(lambda: run(left, right, cfg), repeats=args.repeat, warmup=1, pin_cpu=not args.no_pin)
            n = cfg.n_iters
            row[f"median_ms_it{n}"] = round(rep.median, 3)
            row[f"min_ms_it{n}"] = round(rep.min, 3)
            row[f"hz_it{n}"] = round(rep.hz, 2)
            ref = reference_ms(w, h, n)
            row[f"reference_ms_it{n}"] = "" if ref is None else ref
        rows.append(row)
        print(_bench_line(row, args.iters), file=sys.stderr if args.csv is None else sys.stdout)
    text = to_csv(rows)
    if args.csv:
        Path(args.csv).write_text(text)
    else:
        sys.stdout.write(text)
    if args.json:
        Path(args.json).write_text(to_json_lines(rows))
    return EXIT_OK


def _bench_line(row, iters):
    parts = [f"{row['pair']} {row['width']}x{row['height']}"]
    for n in iters:
        ref = row[f"reference_ms_it{n}"]
        ref_txt = f" (reference {ref} ms)" if ref != "" else ""
        parts.append(f"it{n}: {row[f'median_ms_it{n}']:.2f} ms{ref_txt}")
    return " | ".join(parts)


def cmd_synth(args):
    try:
        scene = parse_scene(args.scene, args.width, args.height, args.seed, args.max_disp)
    except ValueError as e:
        if isinstance(e, InvalidPlane):
            raise
        raise UsageError(str(e)) from None
    pair = render(scene)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sio.write_gray(pair.left, out / "left.png")
    sio.write_gray(pair.right, out / "right.png")
    sio.write_disparity(pair.gt, out / "gt.pfm")
    sio.write_gray(pair.occluded.astype(np.uint8) * 255, out / "occ.png")
    print(f"wrote left.png, right.png, gt.pfm, occ.png to {out}")
    return EXIT_OK


def build_parser():
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="planestereo", description="Semi-dense piecewise-planar stereo.",
                                     formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="reconstruct disparity for one rectified pair", formatter_class=fmt)
    p.add_argument("--left", required=True, help="left image (PNG/PGM, 8-bit gray)")
    p.add_argument("--right", required=True, help="right image")
    p.add_argument("--out", required=True, help="semi-dense disparity output (.pfm or KITTI .png)")
    p.add_argument("--dense", default=None, help="also write the last interpolated dense map here")
    p.add_argument("--costs", default=None, help="also write the final cost map (PFM) here")
    p.add_argument("--ply", default=None, help="also write a point cloud here (needs --calib)")
    p.add_argument("--calib", default=None, help="camera calibration f,B,cx,cy (pixels, metres)")
    p.add_argument("--min-ply-disp", type=float, default=0.5, help="skip points with smaller disparity")
    p.add_argument("--binary-ply", action="store_true", help="binary little-endian PLY")
    p.add_argument("--threads", type=int, default=1, help="threads for the census transform")
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="accuracy of a disparity map against ground truth", formatter_class=fmt)
    p.add_argument("--pred", required=True, help="predicted disparity (.pfm or KITTI .png)")
    p.add_argument("--gt", required=True, help="ground-truth disparity (.pfm or KITTI .png)")
    p.add_argument("--left", default=None, help="left image; restricts evaluation to its edge mask")
    p.add_argument("--gradient-threshold", type=int, default=PipelineConfig().gradient_threshold,
                   help="edge-mask gradient threshold (with --left)")
    p.add_argument("--thresholds", type=_float_list, default=[2.0, 3.0, 4.0, 5.0], help="pixel tolerances")
    p.add_argument("--json", default=None, help="write the report as JSON")
    p.add_argument("--csv", default=None, help="write the report as CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="timing table over a directory of pairs", formatter_class=fmt)
    p.add_argument("dataset", help="directory with <name>/left.png,right.png or <name>_left.png,<name>_right.png")
    p.add_argument("--iters", type=_int_list, default=[1, 2, 4], help="iteration counts to time")
    p.add_argument("--repeat", type=int, default=10, help="timed repeats per configuration")
    p.add_argument("--no-pin", action="store_true", help="do not pin the process to one CPU")
    p.add_argument("--csv", default=None, help="write the CSV here instead of stdout")
    p.add_argument("--json", default=None, help="also write JSON lines here")
    _add_config_flags(p, with_iters=False)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="render a synthetic planar pair with ground truth", formatter_class=fmt)
    p.add_argument("--scene", required=True, help="flat:d | slanted:a,b,c | steps:d1,d2")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=480)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--max-disp", type=int, default=PipelineConfig().max_disparity, help="valid disparity range")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, InvalidPlane) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SeedingFailed as e:
        print(f"seeding failed: {e}", file=sys.stderr)
        return EXIT_SEEDING
    except NoOverlap as e:
        print(f"no overlap: {e}", file=sys.stderr)
        return EXIT_NO_OVERLAP
    except (OSError, CorruptFile, UnsupportedFormat, DimensionTooSmall, EmptyCloud) as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
