"""Compare the numba and pure-NumPy kernel backends, per kernel and end to end.

    python3 benchmarks/bench_backends.py [--scene flat:20] [--repeat 5] [--iters 1]

Outputs are checked for equality before anything is timed.
"""

import argparse
import time

import numpy as np

from planestereo import kernels
from planestereo.core import PipelineConfig, gradient_mask
from planestereo.mesh import triangulate
from planestereo.pipeline import grid_shape, run
from planestereo.sparse import detect_candidates, sparse_stereo
from planestereo.synth import parse_scene, render


def best_of(fn, repeat):
    fn()
    ts = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return min(ts) * 1e3


def kernel_cases(left, right, cfg):
    mask = gradient_mask(left, cfg.gradient_threshold)
    cl = kernels.get_backend("numpy").census_transform(left)
    cr = kernels.get_backend("numpy").census_transform(right)
    v, u = np.nonzero(mask)
    mu, mv = u.astype(np.int64), v.astype(np.int64)
    cands = detect_candidates(left, cfg)
    seeds = sparse_stereo(left, right, cfg, census=(cl, cr))
    mesh = triangulate(seeds, left.shape)
    tu = np.ascontiguousarray(mesh.vertices[mesh.triangles, 0].astype(np.int64))
    tv = np.ascontiguousarray(mesh.vertices[mesh.triangles, 1].astype(np.int64))
    ok = mesh.plane_ok
    hull = np.ones_like(ok)
    planes = np.nan_to_num(mesh.planes)
    disp, valid = kernels.get_backend("numpy").interpolate_planes(mesh.lookup, planes, float(cfg.max_disparity))
    cost = kernels.get_backend("numpy").evaluate_costs(cl, cr, disp, valid, mu, mv)
    h, w = left.shape
    gh, gw = grid_shape(left.shape, 32)
    nd = cfg.max_disparity
    # small subset for the exhaustive search; the numpy twin is slow there
    sub = slice(0, min(20000, mu.size))

    return {
        "census_transform": lambda k: k.census_transform(left),
        "fast_score": lambda k: k.fast_score(left, cfg.corner_threshold),
        "match_candidates": lambda k: k.match_candidates(
            cl, cr, cands.u, cands.v, nd, cfg.sparse_accept_cost, cfg.uniqueness_ratio),
        "rasterize": lambda k: k.rasterize(tu, tv, ok, hull, h, w),
        "interpolate_planes": lambda k: k.interpolate_planes(mesh.lookup, planes, float(nd)),
        "evaluate_costs": lambda k: k.evaluate_costs(cl, cr, disp, valid, mu, mv),
        "refine": lambda k: k.refine(mu, mv, cost, disp[mv, mu], np.zeros((h, w)), np.full((h, w), cfg.t_hi),
                                     32, gh, gw, cfg.t_lo, cfg.t_hi),
        "wta_search": lambda k: k.wta_search(cl, cr, mu[sub], mv[sub], nd),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--scene", default="flat:20")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--iters", type=int, default=1)
    args = ap.parse_args()

    pair = render(parse_scene(args.scene))
    cfg = PipelineConfig(n_iters=args.iters)
    jit, npy = kernels.get_backend("numba"), kernels.get_backend("numpy")

    print(f"{'kernel':<20} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}  equal")
    for name, case in kernel_cases(pair.left, pair.right, cfg).items():
        eq = same(case(jit), case(npy))
        tj = best_of(lambda: case(jit), args.repeat)
        tn = best_of(lambda: case(npy), args.repeat)
        print(f"{name:<20} {tj:10.2f} {tn:10.2f} {tn / tj:7.1f}x  {eq}")

    totals = {}
    for backend in ("numba", "numpy"):
        kernels.set_backend(backend)
        totals[backend] = best_of(lambda: run(pair.left, pair.right, cfg), args.repeat)
    kernels.set_backend("numba")
    print(f"{'run (end to end)':<20} {totals['numba']:10.2f} {totals['numpy']:10.2f} "
          f"{totals['numpy'] / totals['numba']:7.1f}x")


if __name__ == "__main__":
    main()
