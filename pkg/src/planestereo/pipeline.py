"""Iterative reconstruction loop: interpolate, validate, refine, resample."""

import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import DisparityMap, PipelineConfig, census_transform, check_gray, gradient_mask
from .errors import FewerThanThreePoints, SeedingFailed
from .mesh import interpolate, triangulate
from .sparse import Candidates, match_epipolar, sparse_stereo

__all__ = [
    "DisparityMap",
    "IterationRecord",
    "IterationState",
    "OccupancyGrid",
    "RefinementState",
    "RunResult",
    "cost_evaluation",
    "disparity_refinement",
    "merge_supports",
    "occupancy_schedule",
    "run",
    "support_resampling",
]


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """One (u, v, d, cost) slot per sz x sz cell; ``occupied`` marks filled cells."""

    sz: int
    u: np.ndarray
    v: np.ndarray
    d: np.ndarray
    cost: np.ndarray
    occupied: np.ndarray

    @property
    def shape(self):
        return self.occupied.shape

    def __len__(self):
        return int(self.occupied.sum())

    def entries(self):
        """Occupied cells in row-major cell order as (u, v, d, cost) arrays."""
        sel = self.occupied.ravel()
        return (
            self.u.ravel()[sel],
            self.v.ravel()[sel],
            self.d.ravel()[sel],
            self.cost.ravel()[sel],
        )

    @classmethod
    def empty(cls, image_shape, sz, init_cost):
        gh, gw = grid_shape(image_shape, sz)
        z = np.zeros((gh, gw), dtype=np.int64)
        return cls(sz, z, z.copy(), np.zeros((gh, gw)), np.full((gh, gw), float(init_cost)), np.zeros((gh, gw), bool))


@dataclass
class RefinementState:
    """Best disparity so far and its cost (the running final maps)."""

    disparity: np.ndarray
    cost: np.ndarray

    @classmethod
    def initial(cls, shape, t_hi):
        return cls(np.zeros(shape, dtype=np.float64), np.full(shape, float(t_hi)))

    def copy(self):
        return RefinementState(self.disparity.copy(), self.cost.copy())


@dataclass
class IterationRecord:
    iteration: int
    sz_occ: int
    n_supports: int
    n_triangles: int
    mean_cost: float
    n_valid: int
    ms: float
    stage_ms: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class IterationState:
    """Snapshot handed to a ``run`` observer after each refinement step.

    Arrays are the live pipeline buffers; copy anything you keep.
    """

    iteration: int
    sz_occ: int
    supports: np.ndarray
    interpolated: DisparityMap
    mask_u: np.ndarray
    mask_v: np.ndarray
    iteration_cost: np.ndarray  # per mask pixel, same order as mask_u/mask_v
    state: RefinementState
    good: OccupancyGrid
    bad: OccupancyGrid


@dataclass(eq=False)
class RunResult:
    disparity: DisparityMap
    cost: np.ndarray
    dense: DisparityMap
    supports: np.ndarray
    mask: np.ndarray
    trace: list
    config: PipelineConfig
    mesh: object = None

    @property
    def mean_cost(self):
        return self.trace[-1].mean_cost


def grid_shape(image_shape, sz):
    h, w = image_shape
    return -(-h // sz), -(-w // sz)


def occupancy_schedule(n_iters, sz_init=32):
    """Occupancy cell size used at each iteration."""
    out, sz = [], sz_init
    for _ in range(n_iters):
        out.append(sz)
        sz = max(1, sz // 2)
    return out


def _mask_coords(mask):
    v, u = np.nonzero(mask)
    return u.astype(np.int64), v.astype(np.int64)


def cost_evaluation(left_census, right_census, interpolated, mask):
    """Census cost of each mask pixel at its rounded interpolated disparity.

    Returns a full-size map: 1.0 where the disparity is invalid or points left
    of the census-valid region, NaN outside ``mask``.
    """
    mu, mv = _mask_coords(mask)
    c = kernels.evaluate_costs(left_census, right_census, interpolated.disparity, interpolated.valid, mu, mv)
    out = np.full(mask.shape, np.nan)
    out[mv, mu] = c
    return out


def _grids(raw, sz):
    g_u, g_v, g_d, g_c, g_occ, b_u, b_v, b_c, b_occ = raw
    good = OccupancyGrid(sz, g_u, g_v, g_d, g_c, g_occ)
    bad = OccupancyGrid(sz, b_u, b_v, np.zeros(b_c.shape), b_c, b_occ)
    return good, bad


def disparity_refinement(interpolated, iteration_cost, state, sz_occ, config, mask):
    """Keep the cheaper of old and new per pixel and fill both occupancy grids.

    Returns ``(good, bad, new_state)``; ``state`` itself is left untouched.
    """
    mu, mv = _mask_coords(mask)
    new = state.copy()
    gh, gw = grid_shape(mask.shape, sz_occ)
    raw = kernels.refine(
        mu, mv, iteration_cost[mv, mu], interpolated.disparity[mv, mu],
        new.disparity, new.cost, int(sz_occ), gh, gw, float(config.t_lo), float(config.t_hi),
    )
    good, bad = _grids(raw, sz_occ)
    return good, bad, new


def merge_supports(*groups, width):
    """Concatenate (u, v, d) arrays, dropping repeated pixels after their first appearance."""
    pts = np.concatenate([np.asarray(g, dtype=np.float64).reshape(-1, 3) for g in groups])
    if pts.shape[0] == 0:
        return pts
    key = pts[:, 1].astype(np.int64) * width + pts[:, 0].astype(np.int64)
    _, first = np.unique(key, return_index=True)
    return pts[np.sort(first)]


def support_resampling(good, bad, supports, left, right, config, *, census=None):
    """Add confident grid entries as supports and re-match the worst pixels."""
    if census is None:
        census = (census_transform(left), census_transform(right))
    width = census[0].shape[1]
    gu, gv, gd, _ = good.entries()
    confident = np.column_stack([gu, gv, gd]).astype(np.float64)
    bu, bv, _, bc = bad.entries()
    matched = match_epipolar(left, right, Candidates.from_pixels(bu, bv, bc), config, census=census)
    return merge_supports(supports, confident, matched, width=width)


def run(left, right, config=PipelineConfig(), *, mask=None, threads=1, observer=None):
    """Reconstruct semi-dense disparity for a rectified pair.

    ``D_f`` pixels count as valid once any iteration found a cost below
    ``t_hi``. ``dense`` is the raw interpolation of the last iteration over
    the whole image, not validated by cost.
    """
    left = check_gray(left, "left")
    right = check_gray(right, "right")
    if left.shape != right.shape:
        raise ValueError(f"left {left.shape} and right {right.shape} differ in size")
    shape = left.shape
    h, w = shape
    nd = config.max_disparity

    t0 = time.perf_counter()
    if mask is None:
        mask = gradient_mask(left, config.gradient_threshold)
    cl = census_transform(left, threads)
    cr = census_transform(right, threads)
    mu, mv = _mask_coords(mask)
    prep_ms = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    supports = sparse_stereo(left, right, config, census=(cl, cr))
    seed_ms = (time.perf_counter() - t0) * 1e3
    if supports.shape[0] < 3:
        raise SeedingFailed(f"only {supports.shape[0]} support points survived matching")

    state = RefinementState.initial(shape, config.t_hi)
    trace = []
    dense = DisparityMap.empty(shape)
    mesh = None
    for it, sz in enumerate(occupancy_schedule(config.n_iters, config.sz_occ_init), start=1):
        stages = {}
        if it == 1:
            stages["prepare"] = prep_ms
            stages["sparse"] = seed_ms
        t_it = time.perf_counter()

        t0 = time.perf_counter()
        try:
            mesh = triangulate(supports, shape)
        except FewerThanThreePoints:
            mesh = None
        stages["triangulate"] = (time.perf_counter() - t0) * 1e3

        t0 = time.perf_counter()
        dense = interpolate(mesh, nd) if mesh is not None else DisparityMap.empty(shape)
        stages["interpolate"] = (time.perf_counter() - t0) * 1e3

        t0 = time.perf_counter()
        c_it = kernels.evaluate_costs(cl, cr, dense.disparity, dense.valid, mu, mv)
        stages["cost"] = (time.perf_counter() - t0) * 1e3

        t0 = time.perf_counter()
        gh, gw = grid_shape(shape, sz)
        raw = kernels.refine(
            mu, mv, c_it, dense.disparity[mv, mu], state.disparity, state.cost,
            int(sz), gh, gw, float(config.t_lo), float(config.t_hi),
        )
        good, bad = _grids(raw, sz)
        stages["refine"] = (time.perf_counter() - t0) * 1e3

        if observer is not None:
            observer(IterationState(it, sz, supports, dense, mu, mv, c_it, state, good, bad))

        n_supports = int(supports.shape[0])
        if it != config.n_iters:
            t0 = time.perf_counter()
            supports = support_resampling(good, bad, supports, left, right, config, census=(cl, cr))
            stages["resample"] = (time.perf_counter() - t0) * 1e3

        elapsed = (time.perf_counter() - t_it) * 1e3 + (prep_ms + seed_ms if it == 1 else 0.0)
        valid = state.cost < config.t_hi
        trace.append(
            IterationRecord(
                iteration=it,
                sz_occ=sz,
                n_supports=n_supports,
                n_triangles=mesh.n_triangles if mesh is not None else 0,
                mean_cost=float(state.cost[mv, mu].mean()) if mu.size else float(config.t_hi),
                n_valid=int(valid.sum()),
                ms=elapsed,
                stage_ms=stages,
            )
        )

    valid = state.cost < config.t_hi
    result_disp = DisparityMap(np.where(valid, state.disparity, 0.0), valid)
    return RunResult(result_disp, state.cost, dense, supports, mask, trace, config, mesh)
