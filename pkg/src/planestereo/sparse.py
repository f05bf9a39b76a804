"""Support seeds: segment-test corners with spatial binning, matched along scanlines."""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .core import PipelineConfig, census_transform, check_gray


class SupportPoint(NamedTuple):
    u: int
    v: int
    d: float


@dataclass(frozen=True)
class Candidates:
    """Pixels with unknown disparity, as parallel arrays."""

    u: np.ndarray
    v: np.ndarray
    score: np.ndarray

    def __len__(self):
        return int(self.u.shape[0])

    def __iter__(self):
        return iter(zip(self.u.tolist(), self.v.tolist(), self.score.tolist()))

    @classmethod
    def from_pixels(cls, u, v, score=None):
        u = np.asarray(u, dtype=np.int64).ravel()
        v = np.asarray(v, dtype=np.int64).ravel()
        score = np.zeros(u.shape, dtype=np.float64) if score is None else np.asarray(score, dtype=np.float64).ravel()
        return cls(u, v, score)


def detect_candidates(image, config=PipelineConfig()):
    """Segment-test corners, at most ``per_bin_cap`` per cell of a bins_u x bins_v grid.

    Returned in order of decreasing score, ties broken row-major.
    """
    img = check_gray(image)
    h, w = img.shape
    score = kernels.fast_score(img, config.corner_threshold)
    v, u = np.nonzero(score)
    s = score[v, u].astype(np.int64)
    bin_id = (v * config.bins_v // h) * config.bins_u + u * config.bins_u // w
    order = np.lexsort((u, v, -s, bin_id))
    b = bin_id[order]
    starts = np.searchsorted(b, b, side="left")
    rank = np.arange(b.shape[0]) - starts
    keep = order[rank < config.per_bin_cap]
    keep = keep[np.lexsort((u[keep], v[keep], -s[keep]))]
    return Candidates(u[keep].astype(np.int64), v[keep].astype(np.int64), s[keep].astype(np.float64))


def match_epipolar(left, right, candidates, config=PipelineConfig(), *, census=None):
    """Match candidates along their scanline; returns an (N, 3) array of (u, v, d).

    Each candidate searches integer disparities ``0..min(N_D - 1, u - 2)`` and
    is kept only if the winner is cheap enough, unique against disparities more
    than one pixel away, and survives a right-to-left re-match within 1 px.
    When ``census`` is given as ``(left_field, right_field)`` the images are
    not re-transformed.
    """
    if census is None:
        cl, cr = census_transform(left), census_transform(right)
    else:
        cl, cr = census
    if cl.shape != cr.shape:
        raise ValueError(f"image shapes differ: {cl.shape} vs {cr.shape}")
    if not isinstance(candidates, Candidates):
        arr = np.asarray(candidates, dtype=np.int64).reshape(-1, 2)
        candidates = Candidates.from_pixels(arr[:, 0], arr[:, 1])
    if len(candidates) == 0:
        return np.empty((0, 3), dtype=np.float64)

    h, w = cl.shape
    cu, cv = candidates.u, candidates.v
    inside = (cu >= 2) & (cu < w - 2) & (cv >= 2) & (cv < h - 2)
    cu, cv = cu[inside], cv[inside]
    d, cost = kernels.match_candidates(
        cl, cr, cu, cv, config.max_disparity, config.sparse_accept_cost, config.uniqueness_ratio
    )
    ok = d >= 0
    cu, cv, d, cost = cu[ok], cv[ok], d[ok], cost[ok]

    # duplicate pixels: keep the cheapest, first on ties
    key = cv * w + cu
    order = np.lexsort((np.arange(key.shape[0]), cost, key))
    first = np.ones(order.shape[0], dtype=bool)
    first[1:] = key[order][1:] != key[order][:-1]
    sel = np.sort(order[first])
    return np.column_stack([cu[sel], cv[sel], d[sel]]).astype(np.float64)


def sparse_stereo(left, right, config=PipelineConfig(), *, census=None):
    """Detect and match initial supports in one call."""
    cands = detect_candidates(left, config)
    return match_epipolar(left, right, cands, config, census=census)
