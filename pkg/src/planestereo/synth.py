"""Synthetic piecewise-planar stereo pairs with exact ground truth, and a brute-force matcher."""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.ndimage import gaussian_filter

from . import kernels
from .core import DisparityMap, census_transform, check_gray
from .errors import InvalidPlane
from .mesh import DisparityPlane


@dataclass(frozen=True)
class Region:
    rect: tuple  # (u0, v0, u1, v1), half-open, in left-image pixels
    plane: DisparityPlane
    seed: int = 0


@dataclass(frozen=True)
class PlanarScene:
    width: int
    height: int
    regions: tuple
    max_disparity: int = 128
    fill_seed: int = 9973
    sigma: float = 1.5

    def labels(self):
        """Region index per pixel; raises unless the regions tile the image exactly."""
        lab = np.full((self.height, self.width), -1, dtype=np.int64)
        count = np.zeros((self.height, self.width), dtype=np.int64)
        for i, r in enumerate(self.regions):
            u0, v0, u1, v1 = r.rect
            lab[v0:v1, u0:u1] = i
            count[v0:v1, u0:u1] += 1
        if np.any(count != 1):
            raise ValueError("scene regions must partition the image")
        return lab

    def check_planes(self):
        for r in self.regions:
            u0, v0, u1, v1 = r.rect
            p = DisparityPlane(*r.plane)
            corners = [p(u, v) for u in (u0, u1 - 1) for v in (v0, v1 - 1)]
            if min(corners) < 0 or max(corners) >= self.max_disparity:
                raise InvalidPlane(
                    f"plane {tuple(p)} spans [{min(corners):.3f}, {max(corners):.3f}] "
                    f"inside {r.rect}, outside [0, {self.max_disparity})"
                )

    def disparity(self):
        lab = self.labels()
        vv, uu = np.mgrid[0 : self.height, 0 : self.width].astype(np.float64)
        planes = np.array([tuple(r.plane) for r in self.regions], dtype=np.float64)
        p = planes[lab]
        return p[..., 0] * uu + p[..., 1] * vv + p[..., 2]


class RenderedPair(NamedTuple):
    left: np.ndarray
    right: np.ndarray
    gt: DisparityMap
    occluded: np.ndarray  # left pixels hidden in the right view
    unfilled: np.ndarray  # right pixels no left pixel maps to


def texture(shape, seed, sigma=1.5):
    """Band-limited noise stretched to the 8-bit range."""
    rng = np.random.default_rng(seed)
    n = gaussian_filter(rng.standard_normal(shape), sigma)
    lo, hi = np.percentile(n, [1, 99])
    return np.clip(np.round((n - lo) / (hi - lo) * 255.0), 0, 255).astype(np.uint8)


def render(scene):
    """Left texture, forward-warped right image, ground truth and occlusion mask.

    A left pixel is occluded when some pixel to its right lands at or left of
    its own right-image position. Visible pixels splat to the nearest right
    column; collisions keep the larger disparity. Right pixels nobody lands on
    get independent texture.
    """
    scene.check_planes()
    h, w = scene.height, scene.width
    lab = scene.labels()
    left = np.empty((h, w), dtype=np.uint8)
    for i, r in enumerate(scene.regions):
        tex = texture((h, w), r.seed, scene.sigma)
        left[lab == i] = tex[lab == i]

    d = scene.disparity()
    x = np.arange(w, dtype=np.float64)[None, :] - d
    suffix_min = np.minimum.accumulate(x[:, ::-1], axis=1)[:, ::-1]
    next_min = np.full_like(x, np.inf)
    next_min[:, :-1] = suffix_min[:, 1:]
    occluded = x >= next_min

    xr = np.floor(x + 0.5).astype(np.int64)
    vv = np.broadcast_to(np.arange(h)[:, None], (h, w))
    src = np.flatnonzero((~occluded & (xr >= 0) & (xr < w)).ravel())
    src = src[np.argsort(d.ravel()[src], kind="stable")]
    target = vv.ravel()[src] * w + xr.ravel()[src]

    right = texture((h, w), scene.fill_seed, scene.sigma).ravel()
    right[target] = left.ravel()[src]
    unfilled = np.ones(h * w, dtype=bool)
    unfilled[target] = False
    gt = DisparityMap(np.where(occluded, 0.0, d), ~occluded)
    return RenderedPair(left, right.reshape(h, w), gt, occluded, unfilled.reshape(h, w))


def flat_scene(d, width=640, height=480, seed=1, max_disparity=128):
    return PlanarScene(width, height, (Region((0, 0, width, height), DisparityPlane(0.0, 0.0, float(d)), seed),),
                       max_disparity)


def slanted_scene(a, b, c, width=640, height=480, seed=1, max_disparity=128):
    return PlanarScene(width, height, (Region((0, 0, width, height), DisparityPlane(a, b, c), seed),), max_disparity)


def steps_scene(d1, d2, width=640, height=480, seed=1, max_disparity=128):
    half = width // 2
    regions = (
        Region((0, 0, half, height), DisparityPlane(0.0, 0.0, float(d1)), seed),
        Region((half, 0, width, height), DisparityPlane(0.0, 0.0, float(d2)), seed + 1),
    )
    return PlanarScene(width, height, regions, max_disparity)


def parse_scene(text, width=640, height=480, seed=1, max_disparity=128):
    """Build a scene from ``flat:d``, ``slanted:a,b,c`` or ``steps:d1,d2``."""
    kind, _, args = text.partition(":")
    try:
        vals = [float(x) for x in args.split(",")] if args else []
    except ValueError:
        raise ValueError(f"bad scene parameters in {text!r}") from None
    builders = {"flat": (flat_scene, 1), "slanted": (slanted_scene, 3), "steps": (steps_scene, 2)}
    if kind not in builders:
        raise ValueError(f"unknown scene kind {kind!r}; expected flat, slanted or steps")
    fn, n = builders[kind]
    if len(vals) != n:
        raise ValueError(f"{kind} scene takes {n} value(s), got {len(vals)}")
    return fn(*vals, width=width, height=height, seed=seed, max_disparity=max_disparity)


def wta_oracle(left, right, mask, max_disparity=128, *, census=None):
    """Exhaustive census search over ``0..min(N_D, u - 2)`` at each mask pixel.

    Ties go to the smaller disparity. Returns the disparity map and a cost map
    that is NaN outside ``mask``.
    """
    if census is None:
        cl, cr = census_transform(check_gray(left)), census_transform(check_gray(right))
    else:
        cl, cr = census
    v, u = np.nonzero(mask)
    u = u.astype(np.int64)
    v = v.astype(np.int64)
    d, c = kernels.wta_search(cl, cr, u, v, int(max_disparity))
    disp = np.zeros(mask.shape)
    valid = np.zeros(mask.shape, dtype=bool)
    cost = np.full(mask.shape, np.nan)
    disp[v, u] = d
    valid[v, u] = True
    cost[v, u] = c
    return DisparityMap(disp, valid), cost
