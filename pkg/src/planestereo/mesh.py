"""Delaunay mesh over support points, per-triangle disparity planes, pixel lookup."""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial import Delaunay

from . import kernels
from .core import DisparityMap
from .errors import DegenerateTriangle, FewerThanThreePoints

DEGENERATE_DET = 1e-9


class DisparityPlane(NamedTuple):
    """d = pi1 * u + pi2 * v + pi3"""

    pi1: float
    pi2: float
    pi3: float

    def __call__(self, u, v):
        return self.pi1 * u + self.pi2 * v + self.pi3


@dataclass(frozen=True, eq=False)
class DisparityMesh:
    vertices: np.ndarray  # (N, 3) u, v, d
    triangles: np.ndarray  # (M, 3) vertex indices, positively oriented in (u, v)
    planes: np.ndarray  # (M, 3); NaN rows for degenerate triangles
    lookup: np.ndarray  # (H, W) triangle index, -1 outside the hull

    @property
    def shape(self):
        return self.lookup.shape

    @property
    def n_triangles(self):
        return int(self.triangles.shape[0])

    @property
    def plane_ok(self):
        return ~np.isnan(self.planes[:, 0])

    def plane(self, t):
        return DisparityPlane(*self.planes[t].tolist())


def fit_plane(v1, v2, v3):
    """Disparity plane through three (u, v, d) vertices."""
    planes = _fit_planes(np.array([v1, v2, v3], dtype=np.float64)[None])
    if np.isnan(planes[0, 0]):
        raise DegenerateTriangle(f"vertices {v1}, {v2}, {v3} are collinear in (u, v)")
    return DisparityPlane(*planes[0].tolist())


def _fit_planes(tri):
    # tri: (M, 3 vertices, 3 coords)
    u1, v1, d1 = tri[:, 0, 0], tri[:, 0, 1], tri[:, 0, 2]
    au, av, ad = tri[:, 1, 0] - u1, tri[:, 1, 1] - v1, tri[:, 1, 2] - d1
    bu, bv, bd = tri[:, 2, 0] - u1, tri[:, 2, 1] - v1, tri[:, 2, 2] - d1
    det = au * bv - av * bu
    ok = np.abs(det) >= DEGENERATE_DET
    det = np.where(ok, det, 1.0)
    p1 = (ad * bv - bd * av) / det
    p2 = (au * bd - bu * ad) / det
    p3 = d1 - p1 * u1 - p2 * v1
    planes = np.column_stack([p1, p2, p3])
    planes[~ok] = np.nan
    return planes


def _dedup_first(points):
    key = points[:, 1] * (points[:, 0].max() + 1) + points[:, 0]
    _, first = np.unique(key, return_index=True)
    return points[np.sort(first)]


def _collinear(uv):
    a = uv[0]
    rel = uv - a
    far = np.argmax(np.abs(rel).sum(axis=1))
    b = rel[far]
    return bool(np.all(rel[:, 0] * b[1] - rel[:, 1] * b[0] == 0))


def triangulate(points, shape):
    """Build the mesh for (u, v, d) support points on an image of ``shape`` (H, W).

    Points must sit on integer pixel coordinates. Repeated (u, v) keep their
    first occurrence. Collinear input gives a mesh with zero triangles.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if pts.shape[0] < 3:
        raise FewerThanThreePoints(f"need at least 3 support points, got {pts.shape[0]}")
    if np.any(pts[:, :2] != np.round(pts[:, :2])):
        raise ValueError("support points must lie on integer pixel coordinates")
    pts = _dedup_first(pts)
    if pts.shape[0] < 3:
        raise FewerThanThreePoints(f"need at least 3 distinct support pixels, got {pts.shape[0]}")

    h, w = shape
    if _collinear(pts[:, :2]):
        tris = np.empty((0, 3), dtype=np.int64)
        neighbors = tris
    else:
        dt = Delaunay(pts[:, :2])
        tris = dt.simplices.astype(np.int64)
        neighbors = dt.neighbors
        uv = pts[:, :2].astype(np.int64)
        a, b, c = uv[tris[:, 0]], uv[tris[:, 1]], uv[tris[:, 2]]
        area = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
        flip = area < 0
        tris[flip] = tris[flip][:, [0, 2, 1]]

    planes = _fit_planes(pts[tris]) if tris.shape[0] else np.empty((0, 3))
    iu = pts[:, 0].astype(np.int64)
    iv = pts[:, 1].astype(np.int64)
    ok = ~np.isnan(planes[:, 0]) if tris.shape[0] else np.zeros(0, dtype=bool)
    # triangles that may own hull-boundary pixels: a missing or plane-less neighbour
    on_hull = ((neighbors < 0) | ~ok[np.maximum(neighbors, 0)]).any(axis=1) if tris.shape[0] else ok
    lookup = kernels.rasterize(
        np.ascontiguousarray(iu[tris]), np.ascontiguousarray(iv[tris]), ok, on_hull, int(h), int(w)
    )
    return DisparityMesh(pts, tris, planes, lookup)


def interpolate(mesh, max_disparity, mask=None):
    """Evaluate each pixel's triangle plane.

    Pixels outside the hull, outside ``mask`` or evaluating outside
    ``[0, max_disparity)`` are invalid.
    """
    if mesh.n_triangles == 0:
        return DisparityMap.empty(mesh.shape)
    planes = np.where(np.isnan(mesh.planes), 0.0, mesh.planes)
    disp, valid = kernels.interpolate_planes(mesh.lookup, planes, float(max_disparity))
    if mask is not None:
        valid &= mask
        disp = np.where(valid, disp, 0.0)
    return DisparityMap(disp, valid)


def write_off(mesh, path):
    """Dump the mesh as an OFF text file with (u, v, d) vertices."""
    with open(path, "w") as f:
        f.write("OFF\n")
        f.write(f"{mesh.vertices.shape[0]} {mesh.n_triangles} 0\n")
        for u, v, d in mesh.vertices.tolist():
            f.write(f"{u:g} {v:g} {d:.9g}\n")
        for a, b, c in mesh.triangles.tolist():
            f.write(f"3 {a} {b} {c}\n")
