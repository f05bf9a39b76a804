"""Vectorized NumPy twins of the compiled kernels in ``_jit``.

Used when numba is unavailable or disabled through ``PLANESTEREO_NO_NUMBA``.
Outputs must match the compiled path bit for bit.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._common import CENSUS_INVALID, CIRCLE_DU, CIRCLE_DV

_CHUNK = 4096


def _hamming(a, b):
    return np.bitwise_count(a ^ b) / 24.0


def census_transform(img, threads=1):
    H, W = img.shape
    out = np.full((H, W), CENSUS_INVALID, dtype=np.uint32)
    if H < 5 or W < 5:
        return out
    c = img[2 : H - 2, 2 : W - 2]
    desc = np.zeros(c.shape, dtype=np.uint32)
    k = 0
    for dy in range(-2, 3):
        for dx in range(-2, 3):
            if dy == 0 and dx == 0:
                continue
            nb = img[2 + dy : H - 2 + dy, 2 + dx : W - 2 + dx]
            desc |= (nb < c).astype(np.uint32) << np.uint32(k)
            k += 1
    out[2 : H - 2, 2 : W - 2] = desc
    return out


def _suppress(score):
    H, W = score.shape
    pad = np.pad(score, 1)
    c = score
    keep = c > 0
    for dy in range(-1, 2):
        for dx in range(-1, 2):
            if dy == 0 and dx == 0:
                continue
            n = pad[1 + dy : H + 1 + dy, 1 + dx : W + 1 + dx]
            earlier = dy < 0 or (dy == 0 and dx < 0)
            keep &= ~((n > c) | ((n == c) & earlier))
    return np.where(keep, score, 0).astype(np.int32)


def fast_score(img, threshold, nms=True):
    H, W = img.shape
    score = np.zeros((H, W), dtype=np.int32)
    if H < 7 or W < 7:
        return score
    c = img[3 : H - 3, 3 : W - 3].astype(np.int32)
    diff = np.stack(
        [img[3 + dv : H - 3 + dv, 3 + du : W - 3 + du].astype(np.int32) - c for du, dv in zip(CIRCLE_DU, CIRCLE_DV)]
    )
    bright = diff >= threshold
    dark = -diff >= threshold

    def arc(flags):
        ring = np.concatenate([flags, flags[:8]])
        return sliding_window_view(ring, 9, axis=0).all(axis=-1).any(axis=0)

    is_b = arc(bright)
    is_d = arc(dark)
    s_b = np.where(bright, diff, 0).sum(axis=0)
    s_d = np.where(dark, -diff, 0).sum(axis=0)
    score[3 : H - 3, 3 : W - 3] = np.where(is_b, s_b, np.where(is_d, s_d, 0))
    return _suppress(score) if nms else score


def _match_chunk(cl, cr, cu, cv, nd, accept, ratio):
    W = cl.shape[1]
    n = cu.shape[0]
    ds = np.arange(nd, dtype=np.int64)
    rows = np.arange(n)
    dmax = np.minimum(nd - 1, cu - 2)
    ok = ds[None, :] <= dmax[:, None]
    xr = np.where(ok, cu[:, None] - ds[None, :], 2)
    costs = np.where(ok, _hamming(cl[cv, cu][:, None], cr[cv[:, None], xr]), np.inf)
    best = np.argmin(costs, axis=1)
    bc = costs[rows, best]
    far = np.abs(ds[None, :] - best[:, None]) > 1
    second = np.where(far, costs, np.inf).min(axis=1)
    keep = (dmax >= 0) & (bc <= accept) & (np.isinf(second) | (bc < ratio * second))
    nxt = np.minimum(best + 1, nd - 1)
    keep &= ~((best + 1 <= dmax) & (costs[rows, nxt] == bc))
    keep &= ~((best == dmax) & (dmax < nd - 1))

    x0 = cu - best
    xl = x0[:, None] + ds[None, :]
    okl = xl <= W - 3
    back_c = np.where(okl, _hamming(cr[cv, x0][:, None], cl[cv[:, None], np.where(okl, xl, 2)]), np.inf)
    back = np.argmin(back_c, axis=1)
    keep &= np.abs(x0 + back - cu) <= 1
    far = np.abs(ds[None, :] - back[:, None]) > 1
    keep &= ~(far & (back_c <= back_c[rows, back][:, None])).any(axis=1)
    return np.where(keep, best, -1).astype(np.int64), np.where(keep, bc, 1.0)


def match_candidates(cl, cr, cu, cv, nd, accept, ratio):
    out_d = np.full(cu.shape[0], -1, dtype=np.int64)
    out_c = np.ones(cu.shape[0], dtype=np.float64)
    for s in range(0, cu.shape[0], _CHUNK):
        e = s + _CHUNK
        out_d[s:e], out_c[s:e] = _match_chunk(cl, cr, cu[s:e], cv[s:e], nd, accept, ratio)
    return out_d, out_c


def _owned(du, dv):
    return (dv > 0) | ((dv == 0) & (du > 0))


def rasterize(tu, tv, ok, on_hull, H, W):
    lookup = np.full((H, W), -1, dtype=np.int32)
    for sweep in range(2):
        for t in np.flatnonzero(ok & on_hull if sweep else ok):
            a, b, c = tu[t]
            u0, u1 = max(0, min(a, b, c)), min(W - 1, max(a, b, c))
            a, b, c = tv[t]
            v0, v1 = max(0, min(a, b, c)), min(H - 1, max(a, b, c))
            if u0 > u1 or v0 > v1:
                continue
            vv, uu = np.mgrid[v0 : v1 + 1, u0 : u1 + 1]
            inside = np.ones(uu.shape, dtype=bool)
            for e in range(3):
                au, av = tu[t, e], tv[t, e]
                bu, bv = tu[t, (e + 1) % 3], tv[t, (e + 1) % 3]
                w = (bu - au) * (vv - av) - (bv - av) * (uu - au)
                if sweep == 0:
                    inside &= (w > 0) | ((w == 0) & _owned(bu - au, bv - av))
                else:
                    inside &= w >= 0
            block = lookup[v0 : v1 + 1, u0 : u1 + 1]
            if sweep == 1:
                inside &= block < 0
            block[inside] = t
    return lookup


def interpolate_planes(lookup, planes, nd):
    H, W = lookup.shape
    inside = lookup >= 0
    p = planes[np.where(inside, lookup, 0)]
    vv, uu = np.mgrid[0:H, 0:W].astype(np.float64)
    with np.errstate(invalid="ignore"):
        d = p[..., 0] * uu + p[..., 1] * vv + p[..., 2]
        valid = inside & (d >= 0.0) & (d < nd)
    return np.where(valid, d, 0.0), valid


def evaluate_costs(cl, cr, disp, valid, mu, mv):
    ok = valid[mv, mu]
    xr = mu - np.floor(disp[mv, mu] + 0.5).astype(np.int64)
    ok &= xr >= 2
    xr = np.where(ok, xr, 2)
    return np.where(ok, _hamming(cl[mv, mu], cr[mv, xr]), 1.0)


def _first_per_cell(cell, primary, idx):
    order = np.lexsort((idx, primary, cell))
    sc = cell[order]
    first = np.ones(sc.shape[0], dtype=bool)
    first[1:] = sc[1:] != sc[:-1]
    return order[first]


def refine(mu, mv, c_it, d_it, disp_f, cost_f, sz, gh, gw, t_lo, t_hi):
    upd = c_it < cost_f[mv, mu]
    disp_f[mv[upd], mu[upd]] = d_it[upd]
    cost_f[mv[upd], mu[upd]] = c_it[upd]

    cell = (mv // sz) * gw + mu // sz
    idx = np.arange(mu.shape[0])

    g_u = np.zeros(gh * gw, dtype=np.int64)
    g_v = np.zeros(gh * gw, dtype=np.int64)
    g_d = np.zeros(gh * gw, dtype=np.float64)
    g_c = np.full(gh * gw, t_lo, dtype=np.float64)
    g_occ = np.zeros(gh * gw, dtype=bool)
    sel = np.flatnonzero(c_it < t_lo)
    win = sel[_first_per_cell(cell[sel], c_it[sel], idx[sel])]
    g_u[cell[win]] = mu[win]
    g_v[cell[win]] = mv[win]
    g_d[cell[win]] = d_it[win]
    g_c[cell[win]] = c_it[win]
    g_occ[cell[win]] = True

    b_u = np.zeros(gh * gw, dtype=np.int64)
    b_v = np.zeros(gh * gw, dtype=np.int64)
    b_c = np.full(gh * gw, t_hi, dtype=np.float64)
    b_occ = np.zeros(gh * gw, dtype=bool)
    sel = np.flatnonzero(c_it > t_hi)
    win = sel[_first_per_cell(cell[sel], -c_it[sel], idx[sel])]
    b_u[cell[win]] = mu[win]
    b_v[cell[win]] = mv[win]
    b_c[cell[win]] = c_it[win]
    b_occ[cell[win]] = True

    shape = (gh, gw)
    return tuple(a.reshape(shape) for a in (g_u, g_v, g_d, g_c, g_occ, b_u, b_v, b_c, b_occ))


def wta_search(cl, cr, mu, mv, nd):
    n = mu.shape[0]
    best_d = np.zeros(n, dtype=np.int64)
    best_c = np.full(n, np.inf)
    a = cl[mv, mu]
    for d in range(nd + 1):
        ok = mu - d >= 2
        if not ok.any():
            break
        c = np.where(ok, _hamming(a, cr[mv, np.where(ok, mu - d, 2)]), np.inf)
        better = c < best_c
        best_d[better] = d
        best_c[better] = c[better]
    return best_d, np.where(np.isinf(best_c), 1.0, best_c)
