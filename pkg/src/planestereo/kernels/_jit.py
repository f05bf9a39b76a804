"""Numba-compiled inner loops.

Every function here has a twin in ``_numpy`` with identical signature and
bit-identical output; ``tests/test_kernels.py`` holds them to that.
"""

import numpy as np
from numba import njit

from ._common import ARC9, CENSUS_INVALID, CIRCLE_DU, CIRCLE_DV

_INVALID = np.uint32(CENSUS_INVALID)


@njit(cache=True, nogil=True, inline="always")
def _popcount(x):
    x = np.int64(x)
    x = x - ((x >> 1) & 0x55555555)
    x = (x & 0x33333333) + ((x >> 2) & 0x33333333)
    x = (x + (x >> 4)) & 0x0F0F0F0F
    return (x * 0x01010101 & 0xFFFFFFFF) >> 24


@njit(cache=True, nogil=True)
def _census_rows(img, out, v0, v1):
    H, W = img.shape
    for v in range(max(v0, 2), min(v1, H - 2)):
        for u in range(2, W - 2):
            c = img[v, u]
            desc = 0
            k = 0
            for dy in range(-2, 3):
                for dx in range(-2, 3):
                    if dy == 0 and dx == 0:
                        continue
                    if img[v + dy, u + dx] < c:
                        desc |= 1 << k
                    k += 1
            out[v, u] = desc


def census_transform(img, threads=1):
    H, W = img.shape
    out = np.full((H, W), _INVALID, dtype=np.uint32)
    if threads <= 1:
        _census_rows(img, out, 0, H)
        return out
    from concurrent.futures import ThreadPoolExecutor

    # row bands write disjoint rows, so any schedule gives the same field
    edges = np.linspace(0, H, threads + 1).astype(np.int64)
    with ThreadPoolExecutor(threads) as pool:
        list(pool.map(lambda i: _census_rows(img, out, edges[i], edges[i + 1]), range(threads)))
    return out


@njit(cache=True, nogil=True)
def _fast_score(img, threshold, du, dv, arc9):
    H, W = img.shape
    flat = img.ravel()
    off = dv * W + du
    score = np.zeros((H, W), dtype=np.int32)
    for v in range(3, H - 3):
        row = v * W
        for u in range(3, W - 3):
            i = row + u
            c = np.int32(flat[i])
            b_bits = 0
            d_bits = 0
            s_b = 0
            s_d = 0
            # branch-free: most textured pixels reach the full test anyway
            for k in range(16):
                diff = np.int32(flat[i + off[k]]) - c
                gb = np.int32(diff >= threshold)
                gd = np.int32(-diff >= threshold)
                b_bits |= gb << k
                d_bits |= gd << k
                s_b += gb * diff
                s_d -= gd * diff
            if arc9[b_bits]:
                score[v, u] = s_b
            elif arc9[d_bits]:
                score[v, u] = s_d
    return score


@njit(cache=True, nogil=True)
def _suppress(score):
    H, W = score.shape
    out = np.zeros_like(score)
    for v in range(1, H - 1):
        for u in range(1, W - 1):
            s = score[v, u]
            if s == 0:
                continue
            keep = True
            for dy in range(-1, 2):
                for dx in range(-1, 2):
                    if dy == 0 and dx == 0:
                        continue
                    n = score[v + dy, u + dx]
                    # ties go to the earlier pixel in row-major order
                    if n > s or (n == s and (dy < 0 or (dy == 0 and dx < 0))):
                        keep = False
            if keep:
                out[v, u] = s
    return out


def fast_score(img, threshold, nms=True):
    score = _fast_score(img, np.int32(threshold), CIRCLE_DU, CIRCLE_DV, ARC9)
    return _suppress(score) if nms else score


@njit(cache=True, nogil=True)
def match_candidates(cl, cr, cu, cv, nd, accept, ratio):
    H, W = cl.shape
    n = cu.shape[0]
    out_d = np.full(n, -1, dtype=np.int64)
    out_c = np.ones(n, dtype=np.float64)
    costs = np.empty(nd + 1, dtype=np.float64)
    for i in range(n):
        u = cu[i]
        v = cv[i]
        dmax = min(nd - 1, u - 2)
        if dmax < 0:
            continue
        a = cl[v, u]
        best = 0
        for d in range(dmax + 1):
            costs[d] = _popcount(a ^ cr[v, u - d]) / 24.0
            if costs[d] < costs[best]:
                best = d
        second = np.inf
        for d in range(dmax + 1):
            if abs(d - best) > 1 and costs[d] < second:
                second = costs[d]
        bc = costs[best]
        if bc > accept:
            continue
        # an exact tie with a neighbouring disparity leaves the match ambiguous
        if best + 1 <= dmax and costs[best + 1] == bc:
            continue
        # range cut short by the image border: the true minimum may lie beyond it
        if best == dmax and dmax < nd - 1:
            continue
        if second < np.inf and not bc < ratio * second:
            continue
        # left-right check: search back from the matched right pixel
        xr = u - best
        b = cr[v, xr]
        kmax = min(nd - 1, W - 3 - xr)
        back = 0
        for k in range(kmax + 1):
            costs[k] = _popcount(b ^ cl[v, xr + k]) / 24.0
            if costs[k] < costs[back]:
                back = k
        if abs(xr + back - u) > 1:
            continue
        # the re-match must not tie with a column further away
        tied = False
        for k in range(kmax + 1):
            if abs(k - back) > 1 and costs[k] <= costs[back]:
                tied = True
                break
        if tied:
            continue
        out_d[i] = best
        out_c[i] = bc
    return out_d, out_c


@njit(cache=True, nogil=True)
def rasterize(tu, tv, ok, on_hull, H, W):
    lookup = np.full((H, W), -1, dtype=np.int32)
    M = tu.shape[0]
    w0 = np.empty(3, dtype=np.int64)
    step = np.empty(3, dtype=np.int64)
    owned = np.empty(3, dtype=np.bool_)
    for sweep in range(2):
        for t in range(M):
            if not ok[t] or (sweep == 1 and not on_hull[t]):
                continue
            u0 = max(0, min(tu[t, 0], tu[t, 1], tu[t, 2]))
            u1 = min(W - 1, max(tu[t, 0], tu[t, 1], tu[t, 2]))
            v0 = max(0, min(tv[t, 0], tv[t, 1], tv[t, 2]))
            v1 = min(H - 1, max(tv[t, 0], tv[t, 1], tv[t, 2]))
            for e in range(3):
                eu = tu[t, (e + 1) % 3] - tu[t, e]
                ev = tv[t, (e + 1) % 3] - tv[t, e]
                step[e] = -ev
                owned[e] = ev > 0 or (ev == 0 and eu > 0)
            for v in range(v0, v1 + 1):
                for e in range(3):
                    eu = tu[t, (e + 1) % 3] - tu[t, e]
                    ev = tv[t, (e + 1) % 3] - tv[t, e]
                    w0[e] = eu * (v - tv[t, e]) - ev * (u0 - tu[t, e])
                for u in range(u0, u1 + 1):
                    a = w0[0] + step[0] * (u - u0)
                    b = w0[1] + step[1] * (u - u0)
                    c = w0[2] + step[2] * (u - u0)
                    if a < 0 or b < 0 or c < 0:
                        continue
                    if sweep == 0:
                        if (a == 0 and not owned[0]) or (b == 0 and not owned[1]) or (c == 0 and not owned[2]):
                            continue
                        lookup[v, u] = t
                    elif lookup[v, u] < 0:
                        lookup[v, u] = t
    return lookup


@njit(cache=True, nogil=True)
def interpolate_planes(lookup, planes, nd):
    H, W = lookup.shape
    disp = np.zeros((H, W), dtype=np.float64)
    valid = np.zeros((H, W), dtype=np.bool_)
    for v in range(H):
        for u in range(W):
            t = lookup[v, u]
            if t < 0:
                continue
            d = planes[t, 0] * u + planes[t, 1] * v + planes[t, 2]
            if d >= 0.0 and d < nd:
                disp[v, u] = d
                valid[v, u] = True
    return disp, valid


@njit(cache=True, nogil=True)
def evaluate_costs(cl, cr, disp, valid, mu, mv):
    n = mu.shape[0]
    cost = np.ones(n, dtype=np.float64)
    for i in range(n):
        u = mu[i]
        v = mv[i]
        if not valid[v, u]:
            continue
        xr = u - np.int64(np.floor(disp[v, u] + 0.5))
        if xr < 2:
            continue
        cost[i] = _popcount(cl[v, u] ^ cr[v, xr]) / 24.0
    return cost


@njit(cache=True, nogil=True)
def refine(mu, mv, c_it, d_it, disp_f, cost_f, sz, gh, gw, t_lo, t_hi):
    g_u = np.zeros((gh, gw), dtype=np.int64)
    g_v = np.zeros((gh, gw), dtype=np.int64)
    g_d = np.zeros((gh, gw), dtype=np.float64)
    g_c = np.full((gh, gw), t_lo, dtype=np.float64)
    g_occ = np.zeros((gh, gw), dtype=np.bool_)
    b_u = np.zeros((gh, gw), dtype=np.int64)
    b_v = np.zeros((gh, gw), dtype=np.int64)
    b_c = np.full((gh, gw), t_hi, dtype=np.float64)
    b_occ = np.zeros((gh, gw), dtype=np.bool_)
    for i in range(mu.shape[0]):
        u = mu[i]
        v = mv[i]
        c = c_it[i]
        gu = u // sz
        gv = v // sz
        if c < cost_f[v, u]:
            disp_f[v, u] = d_it[i]
            cost_f[v, u] = c
        if c < t_lo and c < g_c[gv, gu]:
            g_u[gv, gu] = u
            g_v[gv, gu] = v
            g_d[gv, gu] = d_it[i]
            g_c[gv, gu] = c
            g_occ[gv, gu] = True
        if c > t_hi and c > b_c[gv, gu]:
            b_u[gv, gu] = u
            b_v[gv, gu] = v
            b_c[gv, gu] = c
            b_occ[gv, gu] = True
    return g_u, g_v, g_d, g_c, g_occ, b_u, b_v, b_c, b_occ


@njit(cache=True, nogil=True)
def wta_search(cl, cr, mu, mv, nd):
    n = mu.shape[0]
    out_d = np.zeros(n, dtype=np.int64)
    out_c = np.ones(n, dtype=np.float64)
    for i in range(n):
        u = mu[i]
        v = mv[i]
        a = cl[v, u]
        best_c = np.inf
        best = 0
        for d in range(min(nd, u - 2) + 1):
            c = _popcount(a ^ cr[v, u - d]) / 24.0
            if c < best_c:
                best_c = c
                best = d
        if best_c < np.inf:
            out_d[i] = best
            out_c[i] = best_c
    return out_d, out_c
