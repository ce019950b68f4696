"""Compiled kernels for Nyquist-density sups.

Every region cell is classified against each candidate disk D_R(c) through
pseudohyperbolic bounds: with rho the distance from c to the cell centre and
delta the cell's radius, every point of the cell lies at distance between
q_in = (rho - delta)/(1 - rho delta) and q_out = (rho + delta)/(1 + rho delta).
Refinement works on Euclidean boxes, since D_R(c) and every primitive are
Euclidean disks, rectangles or disk differences.
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np

PRIM_DISK, PRIM_RECT, PRIM_ANNULUS = 0, 1, 2
ENVELOPE_BINS = 4096


@nb.njit(cache=True)
def _pdist(x1, s1, x2, s2):
    dx = x1 - x2
    num = dx * dx + (s1 - s2) ** 2
    den = dx * dx + (s1 + s2) ** 2
    return math.sqrt(num / den)


@nb.njit(cache=True)
def _bracket(rho, delta):
    if rho <= delta:
        lo = 0.0
    else:
        lo = (rho - delta) / (1.0 - rho * delta)
    hi = (rho + delta) / (1.0 + rho * delta)
    return lo, hi


@nb.njit(cache=True)
def _box_meets_disk(x0, x1, s0, s1, cx, cs, r):
    px = min(max(cx, x0), x1) - cx
    ps = min(max(cs, s0), s1) - cs
    return px * px + ps * ps <= r * r


@nb.njit(cache=True)
def _box_in_disk(x0, x1, s0, s1, cx, cs, r):
    fx = max(abs(x0 - cx), abs(x1 - cx))
    fs = max(abs(s0 - cs), abs(s1 - cs))
    return fx * fx + fs * fs < r * r


@nb.njit(cache=True)
def _box_vs_prims(x0, x1, s0, s1, prims):
    """0: misses every primitive, 2: inside one primitive, 1: undecided."""
    meets = False
    for k in range(prims.shape[0]):
        kind = int(prims[k, 0])
        if kind == PRIM_DISK:
            m = _box_meets_disk(x0, x1, s0, s1, prims[k, 1], prims[k, 2], prims[k, 3])
            inside = m and _box_in_disk(x0, x1, s0, s1, prims[k, 1], prims[k, 2], prims[k, 3])
        elif kind == PRIM_RECT:
            m = x1 >= prims[k, 1] and x0 <= prims[k, 2] and s1 >= prims[k, 3] and s0 <= prims[k, 4]
            inside = x0 >= prims[k, 1] and x1 <= prims[k, 2] and s0 >= prims[k, 3] and s1 <= prims[k, 4]
        else:
            m = (_box_meets_disk(x0, x1, s0, s1, prims[k, 1], prims[k, 2], prims[k, 3])
                 and not _box_in_disk(x0, x1, s0, s1, prims[k, 4], prims[k, 5], prims[k, 6]))
            inside = (_box_in_disk(x0, x1, s0, s1, prims[k, 1], prims[k, 2], prims[k, 3])
                      and not _box_meets_disk(x0, x1, s0, s1, prims[k, 4], prims[k, 5], prims[k, 6]))
        if inside:
            return 2
        if m:
            meets = True
    return 1 if meets else 0


def envelope_table(env: np.ndarray) -> np.ndarray:
    """Sparse table: row l holds max(env[i : i + 2^l]) so range maxima cost O(1)."""
    n = env.size
    levels = max(1, int(math.log2(n)) + 1)
    table = np.zeros((levels, n))
    table[0] = env
    for lev in range(1, levels):
        h = 1 << (lev - 1)
        table[lev, : n - h] = np.maximum(table[lev - 1, : n - h], table[lev - 1, h:])
        table[lev, n - h:] = table[lev - 1, n - h:]
    return table


@nb.njit(cache=True)
def _env_max(env, lo, hi):
    """Largest envelope value over the bins meeting [lo, hi]."""
    n = env.shape[1]
    a = min(int(lo * n), n - 1)
    b = min(int(hi * n), n - 1)
    if b < a:
        b = a
    lev = 0
    while (2 << lev) <= b - a + 1:
        lev += 1
    return max(env[lev, a], env[lev, b - (1 << lev) + 1])


@nb.njit(cache=True)
def _profile_at(prof, rho):
    # linear interpolation in a fine table; only used for point estimates
    n = prof.shape[0] - 1
    t = rho * n
    k = min(int(t), n - 1)
    f = t - k
    return prof[k] * (1 - f) + prof[k + 1] * f


@nb.njit(parallel=True, cache=True)
def cell_level_scan(cand_x, cand_s, cand_delta, cx, cs, cdelta, cw, cind, radii, env, prof):
    """Cell-level bounds for every candidate and every radius.

    A candidate stands for every centre within pseudohyperbolic distance
    ``cand_delta`` of (cand_x, cand_s); the bounds hold for all of them.
    Returns (rho_ub, d_ub, rho_est, d_est), each of shape (ncand, nR).  The
    centre-rule estimates are only meaningful for point candidates
    (``cand_delta == 0``).  ``radii`` must be increasing.
    """
    nc = cand_x.shape[0]
    nr = radii.shape[0]
    rho_ub = np.zeros((nc, nr))
    rho_est = np.zeros((nc, nr))
    d_ub = np.zeros((nc, nr))
    d_est = np.zeros((nc, nr))
    rmax = radii[nr - 1]
    for c in nb.prange(nc):
        h_ub = np.zeros(nr + 1)
        h_est = np.zeros(nr + 1)
        h_dub = np.zeros(nr + 1)
        h_dest = np.zeros(nr + 1)
        dc = cand_delta[c]
        for k in range(cx.shape[0]):
            rho = _pdist(cand_x[c], cand_s[c], cx[k], cs[k])
            d = (cdelta[k] + dc) / (1.0 + cdelta[k] * dc)
            lo, hi = _bracket(rho, d)
            if lo < rmax:
                j = np.searchsorted(radii, lo, side="right")
                h_ub[j] += cw[k]
                h_dub[j] += cw[k] * _env_max(env, lo, hi)
            if cind[k] and rho < rmax:
                j = np.searchsorted(radii, rho, side="right")
                h_est[j] += cw[k]
                h_dest[j] += cw[k] * _profile_at(prof, rho)
        a0 = 0.0
        a1 = 0.0
        a2 = 0.0
        a3 = 0.0
        for j in range(nr):
            a0 += h_ub[j]
            a1 += h_est[j]
            a2 += h_dub[j]
            a3 += h_dest[j]
            rho_ub[c, j] = a0
            rho_est[c, j] = a1
            d_ub[c, j] = a2
            d_est[c, j] = a3
    return rho_ub, d_ub, rho_est, d_est


@nb.njit(cache=True)
def refine_candidate(px, ps, R, x0, x1, s0, s1, ccls, cw, prims, env, max_depth):
    """Sound bounds on |Delta cap D_R(p)| and on the kernel-weighted density.

    Region cells (Euclidean boxes with class 2 = inside Delta, 1 = undecided)
    are split 2 x 2 (geometric in s) until each box is decided against both
    D_R(p) and Delta or ``max_depth`` is reached.  Undecided boxes at the
    last level count towards the upper bound only.
    Returns (upper, lower, kernel_upper).
    """
    q = 1.0 - R * R
    dcx = px
    dcs = ps * (1.0 + R * R) / q
    dr = 2.0 * R * ps / q
    use_prims = prims.shape[0] > 0
    ub = 0.0
    lb = 0.0
    kub = 0.0
    cap = 4 * (max_depth + 1) + 8
    sx0 = np.empty(cap)
    sx1 = np.empty(cap)
    ss0 = np.empty(cap)
    ss1 = np.empty(cap)
    scl = np.empty(cap, dtype=np.int64)
    sdp = np.empty(cap, dtype=np.int64)
    for k in range(x0.shape[0]):
        top = 0
        sx0[0] = x0[k]
        sx1[0] = x1[k]
        ss0[0] = s0[k]
        ss1[0] = s1[k]
        scl[0] = ccls[k]
        sdp[0] = 0
        top = 1
        while top > 0:
            top -= 1
            a0 = sx0[top]
            a1 = sx1[top]
            b0 = ss0[top]
            b1 = ss1[top]
            cl = scl[top]
            dp = sdp[top]
            if not _box_meets_disk(a0, a1, b0, b1, dcx, dcs, dr):
                continue
            if cl == 1 and use_prims and dp > 0:
                cl = _box_vs_prims(a0, a1, b0, b1, prims)
                if cl == 0:
                    continue
            meas = (a1 - a0) * (1.0 / b0 - 1.0 / b1)
            bm = 0.5 * (a0 + a1)
            sm = math.sqrt(b0 * b1)
            delta = max(_pdist(bm, sm, a1, b0), _pdist(bm, sm, a1, b1))
            lo, hi = _bracket(_pdist(px, ps, bm, sm), delta)
            inside = _box_in_disk(a0, a1, b0, b1, dcx, dcs, dr)
            if (inside and cl == 2) or dp >= max_depth:
                ub += meas
                kub += meas * _env_max(env, lo, min(hi, R))
                if inside and cl == 2:
                    lb += meas
                continue
            xm = bm
            for ix in range(2):
                for js in range(2):
                    sx0[top] = a0 if ix == 0 else xm
                    sx1[top] = xm if ix == 0 else a1
                    ss0[top] = b0 if js == 0 else sm
                    ss1[top] = sm if js == 0 else b1
                    scl[top] = cl
                    sdp[top] = dp + 1
                    top += 1
    return ub, lb, kub
