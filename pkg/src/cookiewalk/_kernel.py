"""Compiled single-replica walk kernel.

Same stepping rule, same uniform stream and same site hash as
``walk.step``; visit counts live in an open-addressing table keyed by site
coordinates. One call runs one replica and writes a row of summary
statistics. The kernel releases the GIL so replica blocks can run on
threads.
"""

import numpy as np
from numba import njit

from ._mix import site_uniform_nb, uniform_nb

# summary columns
STEPS = 0
STOP = 1
PROJ = 2
DRIFT = 3
DRIFT_SLAB0 = 4
DRIFT_PLUS = 5
DRIFT_MINUS = 6
MART = 7
MIN_PROJ = 8
MAX_PROJ = 9
RETURNS = 10
SIGN_CHANGES = 11
LATE_MIN_PROJ = 12
LATE_RETURNS = 13
LATE_LEVEL_VISITS = 14
FIRST_RETURN = 15
HIT_TIME = 16
DISTINCT_SITES = 17
LAST_RETURN = 18
LAST_NONPOS = 19
N_FIELDS = 20

FIELD_NAMES = (
    "steps", "stop", "proj", "drift", "drift_slab0", "drift_plus", "drift_minus",
    "mart", "min_proj", "max_proj", "returns", "sign_changes", "late_min_proj",
    "late_returns", "late_level_visits", "first_return", "hit_time",
    "distinct_sites", "last_return", "last_nonpos",
)

STOP_CODES = ("HitRight", "HitLeft", "Returned", "Budget")
HIT_RIGHT, HIT_LEFT, RETURNED, BUDGET = 0, 1, 2, 3

OK = 0
SITE_CAP = 1

_TOL = 1e-12
_INIT_CAP = 1 << 10


# Table rows: [used, visits, offset, stack, coord_0, ..., coord_{dim-1}].
_USED, _VISITS, _OFFS, _STK, _KEY = 0, 1, 2, 3, 4

# Slot hash: runs of 8 consecutive first coordinates share a block of
# neighbouring rows (cache locality); blocks are scattered by a multiplicative
# mix so rows from different transverse coordinates do not pile up.
_MULTS = np.array([1, 0x9E3779B1, 0x85EBCA77, 0xC2B2AE3D, 0x27D4EB2F,
                   0x165667B1, 0xD3A2646C, 0xFD7046C5], dtype=np.int64)
_SCATTER = np.int64(-7046029254386353131)  # 0x9E3779B97F4A7C15 as int64


@njit(inline="always", cache=True)
def _choose(cookie_cdf, k, slot, u, n_slots):
    # first slot whose cumulative probability exceeds u; counting instead of
    # searching keeps the random branch out of the loop
    j = 0
    for e in range(n_slots - 1):
        j += cookie_cdf[k, slot, e] <= u
    return j


@njit(inline="always", cache=True)
def _slot_hash(pos, dim, strip_width):
    if strip_width > 0:
        return pos[0] * strip_width + pos[1]
    h = pos[0] >> 3
    for j in range(1, dim):
        h += pos[j] * _MULTS[j % 8]
    h *= _SCATTER
    h ^= h >> 29
    return (h << 3) | (pos[0] & 7)


@njit(inline="always", cache=True)
def _find_or_insert(tab, pos, dim, strip_width, mask):
    """Row of ``pos``; second value is True when it was newly claimed."""
    h = _slot_hash(pos, dim, strip_width) & mask
    while True:
        if tab[h, _USED] == 0:
            tab[h, _USED] = 1
            tab[h, _STK] = -1
            for j in range(dim):
                tab[h, _KEY + j] = pos[j]
            return h, True
        same = True
        for j in range(dim):
            if tab[h, _KEY + j] != pos[j]:
                same = False
                break
        if same:
            return h, False
        h = (h + 1) & mask


@njit(cache=True)
def _grow(tab, dim, strip_width):
    cap = tab.shape[0] * 2
    mask = cap - 1
    new = np.zeros((cap, _KEY + dim), dtype=np.int64)
    for s in range(tab.shape[0]):
        if tab[s, _USED]:
            t, _ = _find_or_insert(new, tab[s, _KEY:], dim, strip_width, mask)
            new[t, _VISITS] = tab[s, _VISITS]
            new[t, _OFFS] = tab[s, _OFFS]
            new[t, _STK] = tab[s, _STK]
    return new


@njit(cache=True)
def _stack_for(pos, origin, dim, strip_width, env_seed, n_support, stack_cdf, base):
    if n_support == 1:
        return 0
    for j in range(dim):
        base[j] = pos[j] + origin[j]
    if strip_width > 0:
        base[1] = base[1] % strip_width
    u = site_uniform_nb(env_seed, base)
    for k in range(n_support):
        if u < stack_cdf[k]:
            return k
    return n_support - 1


@njit(inline="always", cache=True)
def _project(pos, dirvec, dim):
    p = 0.0
    for j in range(dim):
        p += pos[j] * dirvec[j]
    return p


# integer state carried between the driver and the hot loop
_I_N, _I_CUR, _I_SIZE, _I_DISTINCT, _I_CK, _I_STOP, _I_LAST_SIGN, _I_STATUS = range(8)
_N_ISTATE = 8
_NEED_GROW = 1


@njit(nogil=True, cache=True)
def _advance(tab, pos, base, ist, out, out_mart, out_proj,
             dim, strip_width, dirvec, env_seed, n_support, stack_cdf, plen, cookie_cdf,
             cookie_drift, origin, start, proj0, walk_key, max_steps,
             use_right, right_level, use_left, left_level, stop_on_return,
             late_start, checkpoints, misindex, site_cap):
    """Hot loop: step until a stop fires or the table needs to grow."""
    n_slots = 2 * dim
    cap = tab.shape[0]
    mask = cap - 1
    n = ist[_I_N]
    cur = ist[_I_CUR]
    size = ist[_I_SIZE]
    distinct = ist[_I_DISTINCT]
    ck = ist[_I_CK]
    stop = ist[_I_STOP]
    last_sign = ist[_I_LAST_SIGN]
    status = ist[_I_STATUS]
    n_ck = checkpoints.shape[0]

    rel = out[PROJ]
    proj = proj0 + rel
    drift = out[DRIFT]
    d_slab0 = out[DRIFT_SLAB0]
    d_plus = out[DRIFT_PLUS]
    d_minus = out[DRIFT_MINUS]
    mart = out[MART]
    min_p = out[MIN_PROJ]
    max_p = out[MAX_PROJ]
    returns = np.int64(out[RETURNS])
    sign_changes = np.int64(out[SIGN_CHANGES])
    late_min = out[LATE_MIN_PROJ]
    late_returns = np.int64(out[LATE_RETURNS])
    late_level = np.int64(out[LATE_LEVEL_VISITS])
    first_return = np.int64(out[FIRST_RETURN])
    hit_time = np.int64(out[HIT_TIME])
    last_return = np.int64(out[LAST_RETURN])
    last_nonpos = np.int64(out[LAST_NONPOS])
    code = 0

    while stop < 0:
        if 2 * size > cap:
            code = _NEED_GROW
            break
        if n >= max_steps:
            stop = BUDGET
            break
        k = tab[cur, _STK]
        c = tab[cur, _VISITS] - 1 + tab[cur, _OFFS]
        pl = plen[k]
        slot = c if c < pl else pl
        if misindex:
            c2 = c + 1
            dr = cookie_drift[k, c2 if c2 < pl else pl]
        else:
            dr = cookie_drift[k, slot]
        drift += dr
        z = np.floor(proj + _TOL)
        if z >= 0:
            d_plus += dr
            if z == 0:
                d_slab0 += dr
        else:
            d_minus += dr

        j = _choose(cookie_cdf, k, slot, uniform_nb(walk_key, n), n_slots)
        axis = j // 2
        if j % 2 == 0:
            pos[axis] += 1
        else:
            pos[axis] -= 1
        if strip_width > 0 and axis == 1:
            pos[1] = pos[1] % strip_width

        cur, fresh = _find_or_insert(tab, pos, dim, strip_width, mask)
        if fresh:
            size += 1
            tab[cur, _STK] = _stack_for(pos, origin, dim, strip_width, env_seed, n_support,
                                        stack_cdf, base)
        if tab[cur, _VISITS] == 0:
            distinct += 1
            if distinct > site_cap:
                status = SITE_CAP
                stop = BUDGET
        tab[cur, _VISITS] += 1
        n += 1

        proj = _project(pos, dirvec, dim)
        rel = proj - proj0
        mart = rel - drift
        if rel < min_p:
            min_p = rel
        if rel > max_p:
            max_p = rel
        s = 1 if rel > _TOL else (-1 if rel < -_TOL else 0)
        if s != 0:
            if last_sign != 0 and s != last_sign:
                sign_changes += 1
            last_sign = s
        at_start = True
        for a in range(dim):
            if pos[a] != start[a]:
                at_start = False
                break
        if at_start:
            returns += 1
            last_return = n
            if first_return < 0:
                first_return = n
        if rel <= _TOL:
            last_nonpos = n
        if n >= late_start:
            if rel < late_min:
                late_min = rel
            if at_start:
                late_returns += 1
            if rel <= _TOL:
                late_level += 1
        while ck < n_ck and checkpoints[ck] <= n:
            out_mart[ck] = mart
            out_proj[ck] = rel
            ck += 1

        if stop >= 0:
            break
        if use_right and rel + _TOL >= right_level:
            stop = HIT_RIGHT
            hit_time = n
        elif use_left and rel - _TOL <= left_level:
            stop = HIT_LEFT
        elif stop_on_return and at_start:
            stop = RETURNED

    ist[_I_N] = n
    ist[_I_CUR] = cur
    ist[_I_SIZE] = size
    ist[_I_DISTINCT] = distinct
    ist[_I_CK] = ck
    ist[_I_STOP] = stop
    ist[_I_LAST_SIGN] = last_sign
    ist[_I_STATUS] = status
    out[STEPS] = n
    out[STOP] = stop
    out[PROJ] = rel
    out[DRIFT] = drift
    out[DRIFT_SLAB0] = d_slab0
    out[DRIFT_PLUS] = d_plus
    out[DRIFT_MINUS] = d_minus
    out[MART] = mart
    out[MIN_PROJ] = min_p
    out[MAX_PROJ] = max_p
    out[RETURNS] = returns
    out[SIGN_CHANGES] = sign_changes
    out[LATE_MIN_PROJ] = late_min
    out[LATE_RETURNS] = late_returns
    out[LATE_LEVEL_VISITS] = late_level
    out[FIRST_RETURN] = first_return
    out[HIT_TIME] = hit_time
    out[DISTINCT_SITES] = distinct
    out[LAST_RETURN] = last_return
    out[LAST_NONPOS] = last_nonpos
    return code


# Dense rows for Z and strips, int16: [state, stack], row (x - lo) * width + y.
# state = VISITED bit | min(visits + offset, CNT_SAT). The cookie index only
# matters up to the prefix length, so saturation is lossless while every
# prefix is shorter than CNT_SAT (run_replica falls back to the table
# otherwise).
_LC, _LS = 0, 1
_VISITED = 1 << 14
_CNT_MASK = _VISITED - 1
CNT_SAT = _CNT_MASK
DENSE_MAX_STACKS = (1 << 15) - 1


@njit(inline="always", cache=True)
def _arrive(dense, row):
    """Count a visit; True when the site had not been visited before."""
    st = np.int64(dense[row, _LC])
    cnt = st & _CNT_MASK
    if cnt < CNT_SAT:
        cnt += 1
    dense[row, _LC] = _VISITED | cnt
    return st < _VISITED


@njit(nogil=True, cache=True)
def _advance_line(dense, lo, width, ist, out, out_mart, out_proj, pos,
                  strip_width, env_seed, n_support, stack_cdf, plen, cookie_cdf,
                  cookie_drift, origin, start, proj0, walk_key, max_steps,
                  use_right, right_level, use_left, left_level, stop_on_return,
                  late_start, checkpoints, misindex, site_cap):
    """Hot loop for Z and strips; exits when the walker leaves the dense window.

    Mirrors ``_advance`` step for step (the projection is the first
    coordinate, ``proj0`` the start's).
    """
    n_rows = dense.shape[0] // width
    dd = 2 if strip_width > 0 else 1
    site = np.zeros(dd, dtype=np.int64)
    base = np.zeros(dd, dtype=np.int64)
    n_slots = 2 * dd
    dx = np.array([1, -1, 0, 0], dtype=np.int64)
    dy = np.array([0, 0, 1, -1], dtype=np.int64)
    x = pos[0]
    y = pos[1] if strip_width > 0 else 0
    sx = start[0]
    sy = start[1] if strip_width > 0 else 0
    n = ist[_I_N]
    distinct = ist[_I_DISTINCT]
    ck = ist[_I_CK]
    stop = ist[_I_STOP]
    last_sign = ist[_I_LAST_SIGN]
    status = ist[_I_STATUS]
    n_ck = checkpoints.shape[0]

    rel = out[PROJ]
    drift = out[DRIFT]
    d_slab0 = out[DRIFT_SLAB0]
    d_plus = out[DRIFT_PLUS]
    d_minus = out[DRIFT_MINUS]
    mart = out[MART]
    min_p = out[MIN_PROJ]
    max_p = out[MAX_PROJ]
    returns = np.int64(out[RETURNS])
    sign_changes = np.int64(out[SIGN_CHANGES])
    late_min = out[LATE_MIN_PROJ]
    late_returns = np.int64(out[LATE_RETURNS])
    late_level = np.int64(out[LATE_LEVEL_VISITS])
    first_return = np.int64(out[FIRST_RETURN])
    hit_time = np.int64(out[HIT_TIME])
    last_return = np.int64(out[LAST_RETURN])
    last_nonpos = np.int64(out[LAST_NONPOS])
    code = 0
    row = (x - lo) * width + y

    while stop < 0:
        if n >= max_steps:
            stop = BUDGET
            break
        k = np.int64(dense[row, _LS])
        c = (np.int64(dense[row, _LC]) & _CNT_MASK) - 1
        pl = plen[k]
        slot = c if c < pl else pl
        if misindex:
            c2 = c + 1
            dr = cookie_drift[k, c2 if c2 < pl else pl]
        else:
            dr = cookie_drift[k, slot]
        drift += dr
        if x >= 0:
            d_plus += dr
            if x == 0:
                d_slab0 += dr
        else:
            d_minus += dr

        j = _choose(cookie_cdf, k, slot, uniform_nb(walk_key, n), n_slots)
        x += dx[j]
        y += dy[j]
        y += strip_width * (np.int64(y < 0) - np.int64(y >= strip_width))
        n += 1
        if x < lo or x >= lo + n_rows:
            code = _NEED_GROW
        else:
            row = (x - lo) * width + y
            if dense[row, _LS] < 0:
                site[0] = x
                if strip_width > 0:
                    site[1] = y
                dense[row, _LS] = _stack_for(site, origin, dd, strip_width, env_seed,
                                             n_support, stack_cdf, base)
            if _arrive(dense, row):
                distinct += 1
                if distinct > site_cap:
                    status = SITE_CAP
                    stop = BUDGET

        rel = np.float64(x) - proj0
        mart = rel - drift
        if rel < min_p:
            min_p = rel
        if rel > max_p:
            max_p = rel
        s = 1 if rel > _TOL else (-1 if rel < -_TOL else 0)
        if s != 0:
            if last_sign != 0 and s != last_sign:
                sign_changes += 1
            last_sign = s
        at_start = x == sx and y == sy
        if at_start:
            returns += 1
            last_return = n
            if first_return < 0:
                first_return = n
        if rel <= _TOL:
            last_nonpos = n
        if n >= late_start:
            if rel < late_min:
                late_min = rel
            if at_start:
                late_returns += 1
            if rel <= _TOL:
                late_level += 1
        while ck < n_ck and checkpoints[ck] <= n:
            out_mart[ck] = mart
            out_proj[ck] = rel
            ck += 1

        if stop < 0:
            if use_right and rel + _TOL >= right_level:
                stop = HIT_RIGHT
                hit_time = n
            elif use_left and rel - _TOL <= left_level:
                stop = HIT_LEFT
            elif stop_on_return and at_start:
                stop = RETURNED
        if code == _NEED_GROW:
            break

    pos[0] = x
    if strip_width > 0:
        pos[1] = y
    ist[_I_N] = n
    ist[_I_DISTINCT] = distinct
    ist[_I_CK] = ck
    ist[_I_STOP] = stop
    ist[_I_LAST_SIGN] = last_sign
    ist[_I_STATUS] = status
    out[STEPS] = n
    out[STOP] = stop
    out[PROJ] = rel
    out[DRIFT] = drift
    out[DRIFT_SLAB0] = d_slab0
    out[DRIFT_PLUS] = d_plus
    out[DRIFT_MINUS] = d_minus
    out[MART] = mart
    out[MIN_PROJ] = min_p
    out[MAX_PROJ] = max_p
    out[RETURNS] = returns
    out[SIGN_CHANGES] = sign_changes
    out[LATE_MIN_PROJ] = late_min
    out[LATE_RETURNS] = late_returns
    out[LATE_LEVEL_VISITS] = late_level
    out[FIRST_RETURN] = first_return
    out[HIT_TIME] = hit_time
    out[DISTINCT_SITES] = distinct
    out[LAST_RETURN] = last_return
    out[LAST_NONPOS] = last_nonpos
    return code


@njit(cache=True)
def _regrow_line(dense, lo, width, x):
    """Double the dense window (repeatedly) until it covers ``x``."""
    n_rows = dense.shape[0] // width
    new_rows = n_rows
    new_lo = lo
    while x < new_lo or x >= new_lo + new_rows:
        new_lo -= new_rows // 2
        new_rows *= 2
    new = np.zeros((new_rows * width, 2), dtype=np.int16)
    new[:, _LS] = -1
    shift = (lo - new_lo) * width
    new[shift:shift + dense.shape[0]] = dense
    return new, new_lo


@njit(nogil=True, cache=True)
def _run_line(strip_width, env_seed, n_support, stack_cdf, plen, cookie_cdf, cookie_drift,
              pre_sites, pre_offsets, pre_stacks, origin, start, walk_key, max_steps,
              use_right, right_level, use_left, left_level, stop_on_return,
              late_start, checkpoints, misindex, site_cap, out, out_mart, out_proj, ist):
    width = strip_width if strip_width > 0 else 1
    dd = 2 if strip_width > 0 else 1
    lo = start[0] - 512
    n_rows = 1024
    for r in range(pre_sites.shape[0]):
        while pre_sites[r, 0] < lo or pre_sites[r, 0] >= lo + n_rows:
            lo -= n_rows // 2
            n_rows *= 2
    dense = np.zeros((n_rows * width, 2), dtype=np.int16)
    dense[:, _LS] = -1
    base = np.zeros(dd, dtype=np.int64)
    for r in range(pre_sites.shape[0]):
        yy = pre_sites[r, 1] if strip_width > 0 else 0
        row = (pre_sites[r, 0] - lo) * width + yy
        dense[row, _LC] = min(pre_offsets[r], CNT_SAT)
        if pre_stacks[r] >= 0:
            dense[row, _LS] = pre_stacks[r]
        else:
            dense[row, _LS] = _stack_for(pre_sites[r], origin, dd, strip_width, env_seed,
                                         n_support, stack_cdf, base)
    pos = start.copy()
    sy = start[1] if strip_width > 0 else 0
    row = (start[0] - lo) * width + sy
    if dense[row, _LS] < 0:
        dense[row, _LS] = _stack_for(pos, origin, dd, strip_width, env_seed, n_support,
                                     stack_cdf, base)
    _arrive(dense, row)
    proj0 = np.float64(start[0])
    while True:
        code = _advance_line(dense, lo, width, ist, out, out_mart, out_proj, pos,
                             strip_width, env_seed, n_support, stack_cdf, plen, cookie_cdf,
                             cookie_drift, origin, start, proj0, walk_key, max_steps,
                             use_right, right_level, use_left, left_level,
                             stop_on_return, late_start, checkpoints, misindex, site_cap)
        if code != _NEED_GROW:
            break
        dense, lo = _regrow_line(dense, lo, width, pos[0])
        # finish the arrival bookkeeping the hot loop skipped
        y = pos[1] if strip_width > 0 else 0
        row = (pos[0] - lo) * width + y
        if dense[row, _LS] < 0:
            dense[row, _LS] = _stack_for(pos, origin, dd, strip_width, env_seed, n_support,
                                         stack_cdf, base)
        if _arrive(dense, row):
            ist[_I_DISTINCT] += 1
            out[DISTINCT_SITES] = ist[_I_DISTINCT]
            if ist[_I_DISTINCT] > site_cap:
                ist[_I_STATUS] = SITE_CAP
                if ist[_I_STOP] < 0:
                    ist[_I_STOP] = BUDGET
    return ist[_I_STATUS]


@njit(nogil=True, cache=True)
def run_replica(dim, strip_width, dirvec, unit_proj,
                env_seed, n_support, stack_cdf, plen, cookie_cdf, cookie_drift,
                pre_sites, pre_offsets, pre_stacks, origin,
                start, walk_key, max_steps,
                use_right, right_level, use_left, left_level, stop_on_return,
                late_start, checkpoints, misindex, site_cap,
                out, out_mart, out_proj):
    """Run one replica; fills ``out`` (summary row) and the checkpoint rows.

    Returns ``OK`` or ``SITE_CAP``.
    """
    out[:] = 0.0
    out[LATE_MIN_PROJ] = np.inf
    out[FIRST_RETURN] = -1
    out[LAST_RETURN] = -1
    out[HIT_TIME] = -1
    if late_start <= 0:
        out[LATE_MIN_PROJ] = 0.0
        out[LATE_LEVEL_VISITS] = 1
    ist = np.zeros(_N_ISTATE, dtype=np.int64)
    ist[_I_DISTINCT] = 1
    ist[_I_STOP] = -1
    ck = 0
    while ck < checkpoints.shape[0] and checkpoints[ck] <= 0:
        out_mart[ck] = 0.0
        out_proj[ck] = 0.0
        ck += 1
    ist[_I_CK] = ck
    if use_right and _TOL >= right_level:
        ist[_I_STOP] = HIT_RIGHT
        out[HIT_TIME] = 0
    elif use_left and -_TOL <= left_level:
        ist[_I_STOP] = HIT_LEFT

    dense_ok = plen.max() < CNT_SAT and cookie_cdf.shape[0] <= DENSE_MAX_STACKS
    if (dim == 1 or strip_width > 0) and dense_ok:
        status = _run_line(strip_width, env_seed, n_support, stack_cdf, plen, cookie_cdf,
                           cookie_drift, pre_sites, pre_offsets, pre_stacks, origin, start,
                           walk_key, max_steps, use_right, right_level, use_left, left_level,
                           stop_on_return, late_start, checkpoints, misindex, site_cap,
                           out, out_mart, out_proj, ist)
    else:
        status = _run_hashed(dim, strip_width, dirvec, env_seed, n_support, stack_cdf, plen, cookie_cdf,
                             cookie_drift, pre_sites, pre_offsets, pre_stacks, origin,
                             start, walk_key, max_steps, use_right, right_level, use_left,
                             left_level, stop_on_return, late_start, checkpoints, misindex,
                             site_cap, out, out_mart, out_proj, ist)
    out[STOP] = ist[_I_STOP]
    ck = ist[_I_CK]
    while ck < checkpoints.shape[0]:
        out_mart[ck] = out[MART]
        out_proj[ck] = out[PROJ]
        ck += 1
    return status


@njit(nogil=True, cache=True)
def _run_hashed(dim, strip_width, dirvec, env_seed, n_support, stack_cdf, plen, cookie_cdf,
                cookie_drift, pre_sites, pre_offsets, pre_stacks, origin, start, walk_key,
                max_steps, use_right, right_level, use_left, left_level, stop_on_return,
                late_start, checkpoints, misindex, site_cap, out, out_mart, out_proj, ist):
    cap = _INIT_CAP
    while cap < 4 * (pre_sites.shape[0] + 1):
        cap *= 2
    mask = cap - 1
    tab = np.zeros((cap, _KEY + dim), dtype=np.int64)
    base = np.zeros(dim, dtype=np.int64)
    pos = start.copy()

    size = 0
    for r in range(pre_sites.shape[0]):
        s, fresh = _find_or_insert(tab, pre_sites[r], dim, strip_width, mask)
        if fresh:
            size += 1
        tab[s, _OFFS] = pre_offsets[r]
        if pre_stacks[r] >= 0:
            tab[s, _STK] = pre_stacks[r]
        else:
            tab[s, _STK] = _stack_for(pre_sites[r], origin, dim, strip_width, env_seed,
                                      n_support, stack_cdf, base)
    cur, fresh = _find_or_insert(tab, pos, dim, strip_width, mask)
    if fresh:
        size += 1
        tab[cur, _STK] = _stack_for(pos, origin, dim, strip_width, env_seed, n_support,
                                    stack_cdf, base)
    tab[cur, _VISITS] += 1
    ist[_I_CUR] = cur
    ist[_I_SIZE] = size
    proj0 = _project(pos, dirvec, dim)

    while True:
        code = _advance(tab, pos, base, ist, out, out_mart, out_proj,
                        dim, strip_width, dirvec, env_seed, n_support, stack_cdf, plen,
                        cookie_cdf, cookie_drift, origin, start, proj0, walk_key,
                        max_steps, use_right, right_level, use_left, left_level,
                        stop_on_return, late_start, checkpoints, misindex, site_cap)
        if code != _NEED_GROW:
            break
        tab = _grow(tab, dim, strip_width)
        cur, _ = _find_or_insert(tab, pos, dim, strip_width, tab.shape[0] - 1)
        ist[_I_CUR] = cur
    return ist[_I_STATUS]
