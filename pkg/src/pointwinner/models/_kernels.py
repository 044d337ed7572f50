"""Compiled split search and tree growth shared by every tree model.

Criterion ``kind`` 0 is information gain (a = sample weight, b = weight of
label 1); kind 1 is the regularized Newton gain (a = gradient, b = hessian).
"""
import numpy as np
from numba import njit

ENTROPY, NEWTON = 0, 1
GAIN_TIE = 1e-12

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True)
def _h(p):
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * np.log2(p) + (1.0 - p) * np.log2(1.0 - p))


@njit(cache=True)
def _term(g, h, lam):
    den = h + lam
    return g * g / den if den > 0.0 else 0.0


@njit(cache=True)
def gain_value(kind, lam, gamma, aL, bL, aR, bR, aT, bT):
    if kind == ENTROPY:
        hl = _h(bL / aL) if aL > 0.0 else 0.0
        hr = _h(bR / aR) if aR > 0.0 else 0.0
        return _h(bT / aT) - (aL / aT) * hl - (aR / aT) * hr
    return 0.5 * (_term(aL, bL, lam) + _term(aR, bR, lam) - _term(aT, bT, lam)) - gamma


@njit(cache=True)
def leaf_value(kind, lam, aT, bT):
    if kind == ENTROPY:
        return bT / aT if aT > 0.0 else 0.5
    return -aT / (bT + lam) if bT + lam > 0.0 else 0.0


@njit(cache=True)
def node_split(codes, values, offsets, n_bins, rows, feats, a, b, kind, lam, gamma, min_leaf,
               min_child, path):
    """Best split of ``rows`` over ``feats``; returns (found, gain, feature, threshold).

    Candidates are enumerated feature by feature (in the order given), each
    in ascending threshold order; the first candidate within GAIN_TIE of the
    best gain wins. ``path`` 0 picks per feature between a bin histogram and
    a local sort, 1 forces the histogram, 2 the sort.
    """
    m = rows.shape[0]
    if m < max(2, 2 * min_leaf):
        return False, 0.0, -1, 0.0
    aT = 0.0
    bT = 0.0
    for i in range(m):
        aT += a[rows[i]]
        bT += b[rows[i]]
    cap = 0
    for f in feats:
        cap += min(n_bins[f], m)
    c_gain = np.empty(cap)
    c_feat = np.empty(cap, dtype=np.int64)
    c_lo = np.empty(cap)
    c_hi = np.empty(cap)
    nc = 0
    max_bins = 0
    for f in feats:
        max_bins = max(max_bins, n_bins[f])
    cnt = np.zeros(max_bins, dtype=np.int64)
    sa = np.zeros(max_bins)
    sb = np.zeros(max_bins)
    col = np.empty(m, dtype=np.int64)
    for f in feats:
        nb = n_bins[f]
        off = offsets[f]
        use_hist = nb <= 4 * m if path == 0 else path == 1
        if use_hist:
            for j in range(nb):
                cnt[j] = 0
                sa[j] = 0.0
                sb[j] = 0.0
            for i in range(m):
                r = rows[i]
                c = codes[f, r]
                cnt[c] += 1
                sa[c] += a[r]
                sb[c] += b[r]
            aL = 0.0
            bL = 0.0
            nL = 0
            prev = -1
            for j in range(nb):
                if cnt[j] == 0:
                    continue
                if prev >= 0:
                    # boundary between present bins prev and j
                    if nL >= min_leaf and m - nL >= min_leaf and (
                            kind == ENTROPY or (bL >= min_child and bT - bL >= min_child)):
                        c_gain[nc] = gain_value(kind, lam, gamma, aL, bL, aT - aL, bT - bL, aT, bT)
                        c_feat[nc] = f
                        c_lo[nc] = values[off + prev]
                        c_hi[nc] = values[off + j]
                        nc += 1
                aL += sa[j]
                bL += sb[j]
                nL += cnt[j]
                prev = j
        else:
            for i in range(m):
                col[i] = codes[f, rows[i]]
            order = np.argsort(col, kind="mergesort")
            aL = 0.0
            bL = 0.0
            for i in range(m - 1):
                r = rows[order[i]]
                aL += a[r]
                bL += b[r]
                c0 = col[order[i]]
                c1 = col[order[i + 1]]
                if c0 == c1:
                    continue
                nL = i + 1
                if nL >= min_leaf and m - nL >= min_leaf and (
                        kind == ENTROPY or (bL >= min_child and bT - bL >= min_child)):
                    c_gain[nc] = gain_value(kind, lam, gamma, aL, bL, aT - aL, bT - bL, aT, bT)
                    c_feat[nc] = f
                    c_lo[nc] = values[off + c0]
                    c_hi[nc] = values[off + c1]
                    nc += 1
    if nc == 0:
        return False, 0.0, -1, 0.0
    top = c_gain[0]
    for i in range(1, nc):
        if c_gain[i] > top:
            top = c_gain[i]
    best = 0
    while c_gain[best] < top - GAIN_TIE:
        best += 1
    lo = c_lo[best]
    hi = c_hi[best]
    thr = (lo + hi) / 2.0
    if not (lo <= thr < hi):
        thr = lo
    return True, c_gain[best], c_feat[best], thr


@njit(cache=True)
def _next(state):
    """splitmix64: returns (new state, output)."""
    state = (state + np.uint64(0x9E3779B97F4A7C15)) & _MASK
    z = state
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK
    return state, z ^ (z >> np.uint64(31))


@njit(cache=True)
def grow_tree(X, codes, values, offsets, n_bins, rows, a, b, kind, lam, gamma, max_depth, min_leaf,
              min_child, min_gain, pool, k_pick, seed):
    """Depth-first growth over ``rows``; nodes numbered in preorder (left subtree first).

    ``max_depth < 0`` means unlimited. When ``k_pick < len(pool)`` each node
    searches a fresh random subset of ``k_pick`` features from ``pool``.
    """
    n = rows.shape[0]
    cap = max(1, 2 * n - 1)
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    gain = np.zeros(cap)
    n_node = np.zeros(cap, dtype=np.int64)
    idx = rows.copy()
    tmp = np.empty(n, dtype=np.int64)
    s_start = np.empty(cap, dtype=np.int64)
    s_end = np.empty(cap, dtype=np.int64)
    s_depth = np.empty(cap, dtype=np.int64)
    s_parent = np.empty(cap, dtype=np.int64)
    s_left = np.empty(cap, dtype=np.bool_)
    s_start[0], s_end[0], s_depth[0], s_parent[0], s_left[0] = 0, n, 0, -1, False
    sp = 1
    count = 0
    d_pool = pool.shape[0]
    shuffled = pool.copy()
    state = np.uint64(seed)
    subset = k_pick < d_pool
    while sp > 0:
        sp -= 1
        s, e, depth, parent, is_left = s_start[sp], s_end[sp], s_depth[sp], s_parent[sp], s_left[sp]
        nid = count
        count += 1
        if parent >= 0:
            if is_left:
                left[parent] = nid
            else:
                right[parent] = nid
        aT = 0.0
        bT = 0.0
        for i in range(s, e):
            aT += a[idx[i]]
            bT += b[idx[i]]
        value[nid] = leaf_value(kind, lam, aT, bT)
        n_node[nid] = e - s
        if max_depth >= 0 and depth >= max_depth:
            continue
        if subset:
            for i in range(d_pool):
                shuffled[i] = pool[i]
            for i in range(k_pick):
                state, z = _next(state)
                j = i + np.int64(z % np.uint64(d_pool - i))
                shuffled[i], shuffled[j] = shuffled[j], shuffled[i]
            feats = np.sort(shuffled[:k_pick])
        else:
            feats = pool
        found, g, f, thr = node_split(codes, values, offsets, n_bins, idx[s:e], feats, a, b, kind,
                                      lam, gamma, min_leaf, min_child, 0)
        if not found or not g > min_gain:
            continue
        # stable partition: x <= thr to the front
        nl = 0
        for i in range(s, e):
            if X[idx[i], f] <= thr:
                idx[s + nl] = idx[i]
                nl += 1
            else:
                tmp[i - s - nl] = idx[i]
        for i in range(e - s - nl):
            idx[s + nl + i] = tmp[i]
        feature[nid], threshold[nid], gain[nid] = f, thr, g
        mid = s + nl
        s_start[sp], s_end[sp], s_depth[sp], s_parent[sp], s_left[sp] = mid, e, depth + 1, nid, False
        sp += 1
        s_start[sp], s_end[sp], s_depth[sp], s_parent[sp], s_left[sp] = s, mid, depth + 1, nid, True
        sp += 1
    return (feature[:count], threshold[:count], left[:count], right[:count], value[:count],
            gain[:count], n_node[:count])
