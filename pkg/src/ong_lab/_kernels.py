"""Compiled hot loops: incremental grid nearest-predecessor search, ONG
builds, power-weighted totals, rooted weights, and resampling deltas.

Everything here is deterministic float64 arithmetic with a fixed evaluation
order; `fastmath` stays off so results are bit-identical across runs and
thread counts. The pure-Python GridIndex mirrors these routines operation
for operation and the two are held together by oracle-equivalence tests.
"""

from __future__ import annotations

import numba as nb
import numpy as np

NOT_FOUND = -1


@nb.njit(cache=True, nogil=True)
def _cell_of(coord, m):
    c = int(coord * m)
    if c >= m:
        c = m - 1
    if c < 0:
        c = 0
    return c


@nb.njit(cache=True, nogil=True)
def _flat_cell(pts, i, m):
    d = pts.shape[1]
    f = 0
    for j in range(d):
        f = f * m + _cell_of(pts[i, j], m)
    return f


@nb.njit(cache=True, nogil=True)
def _lex_less(pts, a, b):
    for j in range(pts.shape[1]):
        if pts[a, j] < pts[b, j]:
            return True
        if pts[a, j] > pts[b, j]:
            return False
    return False


@nb.njit(cache=True, nogil=True)
def _better(pts, cand, cand_d2, best, best_d2):
    # comparator priority: squared distance, lexicographic point, arrival index
    if best < 0:
        return True
    if cand_d2 != best_d2:
        return cand_d2 < best_d2
    if _lex_less(pts, cand, best):
        return True
    if _lex_less(pts, best, cand):
        return False
    return cand < best


@nb.njit(cache=True, nogil=True)
def _nearest(pts, q, m, head, nxt, exclude):
    """Nearest stored point to coords q under the full comparator.

    Expanding rings of cells around q's cell; a ring at Chebyshev distance k
    is at least (k-1) * cell_side away, so the search stops only when that
    strict lower bound already exceeds the best squared distance (exact ties
    are still explored).
    """
    d = pts.shape[1]
    side = 1.0 / m
    qc = np.empty(d, np.int64)
    for j in range(d):
        qc[j] = _cell_of(q[j], m)
    best = -1
    best_d2 = np.inf
    off = np.empty(d, np.int64)
    k = 0
    while k <= m:
        if k > 0 and best >= 0:
            lo = (k - 1) * side
            if lo * lo > best_d2:
                break
        for j in range(d):
            off[j] = -k
        while True:
            cheb = 0
            inside = True
            for j in range(d):
                a = off[j] if off[j] >= 0 else -off[j]
                if a > cheb:
                    cheb = a
                c = qc[j] + off[j]
                if c < 0 or c >= m:
                    inside = False
            if cheb == k and inside:
                f = 0
                for j in range(d):
                    f = f * m + (qc[j] + off[j])
                p = head[f]
                while p >= 0:
                    if p != exclude:
                        d2 = 0.0
                        for j in range(d):
                            t = q[j] - pts[p, j]
                            d2 += t * t
                        if _better(pts, p, d2, best, best_d2):
                            best = p
                            best_d2 = d2
                    p = nxt[p]
            j = d - 1
            while j >= 0:
                off[j] += 1
                if off[j] <= k:
                    break
                off[j] = -k
                j -= 1
            if j < 0:
                break
        k += 1
    return best, best_d2


@nb.njit(cache=True, nogil=True)
def _brute_nearest(pts, hi, q, exclude):
    """Reference linear scan over rows 0..hi-1 with the identical comparator."""
    best = -1
    best_d2 = np.inf
    d = pts.shape[1]
    for p in range(hi):
        if p == exclude:
            continue
        d2 = 0.0
        for j in range(d):
            t = q[j] - pts[p, j]
            d2 += t * t
        if _better(pts, p, d2, best, best_d2):
            best = p
            best_d2 = d2
    return best, best_d2


@nb.njit(cache=True, nogil=True)
def _rebuild(pts, count, m2, nxt):
    head = np.full(m2 ** pts.shape[1], -1, np.int64)
    for p in range(count):
        f = _flat_cell(pts, p, m2)
        nxt[p] = head[f]
        head[f] = p
    return head


@nb.njit(cache=True, nogil=True)
def build_ong(pts):
    """Edges of the on-line nearest-neighbour graph on the rows of pts.

    Returns (targets, sqd): targets[i] is the 0-based row of point i's
    nearest predecessor (-1 for i = 0), sqd[i] the squared edge length.
    """
    n = pts.shape[0]
    targets = np.full(n, -1, np.int64)
    sqd = np.zeros(n, np.float64)
    m = 1
    head = np.full(1, -1, np.int64)
    nxt = np.full(max(n, 1), -1, np.int64)
    for i in range(n):
        if i > 0:
            best, best_d2 = _nearest(pts, pts[i], m, head, nxt, -1)
            targets[i] = best
            sqd[i] = best_d2
        if i + 1 > 2 * m ** pts.shape[1]:
            m = m * 2
            head = _rebuild(pts, i, m, nxt)
        f = _flat_cell(pts, i, m)
        nxt[i] = head[f]
        head[f] = i
    return targets, sqd


@nb.njit(cache=True, nogil=True)
def build_ong_checked(pts):
    """build_ong with the brute-force oracle shadowing every query.

    Returns (targets, sqd, mismatches); the grid answer is kept, a mismatch
    in either index or squared distance is counted.
    """
    n = pts.shape[0]
    targets = np.full(n, -1, np.int64)
    sqd = np.zeros(n, np.float64)
    mismatches = 0
    m = 1
    head = np.full(1, -1, np.int64)
    nxt = np.full(max(n, 1), -1, np.int64)
    for i in range(n):
        if i > 0:
            best, best_d2 = _nearest(pts, pts[i], m, head, nxt, -1)
            ref, ref_d2 = _brute_nearest(pts, i, pts[i], -1)
            if best != ref or best_d2 != ref_d2:
                mismatches += 1
            targets[i] = best
            sqd[i] = best_d2
        if i + 1 > 2 * m ** pts.shape[1]:
            m = m * 2
            head = _rebuild(pts, i, m, nxt)
        f = _flat_cell(pts, i, m)
        nxt[i] = head[f]
        head[f] = i
    return targets, sqd, mismatches


@nb.njit(cache=True, nogil=True)
def prefix_totals(sqd, alpha, checkpoints):
    """Power-weighted totals of the first c arrivals for each count c.

    checkpoints must be ascending arrival counts; compensated (Kahan)
    summation keeps the large-n totals usable for variance work.
    """
    out = np.empty(len(checkpoints), np.float64)
    tot = 0.0
    comp = 0.0
    pos = 0
    upto = 0
    for ci in range(len(checkpoints)):
        c = checkpoints[ci]
        while upto < c:
            if upto >= 1:
                y = sqd[upto] ** (alpha * 0.5) - comp
                t = tot + y
                comp = (t - tot) - y
                tot = t
            upto += 1
        out[pos] = tot
        pos += 1
    return out


@nb.njit(cache=True, nogil=True)
def total_weight_from_sqd(sqd, alpha):
    tot = 0.0
    comp = 0.0
    for i in range(1, len(sqd)):
        y = sqd[i] ** (alpha * 0.5) - comp
        t = tot + y
        comp = (t - tot) - y
        tot = t
    return tot


@nb.njit(cache=True, nogil=True)
def rooted_weights_kernel(x, pts, alpha):
    """Running incident and alternative rooted weights for root x.

    Builds the ONG on (x, X_1, .., X_n) with x at virtual arrival 0.
    incident[m-1] accumulates |X_i - x|^alpha over i <= m attaching to x;
    alternative[m-1] accumulates, for those same i with i >= 2, the alpha
    power of the distance from X_i to its nearest point of X_1..X_{i-1}
    (x excluded from that search via the exclusion mask).
    """
    n = pts.shape[0]
    d = pts.shape[1]
    ap = np.empty((n + 1, d), np.float64)
    for j in range(d):
        ap[0, j] = x[j]
    for i in range(n):
        for j in range(d):
            ap[i + 1, j] = pts[i, j]
    incident = np.zeros(n, np.float64)
    alternative = np.zeros(n, np.float64)
    m = 1
    head = np.full(1, -1, np.int64)
    nxt = np.full(n + 1, -1, np.int64)
    inc = 0.0
    inc_c = 0.0
    alt = 0.0
    alt_c = 0.0
    for i in range(n + 1):
        if i > 0:
            best, best_d2 = _nearest(ap, ap[i], m, head, nxt, -1)
            if best == 0:
                y = best_d2 ** (alpha * 0.5) - inc_c
                t = inc + y
                inc_c = (t - inc) - y
                inc = t
                if i >= 2:
                    _, alt_d2 = _nearest(ap, ap[i], m, head, nxt, 0)
                    y = alt_d2 ** (alpha * 0.5) - alt_c
                    t = alt + y
                    alt_c = (t - alt) - y
                    alt = t
            incident[i - 1] = inc
            alternative[i - 1] = alt
        if i + 1 > 2 * m ** d:
            m = m * 2
            head = _rebuild(ap, i, m, nxt)
        f = _flat_cell(ap, i, m)
        nxt[i] = head[f]
        head[f] = i
    return incident, alternative


@nb.njit(cache=True, nogil=True)
def resample_deltas(prefix, xprimes, suffixes, alpha):
    """Total-weight change when the last prefix point is re-sampled.

    For each inner replicate k the sequence is (prefix, suffixes[k]); the
    delta is O(sequence with prefix[-1] := xprimes[k]) - O(sequence).
    """
    i = prefix.shape[0]
    d = prefix.shape[1]
    kk = xprimes.shape[0]
    nsuf = suffixes.shape[1]
    n = i + nsuf
    out = np.empty(kk, np.float64)
    pts = np.empty((n, d), np.float64)
    for k in range(kk):
        for r in range(i):
            for j in range(d):
                pts[r, j] = prefix[r, j]
        for r in range(nsuf):
            for j in range(d):
                pts[i + r, j] = suffixes[k, r, j]
        _, sqd1 = build_ong(pts)
        t1 = total_weight_from_sqd(sqd1, alpha)
        for j in range(d):
            pts[i - 1, j] = xprimes[k, j]
        _, sqd2 = build_ong(pts)
        t2 = total_weight_from_sqd(sqd2, alpha)
        out[k] = t2 - t1
    return out


@nb.njit(cache=True, nogil=True)
def static_grid(pts):
    """One-shot grid over a fixed point set, matching the incremental sizing."""
    n = pts.shape[0]
    d = pts.shape[1]
    m = 1
    while n > 2 * m ** d:
        m *= 2
    head = np.full(m ** d, -1, np.int64)
    nxt = np.full(max(n, 1), -1, np.int64)
    for p in range(n):
        f = _flat_cell(pts, p, m)
        nxt[p] = head[f]
        head[f] = p
    return m, head, nxt


@nb.njit(cache=True, nogil=True)
def batch_nearest_sqd(pts, m, head, nxt, queries):
    """Minimum squared distance from each query row to the gridded set."""
    k = queries.shape[0]
    out = np.empty(k, np.float64)
    for q in range(k):
        _, d2 = _nearest(pts, queries[q], m, head, nxt, -1)
        out[q] = d2
    return out


@nb.njit(cache=True, nogil=True)
def max_pairwise_sqd(coords):
    n = coords.shape[0]
    d = coords.shape[1]
    best = 0.0
    for a in range(n):
        for b in range(a + 1, n):
            d2 = 0.0
            for j in range(d):
                t = coords[a, j] - coords[b, j]
                d2 += t * t
            if d2 > best:
                best = d2
    return best


@nb.njit(cache=True, nogil=True)
def welford_fold(values):
    """Sequential one-pass moment fold, bit-identical to stats.update."""
    count = 0
    mean = 0.0
    m2 = 0.0
    m3 = 0.0
    m4 = 0.0
    for idx in range(len(values)):
        x = values[idx]
        n1 = float(count)
        count += 1
        n = float(count)
        delta = x - mean
        delta_n = delta / n
        delta_n2 = delta_n * delta_n
        term1 = delta * delta_n * n1
        mean = mean + delta_n
        m4 = m4 + term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * m2 - 4.0 * delta_n * m3
        m3 = m3 + term1 * delta_n * (n - 2.0) - 3.0 * delta_n * m2
        m2 = m2 + term1
    return count, mean, m2, m3, m4
