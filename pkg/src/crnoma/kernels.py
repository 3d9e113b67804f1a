"""Hot inner loops: bipartite matching, assignment and random-key decoding.

Each kernel is written once in numba-compatible Python.  With numba enabled
they are compiled; with ``CRNOMA_DISABLE_NUMBA=1`` the augmenting-path
matching runs as plain Python, while the assignment and population decoder
switch to vectorized numpy with scipy's ``linear_sum_assignment``.
"""
import numpy as np
from scipy.optimize import linear_sum_assignment

from ._accel import NUMBA_ENABLED, njit

RULE_BPA = 0
RULE_FIXED = 1


def _max_matching_py(adj):
    """Maximum-cardinality bipartite matching by BFS augmenting paths.

    Rows are processed in index order and columns are scanned in index order,
    so the result is deterministic.  Returns the column of each row or -1.
    """
    n_rows, n_cols = adj.shape
    match_row = np.full(n_rows, -1, np.int64)
    match_col = np.full(n_cols, -1, np.int64)
    prev_row = np.zeros(n_cols, np.int64)
    queue = np.zeros(n_rows, np.int64)
    for root in range(n_rows):
        visited = np.zeros(n_cols, np.bool_)
        head = 0
        tail = 1
        queue[0] = root
        found = -1
        while head < tail and found < 0:
            r = queue[head]
            head += 1
            for c in range(n_cols):
                if adj[r, c] and not visited[c]:
                    visited[c] = True
                    prev_row[c] = r
                    if match_col[c] < 0:
                        found = c
                        break
                    queue[tail] = match_col[c]
                    tail += 1
        c = found
        while c >= 0:
            r = prev_row[c]
            nxt = match_row[r]
            match_row[r] = c
            match_col[c] = r
            c = nxt
    return match_row


def _assign_max_py(w):
    """Max-weight assignment of every row to a distinct column (rows <= cols).

    Shortest augmenting path with potentials, O(rows^2 * cols).
    """
    n, m = w.shape
    inf = np.inf
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, np.int64)
    way = np.zeros(m + 1, np.int64)
    minv = np.empty(m + 1)
    used = np.empty(m + 1, np.bool_)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv[:] = inf
        used[:] = False
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = inf
            j1 = 0
            for j in range(1, m + 1):
                if not used[j]:
                    cur = -w[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    assign = np.full(n, -1, np.int64)
    for j in range(1, m + 1):
        if p[j] != 0:
            assign[p[j] - 1] = j - 1
    return assign


def _pair_channel_py(xa, xb, rule, beta2, ds_fix, dw_fix, weak_int):
    """EE numerator and QoS flag of two users sharing one channel.

    Returns ``(a_is_strong, rate_strong, rate_weak, delta_strong, qos_ok)``.
    """
    a_strong = xa >= xb
    if a_strong:
        xs = xa
        xw = xb
    else:
        xs = xb
        xw = xa
    if rule == RULE_BPA:
        ds = (1.0 - beta2) / (1.0 + np.sqrt(1.0 + xs)) + beta2 / (1.0 + np.sqrt(1.0 + xw))
        dw = 1.0 - ds
    else:
        ds = ds_fix
        dw = dw_fix
    xi = xw if weak_int else xs
    rw = np.log2(1.0 + dw * xw)
    rs = np.log2(1.0 + ds * xs / (dw * xi + 1.0))
    ok = rs >= 0.5 * np.log2(1.0 + xs) - 1e-12 and rw >= 0.5 * np.log2(1.0 + xw) - 1e-12
    return a_strong, rs, rw, ds, ok


def _decode_order_py(order, x, avail, rule, beta2, ds_fix, dw_fix, weak_int, optimize_channels):
    """Pair consecutive users of ``order`` and assign channels.

    With ``optimize_channels`` the assignment maximizes, lexicographically,
    the number of served pairs, then the number of QoS-feasible pairs, then
    the summed rate.  Otherwise it is the augmenting-path matching, blind to
    rates.  Returns per tentative pair: strong user, weak user, channel (-1
    when unserved), summed rate, strong power share, QoS flag.
    """
    n_pairs = order.shape[0] // 2
    m = x.shape[1]
    strong = np.empty(n_pairs, np.int64)
    weak = np.empty(n_pairs, np.int64)
    rate = np.zeros((n_pairs, m))
    dstrong = np.zeros((n_pairs, m))
    okm = np.zeros((n_pairs, m), np.bool_)
    sw = np.zeros((n_pairs, m), np.bool_)
    adj = np.zeros((n_pairs, m), np.bool_)
    emax = 0.0
    for k in range(n_pairs):
        a = order[2 * k]
        b = order[2 * k + 1]
        for c in range(m):
            if avail[a, c] and avail[b, c]:
                adj[k, c] = True
                a_strong, rs, rw, ds, ok = _pair_channel_py(x[a, c], x[b, c], rule, beta2, ds_fix, dw_fix, weak_int)
                if x[a, c] == x[b, c]:
                    a_strong = a < b
                sw[k, c] = a_strong
                rate[k, c] = rs + rw
                dstrong[k, c] = ds
                okm[k, c] = ok
                if rs + rw > emax:
                    emax = rs + rw
    if optimize_channels:
        big_qos = n_pairs * emax + 1.0
        big_card = n_pairs * (big_qos + emax) + 1.0
        w = np.zeros((n_pairs, m))
        for k in range(n_pairs):
            for c in range(m):
                if adj[k, c]:
                    w[k, c] = big_card + rate[k, c]
                    if okm[k, c]:
                        w[k, c] += big_qos
        chan = _assign_max(w)
    else:
        chan = _max_matching(adj)
    out_rate = np.zeros(n_pairs)
    out_ds = np.zeros(n_pairs)
    out_ok = np.zeros(n_pairs, np.bool_)
    for k in range(n_pairs):
        a = order[2 * k]
        b = order[2 * k + 1]
        c = chan[k]
        if c >= 0 and not adj[k, c]:
            c = -1
            chan[k] = -1
        if c >= 0:
            if sw[k, c]:
                strong[k] = a
                weak[k] = b
            else:
                strong[k] = b
                weak[k] = a
            out_rate[k] = rate[k, c]
            out_ds[k] = dstrong[k, c]
            out_ok[k] = okm[k, c]
        else:
            strong[k] = a
            weak[k] = b
    return strong, weak, chan, out_rate, out_ds, out_ok


def _population_fitness_py(keys, x, avail, rule, beta2, ds_fix, dw_fix, weak_int, cluster_power, penalty):
    pop = keys.shape[0]
    fit = np.empty(pop)
    for i in range(pop):
        order = np.argsort(keys[i], kind="mergesort")
        strong, weak, chan, rate, ds, ok = _decode_order(order, x, avail, rule, beta2, ds_fix, dw_fix,
                                                          weak_int, True)
        total = 0.0
        bad = 0
        for k in range(chan.shape[0]):
            if chan[k] < 0:
                bad += 2
            else:
                total += rate[k] / cluster_power
                if not ok[k]:
                    bad += 1
        fit[i] = total - penalty * bad
    return fit


# --- numpy / scipy fallbacks ----------------------------------------------

def _assign_max_np(w):
    rows, cols = linear_sum_assignment(w, maximize=True)
    out = np.full(w.shape[0], -1, np.int64)
    out[rows] = cols
    return out


def _pair_matrix_np(order, x, avail, rule, beta2, ds_fix, dw_fix, weak_int):
    a = order[0::2]
    b = order[1::2]
    xa = x[a]
    xb = x[b]
    a_strong = (xa > xb) | ((xa == xb) & (a < b)[:, None])
    xs = np.where(a_strong, xa, xb)
    xw = np.where(a_strong, xb, xa)
    if rule == RULE_BPA:
        ds = (1.0 - beta2) / (1.0 + np.sqrt(1.0 + xs)) + beta2 / (1.0 + np.sqrt(1.0 + xw))
        dw = 1.0 - ds
    else:
        ds = np.full_like(xs, ds_fix)
        dw = np.full_like(xs, dw_fix)
    xi = xw if weak_int else xs
    rw = np.log2(1.0 + dw * xw)
    rs = np.log2(1.0 + ds * xs / (dw * xi + 1.0))
    ok = (rs >= 0.5 * np.log2(1.0 + xs) - 1e-12) & (rw >= 0.5 * np.log2(1.0 + xw) - 1e-12)
    adj = avail[a] & avail[b]
    return a, b, a_strong, rs + rw, ds, ok, adj


def _decode_order_np(order, x, avail, rule, beta2, ds_fix, dw_fix, weak_int, optimize_channels):
    a, b, a_strong, rate, ds, ok, adj = _pair_matrix_np(order, x, avail, rule, beta2, ds_fix, dw_fix, weak_int)
    n_pairs = a.shape[0]
    if optimize_channels:
        emax = rate[adj].max() if adj.any() else 0.0
        big_qos = n_pairs * emax + 1.0
        big_card = n_pairs * (big_qos + emax) + 1.0
        w = np.where(adj, big_card + rate + np.where(ok, big_qos, 0.0), 0.0)
        chan = _assign_max_np(w)
    else:
        chan = _max_matching(adj)
    k = np.arange(n_pairs)
    safe = np.maximum(chan, 0)
    served = (chan >= 0) & adj[k, safe]
    chan = np.where(served, chan, -1)
    sw = a_strong[k, safe] & served
    sw |= ~served
    strong = np.where(sw, a, b)
    weak = np.where(sw, b, a)
    return (strong.astype(np.int64), weak.astype(np.int64), chan.astype(np.int64),
            np.where(served, rate[k, safe], 0.0), np.where(served, ds[k, safe], 0.0),
            np.where(served, ok[k, safe], False))


def _population_fitness_np(keys, x, avail, rule, beta2, ds_fix, dw_fix, weak_int, cluster_power, penalty):
    fit = np.empty(keys.shape[0])
    for i in range(keys.shape[0]):
        order = np.argsort(keys[i], kind="stable")
        _, _, chan, rate, _, ok = _decode_order_np(order, x, avail, rule, beta2, ds_fix, dw_fix, weak_int, True)
        served = chan >= 0
        bad = 2 * np.count_nonzero(~served) + np.count_nonzero(served & ~ok)
        fit[i] = rate[served].sum() / cluster_power - penalty * bad
    return fit


if NUMBA_ENABLED:
    _max_matching = njit(_max_matching_py)
    _assign_max = njit(_assign_max_py)
    _pair_channel_py = njit(_pair_channel_py)
    _decode_order = njit(_decode_order_py)
    _population_fitness = njit(_population_fitness_py)
else:
    _max_matching = _max_matching_py
    _assign_max = _assign_max_np
    _decode_order = _decode_order_np
    _population_fitness = _population_fitness_np


def max_matching(adj):
    """Maximum-cardinality matching of rows to columns; -1 marks unmatched rows."""
    return _max_matching(np.ascontiguousarray(adj, dtype=np.bool_))


def assign_max(w):
    """Max-weight assignment of each row to a distinct column (rows <= cols)."""
    w = np.ascontiguousarray(w, dtype=np.float64)
    if w.shape[0] > w.shape[1]:
        raise ValueError("assignment needs rows <= columns")
    return _assign_max(w)


def decode_order(order, x, avail, rule=RULE_BPA, beta2=1.0, ds_fix=0.25, dw_fix=0.75,
                 weak_interference=True, optimize_channels=True):
    return _decode_order(np.ascontiguousarray(order, dtype=np.int64), np.ascontiguousarray(x, dtype=np.float64),
                         np.ascontiguousarray(avail, dtype=np.bool_), rule, float(beta2), float(ds_fix),
                         float(dw_fix), bool(weak_interference), bool(optimize_channels))


def population_fitness(keys, x, avail, rule=RULE_BPA, beta2=1.0, ds_fix=0.25, dw_fix=0.75,
                       weak_interference=True, cluster_power=1.0, penalty=1e6):
    return _population_fitness(np.ascontiguousarray(keys, dtype=np.float64),
                               np.ascontiguousarray(x, dtype=np.float64),
                               np.ascontiguousarray(avail, dtype=np.bool_), rule, float(beta2), float(ds_fix),
                               float(dw_fix), bool(weak_interference), float(cluster_power), float(penalty))
