"""Compiled inner loops.

Graphs enter as CSR neighbor arrays ``(ptr, idx, w)``.  Window boundaries are
always computed as ``k*L``, ``k*L + L/3``, ``k*L + 2*L/3``, ``(k+1)*L`` so the
compiled and pure-Python paths classify boundary events identically.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _plus_prob(s):
    if s >= 0.0:
        return 1.0 / (1.0 + math.exp(-2.0 * s))
    e = math.exp(2.0 * s)
    return e / (1.0 + e)


@njit(cache=True, inline="always")
def _field(ptr, idx, w, state, i):
    s = 0.0
    for a in range(ptr[i], ptr[i + 1]):
        s += w[a] * state[idx[a]]
    return s


@njit(cache=True)
def apply_updates(ptr, idx, w, init, nodes, coins):
    """New spin of each update: +1 iff coin < P(+1 | pre-update state)."""
    state = init.copy()
    out = np.empty(nodes.size, dtype=np.int8)
    for e in range(nodes.size):
        i = nodes[e]
        v = 1 if coins[e] < _plus_prob(_field(ptr, idx, w, state, i)) else -1
        state[i] = v
        out[e] = v
    return out


@njit(cache=True)
def evolve_many(ptr, idx, w, states, horizon, seed):
    """Run continuous-time dynamics for ``horizon`` on every row of ``states`` in place."""
    np.random.seed(seed)
    runs, p = states.shape
    for r in range(runs):
        t = np.random.exponential(1.0 / p)
        while t <= horizon:
            i = np.random.randint(p)
            v = 1 if np.random.random() < _plus_prob(_field(ptr, idx, w, states[r], i)) else -1
            states[r, i] = v
            t += np.random.exponential(1.0 / p)


@njit(cache=True)
def window_monte_carlo(ptr, idx, w, x, L, reps, seed, pairs):
    """Simulate ``reps`` independent windows of length L started from ``x``.

    For each pair row ``(i, j)`` accumulates: sum X, sum X^2, #A, #C, #D, #(A and D).
    """
    np.random.seed(seed)
    p = x.size
    m = pairs.shape[0]
    acc = np.zeros((m, 6))
    state = np.empty(p, dtype=np.int8)
    s_b1 = np.empty(p, dtype=np.int8)
    s_b2 = np.empty(p, dtype=np.int8)
    counts = np.zeros((p, 3), dtype=np.int64)
    b1 = L / 3.0
    b2 = 2.0 * L / 3.0
    for _ in range(reps):
        state[:] = x
        counts[:, :] = 0
        took_b1 = False
        took_b2 = False
        t = np.random.exponential(1.0 / p)
        while t < L:
            if not took_b1 and t > b1:
                s_b1[:] = state
                took_b1 = True
            if not took_b2 and t > b2:
                s_b2[:] = state
                took_b2 = True
            i = np.random.randint(p)
            third = 0 if t < b1 else (1 if t < b2 else 2)
            counts[i, third] += 1
            state[i] = 1 if np.random.random() < _plus_prob(_field(ptr, idx, w, state, i)) else -1
            t += np.random.exponential(1.0 / p)
        if not took_b1:
            s_b1[:] = state
        if not took_b2:
            s_b2[:] = state
        for r in range(m):
            i = pairs[r, 0]
            j = pairs[r, 1]
            a = (
                counts[i, 0] > 0 and counts[j, 0] == 0
                and counts[j, 1] > 0 and counts[i, 1] == 0
                and counts[i, 2] > 0 and counts[j, 2] == 0
            )
            dd = True
            for q in range(ptr[i], ptr[i + 1]):
                k = idx[q]
                if k != j and counts[k, 0] + counts[k, 1] + counts[k, 2] > 0:
                    dd = False
                    break
            if a:
                acc[r, 2] += 1
                if dd:
                    acc[r, 5] += 1
                if s_b1[j] != s_b2[j]:
                    acc[r, 3] += 1
                    xv = s_b1[j] * (s_b1[i] - state[i])
                    acc[r, 0] += xv
                    acc[r, 1] += xv * xv
            if dd:
                acc[r, 4] += 1
    return acc


@njit(cache=True)
def node_roles(times, nodes, spins, init, order, node_ptr, L, kmax):
    """Per-node window summaries used by the pair loop.

    ``order``/``node_ptr`` list each node's event positions in time order.
    Returns the "responder" windows (updated in the first and last thirds only)
    with the node's spin at L/3 and just before the window end, and the
    "driver" windows (updated in the middle third only, spin at L/3 differs
    from spin at 2L/3) with the node's spin at L/3.
    """
    p = init.size
    r_cnt = np.zeros(p + 1, dtype=np.int64)
    d_cnt = np.zeros(p + 1, dtype=np.int64)
    total = order.size
    r_win = np.empty(total, dtype=np.int64)
    r_s1 = np.empty(total, dtype=np.int8)
    r_end = np.empty(total, dtype=np.int8)
    d_win = np.empty(total, dtype=np.int64)
    d_s1 = np.empty(total, dtype=np.int8)
    nr = 0
    nd = 0
    for i in range(p):
        r_cnt[i] = nr
        d_cnt[i] = nd
        spin = init[i]
        a = node_ptr[i]
        end = node_ptr[i + 1]
        while a < end:
            e = order[a]
            t = times[e]
            k = int(math.floor(t / L))
            if k * L > t:
                k -= 1
            elif (k + 1) * L <= t:
                k += 1
            if k >= kmax:
                break
            start = k * L
            c1 = start + L / 3.0
            c2 = start + 2.0 * L / 3.0
            stop = (k + 1) * L
            mask = 0
            at_b1 = spin
            at_b2 = spin
            while a < end:
                e = order[a]
                t = times[e]
                if t >= stop:
                    break
                if t < c1:
                    mask |= 1
                elif t < c2:
                    mask |= 2
                else:
                    mask |= 4
                spin = spins[e]
                if t <= c1:
                    at_b1 = spin
                if t <= c2:
                    at_b2 = spin
                a += 1
            if mask == 5:
                r_win[nr] = k
                r_s1[nr] = at_b1
                r_end[nr] = spin
                nr += 1
            elif mask == 2 and at_b1 != at_b2:
                d_win[nd] = k
                d_s1[nd] = at_b1
                nd += 1
    r_cnt[p] = nr
    d_cnt[p] = nd
    return r_cnt, r_win[:nr], r_s1[:nr], r_end[:nr], d_cnt, d_win[:nd], d_s1[:nd]


@njit(cache=True, inline="always")
def _pair_sum(i, j, r_ptr, r_win, r_s1, r_end, d_ptr, d_win, d_s1):
    a = r_ptr[i]
    ae = r_ptr[i + 1]
    b = d_ptr[j]
    be = d_ptr[j + 1]
    s = 0
    nc = 0
    while a < ae and b < be:
        wa = r_win[a]
        wb = d_win[b]
        if wa < wb:
            a += 1
        elif wb < wa:
            b += 1
        else:
            nc += 1
            s += d_s1[b] * (r_s1[a] - r_end[a])
            a += 1
            b += 1
    return s, nc


@njit(cache=True)
def pair_sum(i, j, r_ptr, r_win, r_s1, r_end, d_ptr, d_win, d_s1):
    return _pair_sum(i, j, r_ptr, r_win, r_s1, r_end, d_ptr, d_win, d_s1)


@njit(cache=True)
def pair_windows(i, j, r_ptr, r_win, r_s1, r_end, d_ptr, d_win, d_s1):
    """Windows where C holds for (i, j), with the statistic in each."""
    a = r_ptr[i]
    ae = r_ptr[i + 1]
    b = d_ptr[j]
    be = d_ptr[j + 1]
    n = min(ae - a, be - b)
    ks = np.empty(n, dtype=np.int64)
    vals = np.empty(n, dtype=np.int64)
    c = 0
    while a < ae and b < be:
        wa = r_win[a]
        wb = d_win[b]
        if wa < wb:
            a += 1
        elif wb < wa:
            b += 1
        else:
            ks[c] = wa
            vals[c] = d_s1[b] * (r_s1[a] - r_end[a])
            c += 1
            a += 1
            b += 1
    return ks[:c], vals[:c]


@njit(cache=True)
def select_pairs(p, symmetrize, tau, kmax, r_ptr, r_win, r_s1, r_end, d_ptr, d_win, d_s1):
    """All i < j with |window sum| / kmax >= tau.

    With ``symmetrize`` the sum used is the larger in magnitude of
    (i responds to j) and (j responds to i).
    """
    cap = 64
    out_i = np.empty(cap, dtype=np.int64)
    out_j = np.empty(cap, dtype=np.int64)
    out_s = np.empty(cap, dtype=np.int64)
    c = 0
    for i in range(p):
        for j in range(i + 1, p):
            s, _ = _pair_sum(i, j, r_ptr, r_win, r_s1, r_end, d_ptr, d_win, d_s1)
            if symmetrize:
                s2, _ = _pair_sum(j, i, r_ptr, r_win, r_s1, r_end, d_ptr, d_win, d_s1)
                if abs(s2) > abs(s):
                    s = s2
            if abs(s) / kmax >= tau:
                if c == cap:
                    cap *= 2
                    out_i = np.concatenate((out_i, np.empty(cap - c, dtype=np.int64)))
                    out_j = np.concatenate((out_j, np.empty(cap - c, dtype=np.int64)))
                    out_s = np.concatenate((out_s, np.empty(cap - c, dtype=np.int64)))
                out_i[c] = i
                out_j[c] = j
                out_s[c] = s
                c += 1
    return out_i[:c], out_j[:c], out_s[:c]
