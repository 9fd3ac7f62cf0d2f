"""Compiled inner loops for finite causal orders.

Relations are passed around in CSR form (``indptr``, ``indices``) with
column indices sorted ascending within each row.  Bitset rows are uint64
arrays of shape ``(n, ceil(n / 64))``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NEG_INF = -np.inf


@njit(cache=True)
def topological_order(n, indptr, indices):
    """Kahn's algorithm; smallest available index first.  Returns (order, ok)."""
    indeg = np.zeros(n, dtype=np.int64)
    for e in range(indptr[n]):
        indeg[indices[e]] += 1
    # a binary heap keeps the output deterministic and index-ordered
    heap = np.empty(n, dtype=np.int64)
    size = 0
    for v in range(n):
        if indeg[v] == 0:
            heap[size] = v
            size += 1
    order = np.empty(n, dtype=np.int64)
    k = 0
    while size > 0:
        # pop min
        v = heap[0]
        size -= 1
        last = heap[size]
        i = 0
        while True:
            c = 2 * i + 1
            if c >= size:
                break
            if c + 1 < size and heap[c + 1] < heap[c]:
                c += 1
            if heap[c] < last:
                heap[i] = heap[c]
                i = c
            else:
                break
        if size > 0:
            heap[i] = last
        order[k] = v
        k += 1
        for e in range(indptr[v], indptr[v + 1]):
            u = indices[e]
            indeg[u] -= 1
            if indeg[u] == 0:
                j = size
                size += 1
                while j > 0:
                    p = (j - 1) // 2
                    if heap[p] > u:
                        heap[j] = heap[p]
                        j = p
                    else:
                        break
                heap[j] = u
    return order, k == n


@njit(cache=True)
def closure_bits(n, order, indptr, indices):
    """Strict transitive closure of a DAG given by link CSR."""
    words = (n + 63) // 64
    bits = np.zeros((n, words), dtype=np.uint64)
    for k in range(n - 1, -1, -1):
        v = order[k]
        for e in range(indptr[v], indptr[v + 1]):
            u = indices[e]
            bits[v, u >> 6] |= np.uint64(1) << np.uint64(u & 63)
            for w in range(words):
                bits[v, w] |= bits[u, w]
    return bits


@njit(cache=True)
def csr_to_bits(n, indptr, indices):
    words = (n + 63) // 64
    bits = np.zeros((n, words), dtype=np.uint64)
    for v in range(n):
        for e in range(indptr[v], indptr[v + 1]):
            u = indices[e]
            bits[v, u >> 6] |= np.uint64(1) << np.uint64(u & 63)
    return bits


@njit(cache=True)
def _popcount(x):
    c = 0
    while x:
        x &= x - np.uint64(1)
        c += 1
    return c


@njit(cache=True)
def bits_to_csr(bits, n):
    words = bits.shape[1]
    indptr = np.zeros(n + 1, dtype=np.int64)
    for v in range(n):
        c = 0
        for w in range(words):
            c += _popcount(bits[v, w])
        indptr[v + 1] = indptr[v] + c
    indices = np.empty(indptr[n], dtype=np.int64)
    for v in range(n):
        k = indptr[v]
        for w in range(words):
            x = bits[v, w]
            while x:
                low = x & (~x + np.uint64(1))
                b = 0
                while (low >> np.uint64(b)) != np.uint64(1):
                    b += 1
                indices[k] = w * 64 + b
                k += 1
                x ^= low
    return indptr, indices


@njit(cache=True)
def reduce_bits(bits, n):
    """Transitive reduction: links(i) = R(i) minus the union of R(k), k in R(i)."""
    words = bits.shape[1]
    out = np.zeros_like(bits)
    covered = np.zeros(words, dtype=np.uint64)
    for v in range(n):
        covered[:] = 0
        for w in range(words):
            x = bits[v, w]
            while x:
                low = x & (~x + np.uint64(1))
                b = 0
                while (low >> np.uint64(b)) != np.uint64(1):
                    b += 1
                k = w * 64 + b
                for ww in range(words):
                    covered[ww] |= bits[k, ww]
                x ^= low
        for w in range(words):
            out[v, w] = bits[v, w] & ~covered[w]
    return out


@njit(cache=True)
def longest_from(n, order, position, indptr, indices, weights, source):
    """Longest link-path weights from ``source``; unreachable -> -inf."""
    dist = np.full(n, NEG_INF)
    dist[source] = 0.0
    for k in range(position[source], n):
        v = order[k]
        dv = dist[v]
        if dv == NEG_INF:
            continue
        for e in range(indptr[v], indptr[v + 1]):
            u = indices[e]
            cand = dv + weights[e]
            if cand > dist[u]:
                dist[u] = cand
    return dist


@njit(cache=True)
def longest_all(n, order, position, indptr, indices, weights):
    out = np.zeros((n, n))
    for s in range(n):
        d = longest_from(n, order, position, indptr, indices, weights, s)
        for v in range(n):
            if v != s and d[v] > 0.0:
                out[s, v] = d[v]
    return out


@njit(cache=True)
def longest_to(n, order, position, indptr, indices, weights, target):
    """Longest link-path weights into ``target``; cannot reach -> -inf."""
    best = np.full(n, NEG_INF)
    best[target] = 0.0
    for k in range(position[target] - 1, -1, -1):
        v = order[k]
        b = NEG_INF
        for e in range(indptr[v], indptr[v + 1]):
            u = indices[e]
            if best[u] != NEG_INF:
                cand = best[u] + weights[e]
                if cand > b:
                    b = cand
        best[v] = b
    return best


@njit(cache=True)
def maximizer_counts(n, order, position, indptr, indices, weights, best, target, rel_tol):
    """Number of link-paths into ``target`` within ``rel_tol`` of the optimum."""
    count = np.zeros(n)
    count[target] = 1.0
    for k in range(position[target] - 1, -1, -1):
        v = order[k]
        if best[v] == NEG_INF:
            continue
        slack = rel_tol * max(1.0, abs(best[v]))
        c = 0.0
        for e in range(indptr[v], indptr[v + 1]):
            u = indices[e]
            if best[u] != NEG_INF and best[u] + weights[e] >= best[v] - slack:
                c += count[u]
        count[v] = c
    return count


@njit(cache=True)
def _find(indices, lo, hi, value):
    """Position of ``value`` in sorted indices[lo:hi], or -1."""
    end = hi
    while lo < hi:
        mid = (lo + hi) // 2
        if indices[mid] < value:
            lo = mid + 1
        else:
            hi = mid
    if lo < end and indices[lo] == value:
        return lo
    return -1


# check ids for axiom_scan
DIAGONAL, NEGATIVE, LL_NOT_LE, ANTISYMMETRY, LE_TRANSITIVE, LL_TRANSITIVE, REVERSE_TRIANGLE = range(7)
N_CHECKS = 7


@njit(cache=True)
def axiom_scan(n, indptr, indices, tau, causal, tol):
    """Scan all pairs and causal 3-chains of a relation stored in CSR.

    ``tau`` and ``causal`` are aligned with ``indices``.  Returns per-check
    violation counts, first witnesses (x, y, z; -1 when unused), the worst
    reverse-triangle margin with its triple and the number of chains seen.
    """
    counts = np.zeros(N_CHECKS, dtype=np.int64)
    wit = np.full((N_CHECKS, 3), -1, dtype=np.int64)
    worst = np.inf
    worst_wit = np.full(3, -1, dtype=np.int64)
    chains = 0
    s_tau = np.zeros(n)
    s_c = np.zeros(n, dtype=np.bool_)
    mark = np.full(n, -1, dtype=np.int64)
    for x in range(n):
        for e in range(indptr[x], indptr[x + 1]):
            j = indices[e]
            t = tau[e]
            s_tau[j] = t
            s_c[j] = causal[e]
            mark[j] = x
            if j == x and (t != 0.0 or causal[e]):
                if counts[DIAGONAL] == 0:
                    wit[DIAGONAL, 0] = x
                    wit[DIAGONAL, 1] = x
                counts[DIAGONAL] += 1
            if not (t >= 0.0):
                if counts[NEGATIVE] == 0:
                    wit[NEGATIVE, 0] = x
                    wit[NEGATIVE, 1] = j
                counts[NEGATIVE] += 1
            if t > 0.0 and not causal[e]:
                if counts[LL_NOT_LE] == 0:
                    wit[LL_NOT_LE, 0] = x
                    wit[LL_NOT_LE, 1] = j
                counts[LL_NOT_LE] += 1
            if causal[e] and j != x:
                r = _find(indices, indptr[j], indptr[j + 1], x)
                if r >= 0 and causal[r]:
                    if counts[ANTISYMMETRY] == 0:
                        wit[ANTISYMMETRY, 0] = x
                        wit[ANTISYMMETRY, 1] = j
                    counts[ANTISYMMETRY] += 1
        for e1 in range(indptr[x], indptr[x + 1]):
            y = indices[e1]
            if not causal[e1] or y == x:
                continue
            t_xy = tau[e1]
            for e2 in range(indptr[y], indptr[y + 1]):
                z = indices[e2]
                if not causal[e2] or z == y or z == x:
                    continue
                chains += 1
                t_yz = tau[e2]
                known = mark[z] == x
                t_xz = s_tau[z] if known else 0.0
                if not (known and s_c[z]):
                    if counts[LE_TRANSITIVE] == 0:
                        wit[LE_TRANSITIVE, 0] = x
                        wit[LE_TRANSITIVE, 1] = y
                        wit[LE_TRANSITIVE, 2] = z
                    counts[LE_TRANSITIVE] += 1
                if t_xy > 0.0 and t_yz > 0.0 and not (t_xz > 0.0):
                    if counts[LL_TRANSITIVE] == 0:
                        wit[LL_TRANSITIVE, 0] = x
                        wit[LL_TRANSITIVE, 1] = y
                        wit[LL_TRANSITIVE, 2] = z
                    counts[LL_TRANSITIVE] += 1
                if t_xz == np.inf:
                    continue
                m = t_xz - t_xy - t_yz
                if m < worst:
                    worst = m
                    worst_wit[0] = x
                    worst_wit[1] = y
                    worst_wit[2] = z
                if m < -tol:
                    if counts[REVERSE_TRIANGLE] == 0:
                        wit[REVERSE_TRIANGLE, 0] = x
                        wit[REVERSE_TRIANGLE, 1] = y
                        wit[REVERSE_TRIANGLE, 2] = z
                    counts[REVERSE_TRIANGLE] += 1
    return counts, wit, worst, worst_wit, chains
