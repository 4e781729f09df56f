"""Compiled enumeration kernels behind the brute-force oracle.

Both kernels walk the same mixed-radix order as the pure-Python engine (item
0 most significant) with incremental bundle updates, and compare envy ratios
by int64 cross-multiplication, so results are exact as long as per-row
integer magnitudes stay modest (the caller checks).
"""

from __future__ import annotations

import numpy as np
from numba import njit

_BIG = np.int64(2) ** 60


@njit(cache=True)
def _advance(digits, cost, size, C, n, m):  # pragma: no cover - jitted
    k = m - 1
    while True:
        old = digits[k]
        for i in range(n):
            cost[i, old] -= C[i, k]
        size[old] -= 1
        nxt = old + 1
        if nxt < n:
            digits[k] = nxt
            for i in range(n):
                cost[i, nxt] += C[i, k]
            size[nxt] += 1
            return
        digits[k] = 0
        for i in range(n):
            cost[i, 0] += C[i, k]
        size[0] += 1
        k -= 1


@njit(cache=True)
def _exact_alpha(digits, cost, size, C, n, m):  # pragma: no cover - jitted
    """Max over agent pairs of remainder/rival as (num, den, is_infinite)."""
    minown = np.empty(n, dtype=np.int64)
    for i in range(n):
        minown[i] = _BIG
    for e in range(m):
        a = digits[e]
        v = C[a, e]
        if v < minown[a]:
            minown[a] = v
    num = np.int64(0)
    den = np.int64(1)
    isinf = 0
    for i in range(n):
        if size[i] < 2:
            continue
        ri = cost[i, i] - minown[i]
        if ri == 0:
            continue
        for j in range(n):
            if j == i:
                continue
            cij = cost[i, j]
            if cij == 0:
                isinf = 1
            elif isinf == 0 and ri * den > num * cij:
                num, den = ri, cij
    return num, den, isinf


@njit(cache=True)
def scan_min_alpha(C, n, m, total):  # pragma: no cover - jitted
    """Minimum envy ratio over all complete allocations.

    Returns ``(num, den, is_infinite, first_state_attaining)``.
    """
    digits = np.zeros(m, dtype=np.int64)
    cost = np.zeros((n, n), dtype=np.int64)
    size = np.zeros(n, dtype=np.int64)
    for e in range(m):
        for i in range(n):
            cost[i, 0] += C[i, e]
    size[0] = m
    best_num, best_den, best_inf = _exact_alpha(digits, cost, size, C, n, m)
    best_idx = np.int64(0)
    minown = np.empty(n, dtype=np.int64)
    for s in range(1, total):
        _advance(digits, cost, size, C, n, m)
        for i in range(n):
            minown[i] = _BIG
        for e in range(m):
            a = digits[e]
            v = C[a, e]
            if v < minown[a]:
                minown[a] = v
        better = True
        for i in range(n):
            if size[i] < 2:
                continue
            ri = cost[i, i] - minown[i]
            if ri == 0:
                continue
            for j in range(n):
                if j == i:
                    continue
                cij = cost[i, j]
                if best_inf == 1:
                    if cij == 0:
                        better = False
                        break
                else:
                    if cij == 0 or ri * best_den >= best_num * cij:
                        better = False
                        break
            if not better:
                break
        if better:
            best_num, best_den, best_inf = _exact_alpha(digits, cost, size, C, n, m)
            best_idx = np.int64(s)
    return best_num, best_den, best_inf, best_idx


@njit(cache=True)
def scan_at_most(C, n, m, total, num, den):  # pragma: no cover - jitted
    """First state whose envy ratio is at most num/den, or -1 if none."""
    digits = np.zeros(m, dtype=np.int64)
    cost = np.zeros((n, n), dtype=np.int64)
    size = np.zeros(n, dtype=np.int64)
    for e in range(m):
        for i in range(n):
            cost[i, 0] += C[i, e]
    size[0] = m
    minown = np.empty(n, dtype=np.int64)
    for s in range(total):
        if s > 0:
            _advance(digits, cost, size, C, n, m)
        for i in range(n):
            minown[i] = _BIG
        for e in range(m):
            a = digits[e]
            v = C[a, e]
            if v < minown[a]:
                minown[a] = v
        ok = True
        for i in range(n):
            if size[i] < 2:
                continue
            ri = cost[i, i] - minown[i]
            if ri == 0:
                continue
            for j in range(n):
                if j == i:
                    continue
                cij = cost[i, j]
                if ri * den > num * cij:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return np.int64(s)
    return np.int64(-1)
