"""numba kernels shared by the enumeration and annealing solvers."""
from __future__ import annotations

import numba as nb
import numpy as np


def to_csr(n: int, rows: np.ndarray, cols: np.ndarray, vals: np.ndarray):
    """Split upper-triangular terms into linear biases and a symmetric CSR coupling matrix."""
    h = np.zeros(n)
    diag = rows == cols
    np.add.at(h, rows[diag], vals[diag])
    r, c, v = rows[~diag], cols[~diag], vals[~diag]
    src = np.concatenate([r, c])
    dst = np.concatenate([c, r])
    w = np.concatenate([v, v])
    order = np.lexsort((dst, src))
    src, dst, w = src[order], dst[order], w[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    indptr = np.cumsum(indptr)
    return h, indptr, dst.astype(np.int64), w


@nb.njit(cache=True)
def gray_enumerate(h, indptr, indices, data, offset, n):
    x = np.zeros(n, dtype=np.int8)
    field = np.zeros(n)
    e = offset
    best_e = e
    worst_e = e
    key = 0
    best_key = 0
    total = 1 << n
    for step in range(1, total):
        # bit that changes between gray(step-1) and gray(step)
        v = 0
        s = step
        while (s & 1) == 0:
            s >>= 1
            v += 1
        if x[v] == 0:
            e += h[v] + field[v]
            x[v] = 1
            sign = 1.0
        else:
            e -= h[v] + field[v]
            x[v] = 0
            sign = -1.0
        for p in range(indptr[v], indptr[v + 1]):
            field[indices[p]] += sign * data[p]
        key ^= 1 << (n - 1 - v)
        if e < best_e or (e == best_e and key < best_key):
            best_e = e
            best_key = key
        if e > worst_e:
            worst_e = e
    return best_key, best_e, worst_e


@nb.njit(cache=True)
def anneal(h, indptr, indices, data, offset, temps, seed):
    np.random.seed(seed)
    n = h.shape[0]
    x = np.zeros(n, dtype=np.int8)
    for i in range(n):
        x[i] = 1 if np.random.random() < 0.5 else 0
    field = np.zeros(n)
    e = offset
    for i in range(n):
        if x[i]:
            e += h[i]
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                field[j] += data[p]
    for i in range(n):
        if x[i]:
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                if j > i and x[j]:
                    e += data[p]
    best_x = x.copy()
    best_e = e
    worst_e = e
    order = np.arange(n)
    flips = 0
    for s in range(temps.shape[0]):
        t = temps[s]
        np.random.shuffle(order)
        for q in range(n):
            v = order[q]
            d = h[v] + field[v]
            if x[v] == 1:
                d = -d
            if d <= 0.0 or np.random.random() < np.exp(-d / t):
                e += d
                sign = 1.0 if x[v] == 0 else -1.0
                x[v] = 1 - x[v]
                for p in range(indptr[v], indptr[v + 1]):
                    field[indices[p]] += sign * data[p]
                flips += 1
        if e < best_e:
            best_e = e
            best_x[:] = x
        if e > worst_e:
            worst_e = e
    return best_x, best_e, worst_e, flips
