"""Hot numeric kernels, numba-compiled when available.

Three inner loops dominate pipeline runtime on a large corpus: clipped
n-gram matching (ROUGE), the Louvain local-move sweep, and full-batch
gradient-descent epochs.  Each kernel here exists in two forms:

* ``*_nb`` -- the numba ``@njit`` build (absent if numba is missing),
* ``*_np`` -- a fallback on plain numpy.  The merge/sweep kernels are
  inherently sequential, so their fallback runs the same loop
  uncompiled; the packing and training kernels fall back to vectorized
  numpy.

The public names (``pack_ngrams``, ``unique_counts``, ``clipped_overlap``,
``louvain_pass``, ``gd_fit``) bind to the numba build unless numba is
unavailable or the environment variable ``REVIEWGEN_NO_NUMBA`` is set to
``1``/``true``/``yes``.  Integer kernels agree exactly across builds;
float kernels may differ in the last ulp because numpy matmul sums in a
different order.  ``benchmarks/bench_kernels.py`` times both builds.
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_DISABLED = os.environ.get("REVIEWGEN_NO_NUMBA", "").strip().lower() in {
    "1",
    "true",
    "yes",
}

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

USING_NUMBA = HAS_NUMBA and not NUMBA_DISABLED


# ---------------------------------------------------------------------------
# n-gram packing and clipped matching
#
# Token ids are small non-negative ints; an n-gram is packed into a single
# int64 key by Horner's rule with base = vocabulary size.  Callers guarantee
# base ** n fits in int64 (metrics falls back to a dict path otherwise).


def _pack_ngrams(ids, n, base):
    m = ids.size - n + 1
    if m <= 0:
        return np.empty(0, dtype=np.int64)
    out = np.empty(m, dtype=np.int64)
    for i in range(m):
        key = np.int64(0)
        for k in range(n):
            key = key * base + ids[i + k]
        out[i] = key
    return out


def pack_ngrams_np(ids, n, base):
    m = ids.size - n + 1
    if m <= 0:
        return np.empty(0, dtype=np.int64)
    keys = np.zeros(m, dtype=np.int64)
    for k in range(n):
        keys = keys * base + ids[k : k + m]
    return keys


def _unique_counts(keys):
    # keys sorted ascending
    n = keys.size
    if n == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    uniq = np.empty(n, dtype=np.int64)
    cnt = np.empty(n, dtype=np.int64)
    j = 0
    uniq[0] = keys[0]
    cnt[0] = 1
    for i in range(1, n):
        if keys[i] == keys[i - 1]:
            cnt[j] += 1
        else:
            j += 1
            uniq[j] = keys[i]
            cnt[j] = 1
    return uniq[: j + 1].copy(), cnt[: j + 1].copy()


def unique_counts_np(keys):
    uniq, cnt = np.unique(keys, return_counts=True)
    return uniq.astype(np.int64), cnt.astype(np.int64)


def _clipped_overlap(ref_keys, ref_counts, cand_keys, cand_counts):
    # both key arrays sorted unique; returns sum of min counts over shared keys
    i = 0
    j = 0
    total = np.int64(0)
    while i < ref_keys.size and j < cand_keys.size:
        if ref_keys[i] == cand_keys[j]:
            total += min(ref_counts[i], cand_counts[j])
            i += 1
            j += 1
        elif ref_keys[i] < cand_keys[j]:
            i += 1
        else:
            j += 1
    return total


def clipped_overlap_np(ref_keys, ref_counts, cand_keys, cand_counts):
    common, ia, ib = np.intersect1d(
        ref_keys, cand_keys, assume_unique=True, return_indices=True
    )
    if common.size == 0:
        return np.int64(0)
    return np.int64(np.minimum(ref_counts[ia], cand_counts[ib]).sum())


# ---------------------------------------------------------------------------
# Louvain local-move sweep over a CSR graph
#
# comm, comm_tot and the scratch arrays are mutated in place.  degree[v]
# counts any accumulated self-weight twice; CSR rows hold neighbours only.
# Gains are compared with a strict > so ties keep the current community,
# making the sweep deterministic for a fixed visit order.


def _louvain_pass(
    indptr, indices, weights, order, comm, comm_tot, degree, m2, resolution,
    neigh_w, touched,
):
    moves = 0
    for oi in range(order.size):
        v = order[oi]
        cv = comm[v]
        kv = degree[v]
        # collect edge weight from v into each neighbouring community
        ntouch = 0
        for e in range(indptr[v], indptr[v + 1]):
            u = indices[e]
            if u == v:
                continue
            cu = comm[u]
            if neigh_w[cu] == 0.0:
                touched[ntouch] = cu
                ntouch += 1
            neigh_w[cu] += weights[e]
        comm_tot[cv] -= kv
        stay_gain = neigh_w[cv] - resolution * kv * comm_tot[cv] / m2
        best_comm = cv
        best_gain = stay_gain
        for t in range(ntouch):
            c = touched[t]
            if c == cv:
                continue
            gain = neigh_w[c] - resolution * kv * comm_tot[c] / m2
            if gain > best_gain:
                best_gain = gain
                best_comm = c
        comm_tot[best_comm] += kv
        if best_comm != cv:
            comm[v] = best_comm
            moves += 1
        for t in range(ntouch):
            neigh_w[touched[t]] = 0.0
    return moves


# ---------------------------------------------------------------------------
# Full-batch gradient descent for the linear sentence scorer
#
# Minimizes mean squared error of X @ w + b against targets r; w is mutated
# in place, losses[e] records the loss at the start of epoch e, and the
# final bias is returned.


def _gd_fit(X, r, w, b, lr, epochs, losses):
    m, d = X.shape
    gw = np.empty(d, dtype=np.float64)
    for e in range(epochs):
        total = 0.0
        gb = 0.0
        for j in range(d):
            gw[j] = 0.0
        for i in range(m):
            y = b
            for j in range(d):
                y += X[i, j] * w[j]
            res = y - r[i]
            total += res * res
            for j in range(d):
                gw[j] += X[i, j] * res
            gb += res
        losses[e] = total / m
        step = lr * 2.0 / m
        for j in range(d):
            w[j] -= step * gw[j]
        b -= step * gb
    return b


def gd_fit_np(X, r, w, b, lr, epochs, losses):
    m = X.shape[0]
    for e in range(epochs):
        res = X @ w + b - r
        losses[e] = float(res @ res) / m
        step = lr * 2.0 / m
        w -= step * (X.T @ res)
        b -= step * float(res.sum())
    return b


# sequential kernels: uncompiled source doubles as the fallback
louvain_pass_np = _louvain_pass
pack_ngrams_py = _pack_ngrams
unique_counts_py = _unique_counts
clipped_overlap_py = _clipped_overlap

if HAS_NUMBA:
    pack_ngrams_nb = njit(cache=True)(_pack_ngrams)
    unique_counts_nb = njit(cache=True)(_unique_counts)
    clipped_overlap_nb = njit(cache=True)(_clipped_overlap)
    louvain_pass_nb = njit(cache=True)(_louvain_pass)
    gd_fit_nb = njit(cache=True)(_gd_fit)

if USING_NUMBA:
    pack_ngrams = pack_ngrams_nb
    unique_counts = unique_counts_nb
    clipped_overlap = clipped_overlap_nb
    louvain_pass = louvain_pass_nb
    gd_fit = gd_fit_nb
else:
    pack_ngrams = pack_ngrams_np
    unique_counts = unique_counts_np
    clipped_overlap = clipped_overlap_np
    louvain_pass = louvain_pass_np
    gd_fit = gd_fit_np


def warmup():
    """Trigger JIT compilation of every kernel on tiny inputs."""
    if not USING_NUMBA:
        return
    ids = np.array([0, 1, 0], dtype=np.int64)
    keys = pack_ngrams(ids, 2, np.int64(2))
    uniq, cnt = unique_counts(np.sort(keys))
    clipped_overlap(uniq, cnt, uniq, cnt)
    indptr = np.array([0, 1, 2], dtype=np.int64)
    indices = np.array([1, 0], dtype=np.int64)
    w = np.array([1.0, 1.0])
    order = np.array([0, 1], dtype=np.int64)
    comm = np.array([0, 1], dtype=np.int64)
    tot = np.array([1.0, 1.0])
    deg = np.array([1.0, 1.0])
    louvain_pass(
        indptr, indices, w, order, comm, tot, deg, 2.0, 1.0,
        np.zeros(2), np.zeros(2, dtype=np.int64),
    )
    X = np.ones((2, 2))
    losses = np.zeros(1)
    gd_fit(X, np.zeros(2), np.zeros(2), 0.0, 0.1, 1, losses)
