"""Benchmark the compiled kernels against their numpy/pure fallbacks.

Times the three hot paths behind scoring and topic detection:

    rouge    n-gram packing + counting + clipped overlap per sentence pair
    louvain  one local-move sweep over a planted modular graph
    gd       full-batch gradient descent epochs on the 6-feature design

Run:  python3 benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]

The numba column appears only when numba is importable; the fallback
column always runs, so the script also works on a minimal install.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from reviewgen import _kernels


def best_of(repeat: int, fn) -> float:
    fn()  # warmup: jit compile, caches, allocator
    best = float("inf")
    for _ in range(repeat):
        started = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - started)
    return best


def make_sentence_pairs(scale: float, seed: int = 0):
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(int(20000 * scale)):
        ref = rng.integers(1, 400, size=rng.integers(5, 60)).astype(np.int64)
        cand = rng.integers(1, 400, size=rng.integers(5, 60)).astype(np.int64)
        pairs.append((ref, cand))
    return pairs


def bench_rouge(pairs, pack, unique, clip):
    def run():
        total = 0.0
        for ref, cand in pairs:
            for n in (1, 2):
                base = 401
                ref_keys, ref_counts = unique(pack(ref, n, base))
                cand_keys, cand_counts = unique(pack(cand, n, base))
                denom = ref_counts.sum()
                if denom:
                    total += clip(ref_keys, ref_counts, cand_keys, cand_counts) / denom
        return total

    return run


def make_modular_graph(scale: float, seed: int = 0):
    rng = np.random.default_rng(seed)
    n = int(1500 * scale)
    block = 25
    rows, cols, vals = [], [], []
    for u in range(n):
        base = (u // block) * block
        intra = rng.integers(base, min(base + block, n), size=8)
        inter = rng.integers(0, n, size=2)
        for v in np.concatenate([intra, inter]):
            v = int(v)
            if v == u:
                continue
            rows += [u, v]
            cols += [v, u]
            vals += [1.0, 1.0]
    order_idx = np.lexsort((np.array(cols), np.array(rows)))
    rows = np.array(rows, dtype=np.int64)[order_idx]
    cols = np.array(cols, dtype=np.int64)[order_idx]
    vals = np.array(vals, dtype=np.float64)[order_idx]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)
    degree = np.zeros(n, dtype=np.float64)
    np.add.at(degree, rows, vals)
    order = np.random.default_rng(seed + 1).permutation(n).astype(np.int64)
    return indptr, cols, vals, order, degree, n


def bench_louvain(graph, louvain_pass):
    indptr, indices, weights, order, degree, n = graph

    def run():
        comm = np.arange(n, dtype=np.int64)
        comm_tot = degree.copy()
        neigh_w = np.zeros(n, dtype=np.float64)
        touched = np.zeros(n, dtype=np.int64)
        return louvain_pass(
            indptr, indices, weights, order, comm, comm_tot, degree,
            float(degree.sum()), 1.0, neigh_w, touched,
        )

    return run


def make_design(scale: float, seed: int = 0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(int(40000 * scale), 6))
    w_true = rng.normal(size=6)
    r = X @ w_true + 0.1 * rng.normal(size=len(X))
    return X, r


def bench_gd(design, gd_fit, epochs: int = 200):
    X, r = design

    def run():
        w = np.zeros(6, dtype=np.float64)
        losses = np.zeros(epochs, dtype=np.float64)
        return gd_fit(X, r, w, 0.0, 0.1, epochs, losses)

    return run


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5, help="timed runs per variant")
    parser.add_argument("--scale", type=float, default=1.0, help="workload size factor")
    args = parser.parse_args(argv)

    pairs = make_sentence_pairs(args.scale)
    graph = make_modular_graph(args.scale)
    design = make_design(args.scale)

    fallbacks = {
        "rouge": bench_rouge(
            pairs, _kernels.pack_ngrams_np, _kernels.unique_counts_np, _kernels.clipped_overlap_np
        ),
        "louvain": bench_louvain(graph, _kernels.louvain_pass_np),
        "gd": bench_gd(design, _kernels.gd_fit_np),
    }
    compiled = {}
    if _kernels.HAS_NUMBA:
        compiled = {
            "rouge": bench_rouge(
                pairs, _kernels.pack_ngrams_nb, _kernels.unique_counts_nb, _kernels.clipped_overlap_nb
            ),
            "louvain": bench_louvain(graph, _kernels.louvain_pass_nb),
            "gd": bench_gd(design, _kernels.gd_fit_nb),
        }

    print(f"workload scale {args.scale}, best of {args.repeat} runs")
    print(f"{'kernel':<10} {'numba ms':>10} {'fallback ms':>12} {'speedup':>9}")
    for name, fallback_fn in fallbacks.items():
        fallback_ms = best_of(args.repeat, fallback_fn) * 1000
        if name in compiled:
            numba_ms = best_of(args.repeat, compiled[name]) * 1000
            print(
                f"{name:<10} {numba_ms:>10.2f} {fallback_ms:>12.2f} "
                f"{fallback_ms / numba_ms:>8.1f}x"
            )
        else:
            print(f"{name:<10} {'n/a':>10} {fallback_ms:>12.2f} {'n/a':>9}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
