"""Benchmark the compiled kernels against the NumPy fallback.

Usage:
    python benchmarks/bench_kernels.py [--repeat 200]

Measures the two hot loops of the query path — per-term BM25 posting
accumulation and the exhaustive cosine scan — at a few corpus sizes, and
reports the median per-call time for each backend plus the speedup.
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from irec.kernels import _pykernels

try:
    from irec.kernels import _ckernels
except ImportError:
    _ckernels = None


def bench(fn, repeat: int) -> float:
    """Median seconds per call."""
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return statistics.median(times)


def bench_bm25(backend, n_docs: int, n_terms: int, hit_rate: float, repeat: int, rng) -> float:
    postings = []
    for _ in range(n_terms):
        n_hits = max(1, int(n_docs * hit_rate))
        rows = rng.choice(n_docs, size=n_hits, replace=False).astype(np.int32)
        tfs = rng.integers(1, 8, size=n_hits).astype(np.float64)
        idf = float(rng.uniform(0.1, 4.0))
        postings.append((rows, tfs, idf))
    len_norm = rng.uniform(0.4, 1.8, size=n_docs)
    scores = np.zeros(n_docs)

    def run():
        scores.fill(0.0)
        for rows, tfs, idf in postings:
            backend.bm25_accumulate(rows, tfs, idf, 1.2, len_norm, scores)

    return bench(run, repeat)


def bench_cosine(backend, n_docs: int, dim: int, repeat: int, rng) -> float:
    matrix = np.ascontiguousarray(rng.normal(size=(n_docs, dim)))
    matrix /= np.linalg.norm(matrix, axis=1, keepdims=True)
    query = rng.normal(size=dim)
    query /= np.linalg.norm(query)
    query = np.ascontiguousarray(query)
    out = np.empty(n_docs)
    return bench(lambda: backend.cosine_scores(matrix, query, out), repeat)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=200)
    args = parser.parse_args()

    if _ckernels is None:
        print("compiled kernels not built (pip install -e . --no-build-isolation); "
              "benchmarking the NumPy fallback only")
    rng = np.random.default_rng(0)

    rows = []
    for n_docs in (1_000, 10_000, 50_000):
        py = bench_bm25(_pykernels, n_docs, n_terms=8, hit_rate=0.05, repeat=args.repeat, rng=rng)
        row = [f"bm25 accumulate  n={n_docs:>6}", f"{py*1e6:10.1f}"]
        if _ckernels is not None:
            cy = bench_bm25(_ckernels, n_docs, n_terms=8, hit_rate=0.05, repeat=args.repeat, rng=rng)
            row += [f"{cy*1e6:10.1f}", f"{py/cy:7.2f}x"]
        rows.append(row)
    for n_docs in (1_000, 10_000, 50_000):
        py = bench_cosine(_pykernels, n_docs, dim=256, repeat=args.repeat, rng=rng)
        row = [f"cosine scan      n={n_docs:>6}", f"{py*1e6:10.1f}"]
        if _ckernels is not None:
            cy = bench_cosine(_ckernels, n_docs, dim=256, repeat=args.repeat, rng=rng)
            row += [f"{cy*1e6:10.1f}", f"{py/cy:7.2f}x"]
        rows.append(row)

    header = ["kernel", "numpy µs"]
    if _ckernels is not None:
        header += ["compiled µs", "speedup"]
    print("  ".join(f"{h:<28}" if i == 0 else f"{h:>12}" for i, h in enumerate(header)))
    for row in rows:
        print("  ".join(f"{c:<28}" if i == 0 else f"{c:>12}" for i, c in enumerate(row)))


if __name__ == "__main__":
    main()
