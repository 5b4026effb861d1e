"""Compare the compiled and numpy sparse kernels.

Times ``csr_spmm`` on random sparse matrices and the two graph filters on a
Cora-sized SBM, once per available backend, and checks that the backends
agree. Run with ``python benchmarks/bench_kernels.py [--repeat N]``.
"""
import argparse
import time

import numpy as np

from graphfilter import kernels
from graphfilter.dataio import SbmParams, generate_sbm
from graphfilter.sparse import SparseMatrix, renormalized_adjacency, symmetric_normalized_adjacency


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def random_csr(rng, n, nnz_per_row):
    rows = np.repeat(np.arange(n), nnz_per_row)
    cols = rng.integers(0, n, rows.size)
    return SparseMatrix.from_coo(n, n, rows, cols, rng.normal(size=rows.size))


def ar_filter(spmm_add, w, x, alpha, k):
    beta = alpha / (1.0 + alpha)
    acc = x
    for _ in range(k):
        acc = spmm_add(w.row_offsets, w.col_indices, w.values, acc, x, beta)
    return acc / (1.0 + alpha)


def rnm_filter(spmm, w, x, k):
    for _ in range(k):
        x = spmm(w.row_offsets, w.col_indices, w.values, x)
    return x


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)} (default {kernels.BACKEND})")

    cases = []
    for n, per_row, width in ((2_000, 5, 16), (20_000, 10, 16), (20_000, 10, 128),
                              (100_000, 20, 8)):
        a = random_csr(rng, n, per_row)
        x = rng.normal(size=(n, width))
        cases.append((f"spmm n={n} nnz={a.nnz} width={width}",
                      lambda fns, a=a, x=x: fns[0](a.row_offsets, a.col_indices, a.values, x)))

    ds = generate_sbm(SbmParams([388] * 7, 0.01, 0.0005, feature_dim=1433, seed=args.seed))
    w_ren, w_sym = renormalized_adjacency(ds.graph), symmetric_normalized_adjacency(ds.graph)
    x = np.ascontiguousarray(ds.features)
    cases.append(("RNM k=5 on n=2716 x 1433",
                  lambda fns: rnm_filter(fns[0], w_ren, x, 5)))
    cases.append(("AR alpha=10 (k=40) on n=2716 x 1433",
                  lambda fns: ar_filter(fns[1], w_sym, x, 10.0, 40)))

    print(f"{'case':42s}" + "".join(f"{b:>12s}" for b in backends) + "     speedup  max|diff|")
    for name, run in cases:
        times, outs = [], []
        for b in backends:
            t, out = best_of(lambda: run(kernels.get_backend(b)), args.repeat)
            times.append(t)
            outs.append(out)
        line = f"{name:42s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(backends) == 2:
            line += f"{times[1] / times[0]:11.2f}x  {np.max(np.abs(outs[0] - outs[1])):.1e}"
        print(line)


if __name__ == "__main__":
    main()
