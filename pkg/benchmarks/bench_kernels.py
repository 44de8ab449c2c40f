"""Compare the numba and pure-numpy backends of the hot kernels.

Run with ``python benchmarks/bench_kernels.py``. Each kernel is timed on both
backends after one warm-up call (so numba compilation is excluded) and the
outputs are checked to agree.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from coarset import _kernels
from coarset.graphs import random_regular


def _best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _cases(n: int, cheeger_n: int, seed: int):
    space = random_regular(n, 3, seed=seed)
    adj = space.component_adjacency(0)
    adj.sort_indices()
    yield "bfs_all_pairs", lambda b: _kernels.bfs_distances(adj.indptr, adj.indices, backend=b)
    yield "girth", lambda b: _kernels.girth(adj.indptr, adj.indices, backend=b)

    small = random_regular(cheeger_n, 3, seed=seed)
    dense = small.component_adjacency(0).toarray().astype(bool)
    mask = (dense.astype(np.int64) << np.arange(cheeger_n, dtype=np.int64)[None, :]).sum(axis=1)
    deg = dense.sum(axis=1)
    yield "cheeger_exact", lambda b: _kernels.cheeger_exact(mask, deg, backend=b)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=600, help="vertices of the 3-regular graph for BFS/girth")
    ap.add_argument("--cheeger-n", type=int, default=18, help="vertices for the exhaustive Cheeger search")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    if "numba" not in _kernels.BACKENDS:
        print("numba is unavailable; only the numpy backend can run")
    print(f"{'kernel':<16}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name, fn in _cases(args.n, args.cheeger_n, args.seed):
        ref = fn("numpy")
        t_np = _best_of(lambda: fn("numpy"), args.repeat)
        if "numba" in _kernels.BACKENDS:
            out = fn("numba")  # warm-up and compile
            same = np.array_equal(np.asarray(out), np.asarray(ref))
            t_nb = _best_of(lambda: fn("numba"), args.repeat)
            flag = "" if same else "  MISMATCH"
            print(f"{name:<16}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>9.1f}x{flag}")
        else:
            print(f"{name:<16}{'-':>12}{t_np:>12.4f}{'-':>10}")


if __name__ == "__main__":
    main()
