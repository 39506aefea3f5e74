#!/usr/bin/env python3
"""Benchmark the tree-edit-distance kernels: compiled extension vs pure Python.

Builds pairs of random table trees of growing size and times the same
flattened DP through both backends. Typical corpus tables carry a few
hundred nodes, where the compiled kernel is two to three orders of
magnitude faster.
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from tsrkit.teds import _ted_py
from tsrkit.teds.distance import _flatten
from tsrkit.teds.tree import TableTree

try:
    from tsrkit.teds import _speedup
except ImportError:
    _speedup = None


def random_table_tree(rng: random.Random, n_rows: int, n_cols: int) -> TableTree:
    root = TableTree("table")
    body = TableTree("tbody")
    root.children.append(body)
    for _ in range(n_rows):
        tr = TableTree("tr")
        for _ in range(n_cols):
            tr.children.append(
                TableTree(
                    "td",
                    colspan=rng.choice((1, 1, 1, 2)),
                    rowspan=rng.choice((1, 1, 1, 2)),
                )
            )
        body.children.append(tr)
    return root


def flat_arrays(tree: TableTree, interner: dict):
    lmld, labels, keyroots = _flatten(tree, interner)
    return lmld, labels, keyroots


def time_backend(fn, args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args, 1.0, 1.0, 1.0)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[5, 10, 20, 30])
    parser.add_argument("--cols", type=int, default=6)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    print(f"{'nodes':>7} {'python':>12} {'compiled':>12} {'speedup':>9}")
    for rows in args.sizes:
        a = random_table_tree(rng, rows, args.cols)
        b = random_table_tree(rng, rows, args.cols)
        interner: dict = {}
        fa = flat_arrays(a, interner)
        fb = flat_arrays(b, interner)
        list_args = (*fa, *fb)
        py_time = time_backend(_ted_py.tree_distance, list_args, args.repeats)

        if _speedup is None:
            print(f"{a.size():>7} {py_time * 1e3:>10.2f}ms {'missing':>12} {'-':>9}")
            continue
        arr_args = tuple(np.ascontiguousarray(seq, dtype=np.int64) for seq in list_args)
        cy_time = time_backend(_speedup.tree_distance, arr_args, args.repeats)

        d_py = _ted_py.tree_distance(*list_args, 1.0, 1.0, 1.0)
        d_cy = _speedup.tree_distance(*arr_args, 1.0, 1.0, 1.0)
        assert d_py == d_cy, f"backend disagreement: {d_py} vs {d_cy}"

        print(
            f"{a.size():>7} {py_time * 1e3:>10.2f}ms {cy_time * 1e3:>10.2f}ms "
            f"{py_time / cy_time:>8.1f}x"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
