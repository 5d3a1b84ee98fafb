"""Compare the compiled core with the numpy fallback on the hot kernels.

Usage: python benchmarks/bench_backends.py [--repeat N]
"""

import argparse
import time

import numpy as np

from toaops import _fallback, kernels
from toaops.operator import build_matrix
from toaops.potentials import catalog_lookup

try:
    from toaops import _core
except ImportError:
    _core = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    backends = {"python": _fallback}
    if _core is not None:
        backends["compiled"] = _core
    else:
        print("compiled extension not built; timing the fallback only")

    rng = np.random.default_rng(0)
    z = rng.uniform(-400, 400, size=(2000, 48))
    g = rng.normal(size=z.shape)
    P = catalog_lookup("cosine", {"V0": 1.0, "k": 1.0})
    T = kernels.KernelEvaluator("supra", P)

    rows = []
    for name, mod in backends.items():
        t_hyp = best_of(lambda: mod.hyp0f1_array(1.0, z), args.repeat)
        t_row = best_of(lambda: mod.weighted_rowsum(2.0, z, g), args.repeat)
        saved = kernels._backend
        kernels._backend = mod
        try:
            t_mat = best_of(lambda: build_matrix(T, 1.0, 300), args.repeat)
        finally:
            kernels._backend = saved
        rows.append((name, t_hyp, t_row, t_mat))

    print(f"{'backend':<10} {'0F1 x96k':>12} {'rowsum x96k':>12} {'matrix n=300':>14}")
    for name, *ts in rows:
        print(f"{name:<10} " + " ".join(f"{t * 1e3:>11.1f}ms" if i < 2 else f"{t * 1e3:>13.1f}ms"
                                        for i, t in enumerate(ts)))
    if len(rows) == 2:
        py, cc = rows
        print("speedup   " + " ".join(f"{a / b:>11.1f}x" if i < 2 else f"{a / b:>13.1f}x"
                                      for i, (a, b) in enumerate(zip(py[1:], cc[1:]))))


if __name__ == "__main__":
    main()
