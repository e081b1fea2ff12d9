"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Times the two row kernels on oracle-sized batches, then one full grid-oracle
evaluation with each backend swapped in.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from gpt_thermo import _kernels_py, kernels, make_polygon
from gpt_thermo.oracles import oracle_s_acc


def _compiled():
    try:
        from gpt_thermo import _kernels
    except ImportError:
        return None
    return _kernels


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_rows(impl, repeat):
    rng = np.random.default_rng(0)
    dist = np.ascontiguousarray(rng.dirichlet(np.ones(6), size=20_000))
    w = np.ascontiguousarray(rng.dirichlet(np.ones(6), size=20_000))
    ch = np.ascontiguousarray(rng.dirichlet(np.ones(3), size=6))
    return (_best(lambda: impl.shannon_rows(dist), repeat),
            _best(lambda: impl.mutual_information_rows(w, ch), repeat))


def bench_oracle(impl, repeat):
    rho = make_polygon(6).state([0.2, 0.3, 0.1, 0.1, 0.2, 0.1])
    saved = kernels._impl
    kernels._impl = impl
    try:
        return _best(lambda: oracle_s_acc(rho), repeat)
    finally:
        kernels._impl = saved


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = [("python", _kernels_py)]
    compiled = _compiled()
    if compiled is not None:
        backends.insert(0, ("cython", compiled))
    else:
        print("compiled extension not built; timing the fallback only")

    results = {}
    print(f"{'backend':<8}{'shannon 20k':>14}{'MI 20k':>14}{'s_acc oracle':>16}")
    for name, impl in backends:
        sh, mi = bench_rows(impl, args.repeat)
        orc = bench_oracle(impl, max(1, args.repeat // 3))
        results[name] = (sh, mi, orc)
        print(f"{name:<8}{sh * 1e3:>12.2f}ms{mi * 1e3:>12.2f}ms{orc:>15.2f}s")
    if len(results) == 2:
        speed = [p / c for c, p in zip(results["cython"], results["python"])]
        print(f"{'speedup':<8}{speed[0]:>13.1f}x{speed[1]:>13.1f}x{speed[2]:>15.1f}x")


if __name__ == "__main__":
    main()
