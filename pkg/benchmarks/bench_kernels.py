"""Compare the compiled and numpy minimizer kernels.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Times a single damped-Newton descent from a random start and a full
multi-start ``minimize`` call for several ring sizes, with each backend.
"""
import argparse
import timeit
from unittest import mock

import numpy as np

from rabiring import kernels, meanfield
from rabiring.model import Functional, ModelParams


def _descend_case(mod, n, functional):
    params = ModelParams(n, 0.55, 0.05, 1.3, functional)
    args = meanfield._kernel_args(params, functional)
    rng = np.random.default_rng(0)
    v0 = rng.uniform(-0.4, 0.4, 2 * n)
    return lambda: mod.descend(v0, *args)


def _minimize_case(mod, n, functional):
    params = ModelParams(n, 0.55, 0.05, 1.3, functional)

    def run():
        with mock.patch.object(kernels, "descend", mod.descend):
            meanfield.minimize(params)
    return run


def best_time(fn, repeat):
    number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-7)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--sizes", type=int, nargs="+", default=[3, 4, 6, 8])
    args = parser.parse_args()

    try:
        compiled = kernels.get_backend("compiled")
    except ImportError:
        print("compiled backend not built; run `pip install -e .` first")
        return
    python = kernels.get_backend("python")

    print(f"{'case':<22}{'N':>3}{'compiled':>14}{'python':>14}{'speedup':>10}")
    for label, make in (("descend", _descend_case), ("minimize", _minimize_case)):
        for functional in Functional:
            for n in args.sizes:
                tc = best_time(make(compiled, n, functional), args.repeat)
                tp = best_time(make(python, n, functional), args.repeat)
                name = f"{label}/{functional.value}"
                print(f"{name:<22}{n:>3}{tc * 1e3:>12.3f}ms{tp * 1e3:>12.3f}ms{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
