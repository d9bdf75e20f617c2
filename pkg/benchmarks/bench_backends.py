"""Time the compiled and pure-Python kernel backends side by side.

    python benchmarks/bench_backends.py [--repeat 5]

Backends that fail to import are reported and skipped.
"""

import argparse
import timeit

import numpy as np

from artifact import kernels


# utility/weighting codes are shared by both backends
TK_ARGS = (kernels.U_POWER, 0.88, kernels.U_POWER, 0.88, kernels.W_TK, 0.61, kernels.W_TK, 0.69)


def cases(rng):
    x = np.sort(rng.normal(size=10_000))
    A = np.eye(10) + 0.1 * np.ones((10, 10))
    b = rng.normal(size=10)
    theta = rng.normal(size=10)
    rb = rng.normal(size=10)
    return {
        "cpt_sorted_sum n=1e4 (tk, power)": lambda k: k.cpt_sorted_sum(
            x, 0.0, *TK_ARGS),
        "cpt_sorted_sum n=500 (tk, power)": lambda k: k.cpt_sorted_sum(
            x[::20], 0.0, *TK_ARGS),
        "quadratic N=10": lambda k: k.quadratic(theta, A, b),
        "rosenbrock N=10": lambda k: k.rosenbrock(rb),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    available = kernels.backends()
    for missing in {"cython", "python"} - set(available):
        print(f"backend {missing!r} unavailable, skipped")
    print(f"default backend: {kernels.BACKEND}")
    print(f"{'kernel':36s}" + "".join(f"{name:>14s}" for name in available) + f"{'speedup':>10s}")
    for label, fn in cases(np.random.default_rng(0)).items():
        per_call = {}
        for name, mod in available.items():
            timer = timeit.Timer(lambda: fn(mod))
            number, _ = timer.autorange()
            per_call[name] = min(timer.repeat(args.repeat, number)) / number
        row = f"{label:36s}" + "".join(f"{per_call[n] * 1e6:12.2f}us" for n in available)
        if len(per_call) == 2:
            row += f"{per_call['python'] / per_call['cython']:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
