"""Compare the compiled and pure-Python kernels on realistic inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Inputs mirror one analysis window (60 s at 25 Hz), one NN series, and the
incomplete-beta calls behind a 25-variable correlation matrix. The compiled
kernels are skipped with a note when the extension was not built.
"""

import argparse
import timeit

import numpy as np

from valence_pipe import _kernels
from valence_pipe._kernels import _slow


def cases():
    rng = np.random.default_rng(0)
    t = np.arange(1500) / 25.0
    x = np.sin(2 * np.pi * 1.2 * t) + 0.1 * rng.normal(size=t.size)
    threshold = np.full(t.size, 0.3)
    raw = rng.normal(850, 60, size=80)
    a = rng.uniform(0.5, 250, size=300)
    z = rng.uniform(0, 1, size=300)
    return {
        "run_maxima (1500 samples)": lambda k: k.run_maxima(x, threshold),
        "accept_intervals (80 intervals)": lambda k: k.accept_intervals(raw, 300.0, 2000.0, 0.3),
        "betainc (300 cells)": lambda k: [k.betainc(ai, 0.5, zi) for ai, zi in zip(a, z)],
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    fast = _kernels.compiled()
    backends = [("python", _slow)] + ([("cython", fast)] if fast is not None else [])
    if fast is None:
        print("compiled kernels not built; timing the Python fallback only")
    print(f"{'kernel':34s}" + "".join(f"{name:>14s}" for name, _ in backends) + ("     speedup" if fast else ""))
    for label, fn in cases().items():
        times = []
        for _, module in backends:
            timer = timeit.Timer(lambda: fn(module))
            number, _ = timer.autorange()
            times.append(min(timer.repeat(args.repeat, number)) / number)
        row = f"{label:34s}" + "".join(f"{1e6 * s:12.1f}us" for s in times)
        if fast:
            row += f"{times[0] / times[1]:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
