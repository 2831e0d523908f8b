"""Compare the compiled and pure-Python diagram kernels.

    python3 benchmarks/bench_kernels.py [--width 6] [--repeat 3]

Times every pairwise composition of Temperley-Lieb diagrams at the given
width, plus the closure-loop count of each diagram, and checks that both
backends agree on every result.
"""

from __future__ import annotations

import argparse
import timeit

from vnwb import _kernels_py as pure
from vnwb.tl import all_diagrams

try:
    from vnwb import _kernels as compiled
except ImportError:
    compiled = None


def workload(mod, diagrams, n):
    out = []
    for a in diagrams:
        for b in diagrams:
            out.append(mod.compose(a, b, n))
        out.append(mod.closure_loops(a, n))
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--width", type=int, default=6)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    diagrams = all_diagrams(args.width)
    n = args.width
    print(f"width {n}: {len(diagrams)} diagrams, {len(diagrams) ** 2} compositions")
    backends = [("python", pure)] + ([("cython", compiled)] if compiled else [])
    results, times = {}, {}
    for name, mod in backends:
        results[name] = workload(mod, diagrams, n)
        times[name] = min(timeit.repeat(lambda: workload(mod, diagrams, n), number=1, repeat=args.repeat))
        print(f"{name:>7}: {times[name] * 1e3:9.1f} ms")
    if compiled is None:
        print("compiled kernels not built; only the fallback was timed")
        return
    assert results["python"] == results["cython"], "backends disagree"
    print(f"speedup: {times['python'] / times['cython']:.1f}x (results identical)")


if __name__ == "__main__":
    main()
