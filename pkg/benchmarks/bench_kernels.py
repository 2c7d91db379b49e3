#!/usr/bin/env python3
"""Benchmark the compiled pair-rotation kernels against the numpy fallback.

Two views:

* raw kernel: in-place pair rotations on statevectors of increasing width,
  both implementations imported side by side in this process;
* end-to-end: a full ansatz simulation through the public API, run in
  subprocesses so the HWVQE_PURE_PYTHON switch selects each backend the same
  way a user install would.

Usage: python benchmarks/bench_kernels.py [--sizes 14 16 18 20] [--repeats 5]
"""

import argparse
import math
import os
import subprocess
import sys
import time

import numpy as np

from hwvqe import _kernels_py

try:
    from hwvqe import _kernels
except ImportError:
    _kernels = None

_SIMULATE_SNIPPET = """
import time
import numpy as np
from hwvqe import BACKEND, qsim
from hwvqe.ansatz import DickeSpec, build_for

circuit = build_for(DickeSpec({n}, {n} // 2))
params = np.random.default_rng(0).uniform(0.1, 3.0, circuit.num_params)
qsim.simulate(circuit, params)  # warm-up
best = float("inf")
for _ in range({repeats}):
    start = time.perf_counter()
    qsim.simulate(circuit, params)
    best = min(best, time.perf_counter() - start)
print(f"{{BACKEND}} {{best:.6f}}")
"""


def time_kernel(kernel, n: int, repeats: int) -> float:
    """Best-of-``repeats`` seconds for one rotation sweep over all n-1 pairs."""
    rng = np.random.default_rng(n)
    amps = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    c, s = math.cos(0.4), math.sin(0.4)
    best = math.inf
    for _ in range(repeats):
        work = amps.copy()
        start = time.perf_counter()
        for lower in range(n - 1):
            kernel.apply_v_block(work, lower, c, s)
        best = min(best, time.perf_counter() - start)
    return best


def run_simulate(n: int, repeats: int, pure_python: bool) -> tuple[str, float]:
    env = dict(os.environ)
    env.pop("HWVQE_PURE_PYTHON", None)
    if pure_python:
        env["HWVQE_PURE_PYTHON"] = "1"
    out = subprocess.run(
        [sys.executable, "-c", _SIMULATE_SNIPPET.format(n=n, repeats=repeats)],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    backend, seconds = out.stdout.split()
    return backend, float(seconds)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[14, 16, 18, 20])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--simulate-qubits", type=int, default=18)
    args = parser.parse_args()

    if _kernels is None:
        print("compiled extension not importable; showing the fallback only\n")

    print(f"raw kernel: full pair sweep, best of {args.repeats}")
    print(f"{'qubits':>6} {'python (ms)':>12} {'cython (ms)':>12} {'speedup':>8}")
    for n in args.sizes:
        py = time_kernel(_kernels_py, n, args.repeats)
        if _kernels is None:
            print(f"{n:>6} {py * 1e3:>12.3f} {'-':>12} {'-':>8}")
            continue
        cy = time_kernel(_kernels, n, args.repeats)
        print(f"{n:>6} {py * 1e3:>12.3f} {cy * 1e3:>12.3f} {py / cy:>7.2f}x")

    n = args.simulate_qubits
    print(f"\nend-to-end: simulate(D^{n}_{n // 2}), best of {args.repeats}, per backend subprocess")
    rows = [run_simulate(n, args.repeats, pure_python=True)]
    if _kernels is not None:
        rows.append(run_simulate(n, args.repeats, pure_python=False))
    for backend, seconds in rows:
        print(f"  {backend:<8} {seconds * 1e3:>10.3f} ms")
    if len(rows) == 2:
        print(f"  speedup  {rows[0][1] / rows[1][1]:>9.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
