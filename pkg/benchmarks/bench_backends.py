"""Compare the compiled kernels with the pure-Python fallback.

Usage::

    python3 benchmarks/bench_backends.py [--repeat 5] [--json out.json]

Each hot kernel is timed in both backends with :mod:`timeit` (best of
``--repeat``).  The end-to-end rows evaluate the heat kernel in a fresh
interpreter per backend, selected with ``CONEKERNEL_BACKEND``.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from conekernel import _backend

END_TO_END = """
import json, math, time
import numpy as np
from conekernel import ConePoint, HeatKernelEvaluator, SphereSection, CircleSection
rng = np.random.default_rng(0)
out = {}
cases = (("sphere n=3 a=-1/8", SphereSection(3, -0.125)), ("circle L=3pi a=1", CircleSection(3 * math.pi, 1.0)))
for label, section in cases:
    ev = HeatKernelEvaluator(section, tol=1e-10)
    pts = []
    for _ in range(200):
        y, y2 = section.points_at_distance(rng.uniform(0, section.diameter))
        pts.append((rng.uniform(0.1, 2.0), ConePoint(rng.uniform(0.1, 2.0), y), ConePoint(rng.uniform(0.1, 2.0), y2)))
    ev.evaluate(*pts[0])
    start = time.perf_counter()
    for p in pts:
        ev.evaluate(*p)
    out[label] = (time.perf_counter() - start) / len(pts)
print(json.dumps(out))
"""


def kernel_cases():
    rng = np.random.default_rng(1)
    xs = np.linspace(0.1, 60.0, 2000)
    mus = np.sqrt(0.125 + np.arange(200.0) ** 2)
    sym = rng.normal(size=(128, 128))
    sym = sym + sym.T
    n = 800
    lower, upper = -np.ones(n), -np.ones(n)
    diag = 2.5 * np.ones(n)
    rhs = rng.normal(size=(129, n))
    return {
        "log_gamma_many (2000 args)": lambda k: k.log_gamma_many(xs),
        "log_bessel_i_many (200 orders, z=7.5)": lambda k: k.log_bessel_i_many(mus, 7.5),
        "log_bessel_i_many (200 orders, z=40)": lambda k: k.log_bessel_i_many(mus, 40.0),
        "jacobi_eigh (128 x 128)": lambda k: k.jacobi_eigh(sym),
        "tridiag_solve (129 systems of 800)": lambda k: k.tridiag_solve(lower, diag, upper, rhs),
    }


def best_time(fn, repeat: int) -> float:
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def end_to_end(backend: str) -> dict:
    env = dict(os.environ, CONEKERNEL_BACKEND=backend)
    proc = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5, help="timing repeats, best is kept")
    parser.add_argument("--json", help="also write the results to this file")
    args = parser.parse_args(argv)

    backends = _backend.available()
    if "compiled" not in backends:
        print("compiled extension not built; timing the python backend only", file=sys.stderr)
    modules = {name: _backend.load(name) for name in backends}
    rows = []
    for label, call in kernel_cases().items():
        times = {name: best_time(lambda m=mod: call(m), args.repeat) for name, mod in modules.items()}
        rows.append((label, times))
    per_backend = {name: end_to_end(name) for name in backends}
    for label in next(iter(per_backend.values())):
        rows.append((f"evaluate, {label}", {name: per_backend[name][label] for name in backends}))

    width = max(len(label) for label, _ in rows)
    header = f"{'case':<{width}}  " + "  ".join(f"{name:>12}" for name in backends)
    if len(backends) == 2:
        header += f"  {'speedup':>8}"
    print(header)
    for label, times in rows:
        line = f"{label:<{width}}  " + "  ".join(f"{times[name] * 1e6:>10.1f}us" for name in backends)
        if len(backends) == 2:
            line += f"  {times['python'] / times['compiled']:>7.1f}x"
        print(line)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({label: times for label, times in rows}, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
