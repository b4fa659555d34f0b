"""Time the numba kernels against their numpy fallbacks, plus whole runs.

    python benchmarks/bench_kernels.py [--repeat N]

The whole-run rows are measured in child processes so that
MZMBIAS_DISABLE_NUMBA takes effect at import time.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from mzmbias import _kernels


def best(fn, repeat):
    fn()  # warm-up (JIT compile on first call)
    return min(timeit.repeat(fn, number=1, repeat=repeat))


RUN_SNIPPET = """
import time, dataclasses as dc
from mzmbias import scenario as sc
from mzmbias.sim import run
s = sc.load(sc.builtin_path("two_plateaus"))
for open_loop in (True, False):
    sim = dc.replace(s.sim, open_loop=open_loop)
    run(s.drift, s.mzm, s.chain, s.controller, sim)
    t = time.perf_counter()
    run(s.drift, s.mzm, s.chain, s.controller, sim)
    print(time.perf_counter() - t)
"""


def whole_runs(disable: bool):
    env = dict(os.environ)
    env.pop("MZMBIAS_DISABLE_NUMBA", None)
    if disable:
        env["MZMBIAS_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", RUN_SNIPPET], env=env, capture_output=True,
                         text=True, check=True).stdout.split()
    return float(out[0]), float(out[1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=7)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        sys.exit("numba is not available (or MZMBIAS_DISABLE_NUMBA is set); nothing to compare")

    rng = np.random.default_rng(0)
    z = rng.standard_normal(1024)
    theta = rng.uniform(0, 2 * np.pi, 36_001)
    rows = [
        ("adc code sum, 1024 samples",
         lambda: _kernels.quantized_code_sum(0.7, z, 4e-5, 2.5 / 65535, 65535.0),
         lambda: _kernels.quantized_code_sum_numpy(0.7, z, 4e-5, 2.5 / 65535, 65535.0)),
        ("window means, 1 h at 10 Hz",
         lambda: _kernels.transmission_window_means(theta, 2.8, 0.98, 600),
         lambda: _kernels.transmission_window_means_numpy(theta, 2.8, 0.98, 600)),
    ]
    print(f"{'kernel':32s} {'numba':>12s} {'numpy':>12s} {'speedup':>8s}")
    for name, jit, plain in rows:
        a, b = best(jit, args.repeat), best(plain, args.repeat)
        print(f"{name:32s} {a * 1e6:10.1f}us {b * 1e6:10.1f}us {b / a:7.1f}x")

    jit_open, jit_closed = whole_runs(False)
    np_open, np_closed = whole_runs(True)
    print(f"{'1 h open-loop run':32s} {jit_open * 1e3:10.1f}ms {np_open * 1e3:10.1f}ms {np_open / jit_open:7.1f}x")
    print(f"{'1 h closed-loop run':32s} {jit_closed * 1e3:10.1f}ms {np_closed * 1e3:10.1f}ms "
          f"{np_closed / jit_closed:7.1f}x")


if __name__ == "__main__":
    main()
