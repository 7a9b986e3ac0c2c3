"""Compare the numba kernels with the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 200] [--fit-n 2000]

Kernel timings call both backends in-process. The end-to-end fit runs the CLI
in a subprocess per backend, selected with ONLINECVXMF_BACKEND.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from onlinecvxmf._kernels import NUMBA_AVAILABLE, numba_kernels, numpy_kernels


def _best_of(fn, repeat):
    fn()  # warm-up (compilation for numba)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_cases(rng):
    m, k, N, n = 10, 5, 30, 500
    D = rng.normal(size=(m, k))
    X = rng.normal(size=(m, n))
    Xhat = rng.normal(size=(m, N))
    x = rng.normal(size=m)
    c = rng.normal(size=m)
    w0 = np.full(N, 1.0 / N)
    G, r = D.T @ D, D.T @ x
    v = rng.normal(size=N)
    return {
        "project_simplex(N=30)": lambda K: K.project_simplex(v),
        "lasso_cd(k=5)": lambda K: K.lasso_cd(G, r, 0.06, 1e-6, np.zeros(k), 1e-8, 1000),
        "lasso_cd_many(n=500)": lambda K: K.lasso_cd_many(D, X, 0.06, 1e-6, 1e-8, 1000),
        "column_pg(N=30)": lambda K: K.column_pg(Xhat, c, 1.0, w0, 1e-9, 500),
        "best_candidate(N=30)": lambda K: K.best_candidate(Xhat, x, c, 1.0, w0, 1e-9, 500),
    }


def run_fit(backend, data, n_steps):
    env = dict(os.environ, ONLINECVXMF_BACKEND=backend)
    cmd = [sys.executable, "-m", "onlinecvxmf", "fit", "--in", str(data), "--k", "5",
           "--iters", str(n_steps), "--quiet"]
    t0 = time.perf_counter()
    subprocess.run(cmd, env=env, check=True)
    return time.perf_counter() - t0


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--fit-n", type=int, default=2000, help="dataset size for the end-to-end fit")
    ap.add_argument("--skip-fit", action="store_true")
    args = ap.parse_args(argv)
    if not NUMBA_AVAILABLE:
        print("numba is not importable; nothing to compare")
        return 1

    rng = np.random.default_rng(0)
    print(f"{'kernel':<24}{'numpy [us]':>12}{'numba [us]':>12}{'speedup':>10}")
    for name, fn in kernel_cases(rng).items():
        t_np = _best_of(lambda: fn(numpy_kernels), args.repeat)
        t_nb = _best_of(lambda: fn(numba_kernels), args.repeat)
        print(f"{name:<24}{t_np * 1e6:>12.1f}{t_nb * 1e6:>12.1f}{t_np / t_nb:>10.1f}")

    if not args.skip_fit:
        with tempfile.TemporaryDirectory() as tmp:
            data = Path(tmp) / "bench.csv"
            subprocess.run([sys.executable, "-m", "onlinecvxmf", "gen", "--k", "5", "--m", "10",
                            "--n", str(args.fit_n), "--seed", "0", "--out", str(data)], check=True)
            steps = args.fit_n - 150
            # numba first so its on-disk cache is warm for later runs
            t_nb = run_fit("numba", data, steps)
            t_np = run_fit("numpy", data, steps)
            print(f"\nend-to-end online fit, {steps} steps (process wall time incl. imports)")
            print(f"  numpy {t_np:8.2f} s   numba {t_nb:8.2f} s   speedup {t_np / t_nb:5.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
