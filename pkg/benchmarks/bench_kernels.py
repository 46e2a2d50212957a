"""Kernel backend benchmark: numpy reference vs numba JIT.

Times the two hot loss/gradient kernels under both backends and prints a
table with speedups.  JIT compilation happens in an untimed warmup pass, so
the numbers reflect steady-state throughput.  Run with ``--quick`` for a
fast sanity pass.

    python3 benchmarks/bench_kernels.py [--quick]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from fedmeld.flcore._backend import HAVE_NUMBA, kernels, set_backend


def make_case(n: int, d: int, labels: int, hidden: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    y = rng.integers(0, labels, size=n).astype(np.int64)
    w_log = rng.standard_normal(labels * (d + 1)) * 0.1
    w_mlp = rng.standard_normal(hidden * d + hidden + labels * hidden + labels) * 0.1
    return X, y, w_log, w_mlp


def time_call(fn, repeats: int) -> float:
    """Best-of-repeats mean time per call, in seconds."""
    t0 = time.perf_counter()
    fn()
    est = time.perf_counter() - t0
    inner = max(1, int(0.02 / max(est, 1e-7)))  # ~20 ms per timing loop
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def bench(quick: bool) -> None:
    if not HAVE_NUMBA:
        print("numba is not installed; only the numpy backend is available.")
        print("Install the 'numba' extra to compare backends.")
        return
    # the simulator's hot path is minibatch gradients (batch 64 by default);
    # the larger rows show where BLAS-backed numpy catches back up
    sizes = [(64, 8, 3, 16), (256, 16, 3, 16)]
    if not quick:
        sizes += [(2048, 32, 5, 32), (8192, 64, 10, 64)]
    repeats = 3 if quick else 5

    rows = []
    for n, d, labels, hidden in sizes:
        X, y, w_log, w_mlp = make_case(n, d, labels, hidden)
        case = {}
        outs = {}
        for backend in ("numpy", "numba"):
            set_backend(backend)
            k = kernels()
            log_call = lambda: k.logistic_loss_grad(w_log, X, y, labels, 1e-3)
            mlp_call = lambda: k.mlp_loss_grad(w_mlp, X, y, hidden, labels, 1e-3)
            outs[backend] = (log_call(), mlp_call())  # warmup; compiles under numba
            case[backend] = (
                time_call(log_call, repeats),
                time_call(mlp_call, repeats),
            )
        set_backend(None)
        for (l_ref, g_ref), (l_jit, g_jit) in zip(outs["numpy"], outs["numba"]):
            np.testing.assert_allclose(l_jit, l_ref, rtol=1e-10)
            np.testing.assert_allclose(g_jit, g_ref, rtol=1e-9, atol=1e-12)
        ref_log, ref_mlp = case["numpy"]
        jit_log, jit_mlp = case["numba"]
        shape = f"{n}x{d} c{labels}"
        rows.append(("logistic", shape, ref_log, jit_log))
        rows.append((f"mlp h{hidden}", shape, ref_mlp, jit_mlp))

    header = f"{'kernel':<12} {'size':<14} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, shape, ref, jit in rows:
        print(f"{name:<12} {shape:<14} {ref * 1e3:>10.3f} {jit * 1e3:>10.3f} {ref / jit:>7.2f}x")
    print()
    print("numba wins on minibatch-sized calls; BLAS catches up on large full-batch")
    print("evaluations, so FEDMELD_BACKEND=numpy is the better choice there.")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--quick", action="store_true", help="small sizes, few repeats")
    bench(parser.parse_args().quick)
