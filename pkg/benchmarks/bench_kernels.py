"""Benchmark the numba kernels against the pure-numpy fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py

Covers the two hot loops: lasso coordinate descent and exhaustive k-NN
prediction.  The first numba call includes JIT compilation, so each kernel
is warmed once before timing.
"""

from __future__ import annotations

import time

import numpy as np

from aspectra._kernels import (
    HAS_NUMBA,
    knn_predict_numba,
    knn_predict_numpy,
    lasso_cd_numba,
    lasso_cd_numpy,
)


def _time(fn, *args, repeat: int = 5) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _solve_many(solver, X, y, lams):
    for lam in lams:
        solver(X, y, lam)


def bench_lasso(rng) -> None:
    # shaped like a real explanation: binary N x m flag design, and the
    # bisection for lambda re-solves the same problem ~40 times
    n, m, solves = 2000, 10, 40
    kl = rng.integers(0, m, size=(n, 2))
    X = np.zeros((n, m))
    X[np.arange(n), kl[:, 0]] = 1.0
    X[np.arange(n), kl[:, 1]] = 1.0
    w_true = rng.standard_normal(m)
    y = X @ w_true + 0.1 * rng.standard_normal(n)
    lam_max = float(np.max(np.abs(X.T @ y)) / n)
    lams = np.linspace(0.0, lam_max, solves)

    t_np = _time(_solve_many, lasso_cd_numpy, X, y, lams)
    print(f"lasso_cd    numpy  n={n} m={m} x{solves} solves: {t_np * 1e3:8.2f} ms")
    if HAS_NUMBA:
        lasso_cd_numba(X, y, 0.01)  # warm the JIT cache
        t_nb = _time(_solve_many, lasso_cd_numba, X, y, lams)
        print(f"lasso_cd    numba  n={n} m={m} x{solves} solves: {t_nb * 1e3:8.2f} ms"
              f"   ({t_np / t_nb:.1f}x)")
        w_np, _ = lasso_cd_numpy(X, y, 0.01)
        w_nb, _ = lasso_cd_numba(X, y, 0.01)
        assert np.allclose(w_np, w_nb, atol=1e-8), "backends disagree"


def bench_knn(rng) -> None:
    # shaped like delta_predictions on a knn model: small training set,
    # one big batch of modified rows to score
    n_train, n_query, p, k = 400, 20_000, 6, 10
    train = rng.standard_normal((n_train, p))
    y = rng.standard_normal(n_train)
    query = rng.standard_normal((n_query, p))

    t_np = _time(knn_predict_numpy, train, y, query, k)
    print(f"knn_predict numpy  train={n_train} query={n_query} k={k}: {t_np * 1e3:8.2f} ms")
    if HAS_NUMBA:
        knn_predict_numba(train, y, query, k)  # warm the JIT cache
        t_nb = _time(knn_predict_numba, train, y, query, k)
        print(f"knn_predict numba  train={n_train} query={n_query} k={k}: {t_nb * 1e3:8.2f} ms"
              f"   ({t_np / t_nb:.1f}x)")
        assert np.allclose(knn_predict_numpy(train, y, query, k),
                           knn_predict_numba(train, y, query, k)), "backends disagree"


def main() -> None:
    if not HAS_NUMBA:
        print("numba not importable; numpy fallback only")
    rng = np.random.default_rng(7)
    bench_lasso(rng)
    bench_knn(rng)


if __name__ == "__main__":
    main()
