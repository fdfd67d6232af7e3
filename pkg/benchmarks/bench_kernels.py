"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--d 10] [--steps 2000] [--repeat 5]

The first numba call (compilation, or loading the on-disk cache) is excluded.
"""

import argparse
import timeit

import numpy as np

from driftlasso import kernels


def cases(d, steps):
    rng = np.random.default_rng(0)
    A = rng.uniform(-2, 2, (d, d))
    M = np.eye(d) + 0.1 * rng.standard_normal((d, d))
    x0 = rng.standard_normal((1, d))
    dW = 0.1 * rng.standard_normal((1, steps, d))
    X = rng.standard_normal((steps, d))
    dX = 0.1 * rng.standard_normal((steps, d))
    p = d * d
    B = rng.standard_normal((2 * p, p))
    H = B.T @ B / p + 0.1 * np.eye(p)
    q = rng.standard_normal(p)
    thr = np.full(p, 0.5)

    def cd(fn):
        return lambda: fn(H, q, thr, np.zeros(p), 1e-10, 1000)

    return {
        "euler_linear": (lambda: kernels.euler_linear_numba(x0, M, dW, 0.01),
                         lambda: kernels.euler_linear_numpy(x0, M, dW, 0.01)),
        "euler_sinequad": (lambda: kernels.euler_sinequad_numba(x0, A, dW, 0.01),
                           lambda: kernels.euler_sinequad_numpy(x0, A, dW, 0.01)),
        "sinequad_loss": (lambda: kernels.sinequad_loss_numba(A, X, dX, 0.01),
                          lambda: kernels.sinequad_loss_numpy(A, X, dX, 0.01)),
        "sinequad_loss_grad": (lambda: kernels.sinequad_loss_grad_numba(A, X, dX, 0.01),
                               lambda: kernels.sinequad_loss_grad_numpy(A, X, dX, 0.01)),
        "sinequad_loss_grad_hess": (lambda: kernels.sinequad_loss_grad_hess_numba(A, X, dX, 0.01),
                                    lambda: kernels.sinequad_loss_grad_hess_numpy(A, X, dX, 0.01)),
        "quad_lasso_cd": (cd(kernels.quad_lasso_cd_numba), cd(kernels.quad_lasso_cd_numpy)),
    }


def best_time(fn, repeat):
    number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-6)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=10)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rows = []
    print(f"{'kernel':<26}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, (fast, slow) in cases(args.d, args.steps).items():
        fast()  # compile or load from cache
        tn, tp = best_time(fast, args.repeat), best_time(slow, args.repeat)
        rows.append((name, tn, tp))
        print(f"{name:<26}{tn * 1e3:>12.3f}{tp * 1e3:>12.3f}{tp / tn:>9.1f}x")
    return rows


if __name__ == "__main__":
    main()
