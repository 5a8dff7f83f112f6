"""Time the jitted and the numpy implementation of every inner-loop kernel.

Run with ``python3 benchmarks/bench_kernels.py [--n 2500] [--repeat 5]``.
Inputs match the arm experiment: 2500 observations, 3-D actions, 100 basis
functions. The first jitted call (compilation) is excluded from the timings.
"""
import argparse
import timeit

import numpy as np

from nsplearn import kernels


def make_inputs(n, U=3, nf=100, seed=0):
    rng = np.random.default_rng(seed)
    F = rng.random((n, nf))
    F /= F.sum(axis=1, keepdims=True)
    A = rng.normal(size=(n, 2, U))
    prev = np.zeros((n, 1, U))
    prev[:, 0, 0] = 1.0
    theta = rng.uniform(0.1, 3.0, size=(n, U - 1))
    return {
        "rowspace_project": (A, rng.normal(size=(n, U)), 1e-10),
        "rowspace_projectors": (A, 1e-10),
        "ns_residuals": (F, rng.normal(size=(n, U)), rng.normal(size=(U, nf)), 1e-8),
        "ns_jacobian": (F, rng.normal(size=(n, U)), rng.normal(size=(U, nf)), 1e-8),
        "spherical": (theta,),
        "spherical_jac": (theta,),
        "state_rows": (theta, prev, 1e-8),
        "state_row_terms": (theta, prev, rng.normal(size=(n, U)), 1e-8),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=2500, help="number of observations")
    parser.add_argument("--repeat", type=int, default=5, help="timing repeats (best is reported)")
    args = parser.parse_args()
    inputs = make_inputs(args.n)
    print(f"{'kernel':22s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for name, (nb, plain) in kernels.IMPLEMENTATIONS.items():
        call_args = inputs[name]
        nb(*call_args)  # compile
        t_nb = min(timeit.repeat(lambda: nb(*call_args), number=1, repeat=args.repeat))
        t_np = min(timeit.repeat(lambda: plain(*call_args), number=1, repeat=args.repeat))
        print(f"{name:22s} {1e3 * t_nb:10.3f} {1e3 * t_np:10.3f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
