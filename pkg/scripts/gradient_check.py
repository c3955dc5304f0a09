"""Analytic gradient vs central differences on random configurations."""

import argparse

import numpy as np

from kcsr.kernels import KernelSpec, build_kernel_matrix
from kcsr.objective import ObjectiveParams, finite_diff_grad, grad_wrt_gamma


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", type=int, default=100)
    ap.add_argument("--h", type=float, default=1e-6)
    args = ap.parse_args()

    errs = []
    for cfg in range(args.configs):
        r = np.random.default_rng(cfg)
        n, k = int(r.integers(20, 81)), int(r.integers(2, 6))
        lam = (0.0, 0.01)[cfg % 2]
        K = build_kernel_matrix(r.normal(size=(n, 2)), KernelSpec("rbf", 1.0))
        params = ObjectiveParams(lam, 10.0, k, n)
        gamma = r.normal(size=k)
        g = grad_wrt_gamma(gamma, K, params).grad_gamma
        fd = finite_diff_grad(gamma, K, params, h=args.h)
        errs.append(np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-300))
    errs = np.array(errs)
    print(f"relative error: median {np.median(errs):.2e}  max {errs.max():.2e}")
    for q in (1e-8, 1e-6, 1e-4):
        print(f"  below {q:.0e}: {np.sum(errs < q)}/{errs.size}")


if __name__ == "__main__":
    main()
