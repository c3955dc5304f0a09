"""KCSR and SKCSR on the concentric-circles sequence, averaged over seeds.

    python scripts/reproduce_circles.py --seeds 5 --low 125 --high 375
    python scripts/reproduce_circles.py --low 500 --high 1500      # full size
"""

import argparse
import time

import numpy as np

from kcsr.data import draw_circle_counts, generate_circles
from kcsr.kernels import KernelSpec, median_heuristic_sigma
from kcsr.metrics import accuracy, nmi
from kcsr.optimizers import SGDConfig
from kcsr.segmenter import SegmentationRequest, kcsr_segment, skcsr_segment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--low", type=int, default=125)
    ap.add_argument("--high", type=int, default=375)
    ap.add_argument("--batch", type=int, default=256)
    ap.add_argument("--eta0", type=float, default=3.0)
    ap.add_argument("--sigma-scale", type=float, default=1.0, help="multiplies the median-heuristic sigma")
    args = ap.parse_args()

    rows = {"KCSR": [], "SKCSR": []}
    for seed in range(args.seeds):
        rng = np.random.default_rng(seed)
        X = generate_circles(draw_circle_counts(rng, 4, args.low, args.high), seed=seed)
        spec = KernelSpec("rbf", args.sigma_scale * median_heuristic_sigma(X))
        t0 = time.perf_counter()
        a = kcsr_segment(X, SegmentationRequest(k=4, kernel=spec))
        t1 = time.perf_counter()
        b = skcsr_segment(X, SegmentationRequest(
            k=4, kernel=spec, method="skcsr", sgd=SGDConfig(batch_b=args.batch, eta0=args.eta0, seed=seed)))
        t2 = time.perf_counter()
        for name, res, dt in (("KCSR", a, t1 - t0), ("SKCSR", b, t2 - t1)):
            acc, mi = accuracy(res.labels, X.truth_labels), nmi(res.labels, X.truth_labels)
            rows[name].append((acc, mi))
            print(f"seed {seed} n={X.n:5d} {name:5s} ACC {acc:.4f} NMI {mi:.4f} {dt:6.2f} s")
    for name, vals in rows.items():
        v = np.array(vals)
        print(f"{name:5s} ACC {v[:, 0].mean():.4f} ({v[:, 0].std():.4f})  NMI {v[:, 1].mean():.4f} ({v[:, 1].std():.4f})")


if __name__ == "__main__":
    main()
