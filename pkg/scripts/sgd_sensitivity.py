"""SKCSR accuracy on the circles sequence across initial steps and batch sizes."""

import argparse

import numpy as np

from kcsr.data import draw_circle_counts, generate_circles
from kcsr.metrics import accuracy
from kcsr.optimizers import SGDConfig
from kcsr.segmenter import SegmentationRequest, skcsr_segment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eta0", type=float, nargs="+", default=[1.0, 2.0, 3.0, 5.0])
    ap.add_argument("--batch", type=int, nargs="+", default=[128, 256])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--seed-offset", type=int, default=0, help="added to the SGD seed only")
    args = ap.parse_args()

    data = []
    for seed in range(args.seeds):
        rng = np.random.default_rng(seed)
        data.append(generate_circles(draw_circle_counts(rng, 4, 125, 375), seed=seed))
    for b in args.batch:
        for eta0 in args.eta0:
            accs = []
            for seed, X in enumerate(data):
                cfg = SGDConfig(batch_b=b, eta0=eta0, seed=seed + args.seed_offset)
                res = skcsr_segment(X, SegmentationRequest(k=4, method="skcsr", sgd=cfg))
                accs.append(accuracy(res.labels, X.truth_labels))
            print(f"b={b:4d} eta0={eta0:4.1f}  ACC mean {np.mean(accs):.4f} min {np.min(accs):.4f}")


if __name__ == "__main__":
    main()
