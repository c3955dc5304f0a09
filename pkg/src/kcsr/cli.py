"""Command-line interface: segment, synth, eval, oracle.

Exit codes: 0 success, 1 input error, 2 numerical error, 3 resource refusal.
Results go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from kcsr import data, kernels, metrics
from kcsr.dp import DEFAULT_CAP, dp_segment
from kcsr.errors import InputError, KCSRError
from kcsr.kernels import KernelSpec
from kcsr.optimizers import GDConfig, SGDConfig
from kcsr.segmenter import SegmentationRequest, kcsr_segment, mkcsr_segment, skcsr_segment

log = logging.getLogger("kcsr")

LABEL_COLUMN = "label"


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors (exit 1), not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    values = _floats(text)
    if any(v != int(v) for v in values):
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    return [int(v) for v in values]


def _sigma(text: str):
    if text == "auto":
        return text
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("sigma must be a number or 'auto'") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("sigma must be positive")
    return value


def _has_header(path: Path, delimiter: str) -> bool:
    """True when the first non-blank row is not entirely numeric."""
    try:
        with path.open(newline="") as fh:
            for row in csv.reader(fh, delimiter=delimiter):
                if row and any(c.strip() for c in row):
                    try:
                        [float(c) for c in row]
                        return False
                    except ValueError:
                        return True
    except OSError:
        return False
    return False


def load_sequence(path, label_column: Optional[str] = None, delimiter: str = ",") -> data.DataSequence:
    """Read a CSV, detecting a header row. A header column named 'label' becomes
    truth labels unless ``label_column`` names another one."""
    path = Path(path)
    header = _has_header(path, delimiter)
    if label_column is None and header:
        with path.open(newline="") as fh:
            names = [c.strip() for c in next(csv.reader(fh, delimiter=delimiter))]
        if LABEL_COLUMN in names:
            label_column = LABEL_COLUMN
    return data.read_csv_sequence(path, delimiter=delimiter, header=header, label_column=label_column)


def _kernel(args, seq: data.DataSequence) -> KernelSpec:
    if args.kernel == "linear":
        return KernelSpec("linear")
    if args.sigma == "auto":
        sigma = kernels.median_heuristic_sigma(seq)
        print(f"sigma (median heuristic): {sigma!r}", file=sys.stderr)
    else:
        sigma = args.sigma
    return KernelSpec("rbf", sigma)


def write_trace_csv(result, path) -> None:
    """Long-format CSV: series,index,value for tau, objective and full_objective."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["series", "index", "value"])
        for j, t in enumerate(result.tau, start=1):
            w.writerow(["tau", j, repr(float(t))])
        for i, v in result.objective_trace:
            w.writerow(["objective", i, repr(float(v))])
        for i, v in result.full_trace:
            w.writerow(["full_objective", i, repr(float(v))])


def cmd_segment(args) -> int:
    if args.method != "mkcsr" and len(args.input) != 1:
        raise InputError(f"method {args.method} takes exactly one --input")
    if args.method == "mkcsr" and len(args.input) < 2:
        raise InputError("mkcsr needs at least two --input files; use --method kcsr for one")
    seqs = [load_sequence(p, args.label_column) for p in args.input]
    probe = seqs[0] if len(seqs) == 1 else data.concat_sequences(seqs).combined
    spec = _kernel(args, probe)
    gd = GDConfig(epsilon=args.epsilon, max_iters=args.iters or GDConfig.max_iters)
    sgd = SGDConfig(iterations_T=args.iters, batch_b=args.batch, eta0=args.eta0, rho=args.rho,
                    momentum_mu=args.momentum, seed=args.seed)
    request = SegmentationRequest(k=args.k, kernel=spec, alpha=args.alpha, lam=args.lam,
                                  method=args.method, gd=gd, sgd=sgd)
    start = time.perf_counter()
    per_seq = None
    if args.method == "kcsr":
        result = kcsr_segment(seqs[0], request)
    elif args.method == "skcsr":
        result = skcsr_segment(seqs[0], request)
    else:
        per_seq, result = mkcsr_segment(seqs, request)
    wall = time.perf_counter() - start

    if args.output:
        data.write_result_json(result, args.output)
    if args.trace_out:
        write_trace_csv(result, args.trace_out)
    print(f"method: {result.method}")
    print(f"k: {result.k}")
    if per_seq is None:
        print("boundaries: " + " ".join(str(int(b)) for b in result.boundaries))
    else:
        for p, res in enumerate(per_seq, start=1):
            print(f"boundaries[{p}]: " + " ".join(str(int(b)) for b in res.boundaries))
    print(f"final J: {result.final_objective:.10g}")
    print(f"wall time: {wall:.3f} s")
    if result.empty_segments:
        print(f"empty segments: {sorted(set(result.empty_segments))}", file=sys.stderr)
    return 0


def cmd_synth(args) -> int:
    rng = np.random.default_rng(args.seed)
    radii = args.radii
    counts = args.counts if args.counts is not None else data.draw_circle_counts(rng, len(radii))
    if len(counts) != len(radii):
        raise InputError(f"{len(counts)} counts for {len(radii)} radii")
    seq = data.generate_circles(counts, radii=radii, noise_sd=args.noise, seed=args.seed)
    try:
        data.write_csv_sequence(seq, args.out)
    except OSError as exc:
        raise InputError(f"cannot write {args.out}: {exc.strerror}") from None
    print("counts: " + " ".join(str(int(c)) for c in counts))
    return 0


def cmd_eval(args) -> int:
    pred = data.read_result_json(args.pred)
    truth = load_sequence(args.truth, args.label_column)
    if truth.truth_labels is None:
        raise InputError(f"{args.truth}: no label column (expected a '{LABEL_COLUMN}' header or --label-column)")
    acc = metrics.accuracy(pred.labels, truth.truth_labels)
    mi = metrics.nmi(pred.labels, truth.truth_labels)
    print(f"ACC {acc:.4f} NMI {mi:.4f}")
    return 0


def cmd_oracle(args) -> int:
    seq = load_sequence(args.input, args.label_column)
    spec = _kernel(args, seq)
    if seq.n > args.cap:
        raise InputError(f"n = {seq.n} exceeds the DP oracle cap of {args.cap}")
    sol = dp_segment(kernels.build_kernel_matrix(seq, spec), args.k, cap=args.cap)
    print("boundaries: " + " ".join(str(int(b)) for b in sol.boundaries))
    print(f"cost: {sol.optimal_cost:.10g}")
    if args.output:
        doc = {"k": args.k, "kernel": {"kind": spec.kind, "sigma": float(spec.sigma)},
               "boundaries": [int(b) for b in sol.boundaries], "optimal_cost": sol.optimal_cost}
        Path(args.output).write_text(json.dumps(doc, indent=1) + "\n")
    return 0


def _kernel_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kernel", choices=("rbf", "linear"), default="rbf")
    p.add_argument("--sigma", type=_sigma, default="auto", help="RBF width, or 'auto' for the median heuristic")
    p.add_argument("--label-column", default=None,
                   help="column holding truth labels (name or index); a 'label' header is used by default")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kcsr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("segment", help="segment one sequence (kcsr/skcsr) or several (mkcsr)")
    p.add_argument("--input", action="append", required=True, help="CSV file; repeat for mkcsr")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--method", choices=("kcsr", "skcsr", "mkcsr"), default="kcsr")
    p.add_argument("--alpha", type=float, default=10.0)
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="balance weight (default: auto)")
    _kernel_flags(p)
    p.add_argument("--batch", type=int, default=SGDConfig.batch_b)
    p.add_argument("--iters", type=int, default=None, help="GD max iterations or SGD iterations T")
    p.add_argument("--eta0", type=float, default=SGDConfig.eta0)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--momentum", type=float, default=SGDConfig.momentum_mu)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=GDConfig.epsilon)
    p.add_argument("--output", help="result JSON path")
    p.add_argument("--trace-out", help="CSV of the tau curve and objective traces")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("synth", help="write a concentric-circles sequence")
    p.add_argument("--out", required=True)
    p.add_argument("--counts", type=_ints, default=None, help="points per circle (default: random in [500, 1500])")
    p.add_argument("--radii", type=_floats, default=list(data.DEFAULT_RADII))
    p.add_argument("--noise", type=float, default=data.DEFAULT_NOISE)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="ACC and NMI of a result against truth labels")
    p.add_argument("--pred", required=True, help="result JSON")
    p.add_argument("--truth", required=True, help="CSV with a label column")
    p.add_argument("--label-column", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("oracle", help="exact DP segmentation (small n)")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, required=True)
    _kernel_flags(p)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.add_argument("--output")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except KCSRError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
