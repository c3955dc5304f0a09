"""Sequences, synthetic generators, CSV input and result JSON output."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from kcsr.errors import InputError

log = logging.getLogger(__name__)

REFERENCE_CIRCLE_COUNTS = (832, 1018, 1174, 843)
DEFAULT_RADII = (1.0, 2.0, 3.0, 4.0)
DEFAULT_NOISE = 0.1


@dataclass
class DataSequence:
    """Time-ordered samples, one row per time step (n x d)."""

    samples: np.ndarray
    truth_labels: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim == 1:
            samples = samples[:, None]
        if samples.ndim != 2 or samples.shape[0] < 1:
            raise InputError(f"samples must be a non-empty n x d array, got shape {samples.shape}")
        self.samples = samples
        if self.truth_labels is not None:
            labels = np.asarray(self.truth_labels)
            if labels.shape != (samples.shape[0],):
                raise InputError(
                    f"{labels.size} labels for {samples.shape[0]} samples"
                )
            self.truth_labels = labels.astype(np.int64)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def d(self) -> int:
        return self.samples.shape[1]


@dataclass
class MultiSequence:
    blocks: list[DataSequence]
    lengths: list[int] = field(init=False)
    combined: DataSequence = field(init=False)

    def __post_init__(self):
        if not self.blocks:
            raise InputError("need at least one sequence")
        dims = {b.d for b in self.blocks}
        if len(dims) != 1:
            raise InputError(f"feature dimensions differ across sequences: {sorted(dims)}")
        self.lengths = [b.n for b in self.blocks]
        labels = [b.truth_labels for b in self.blocks]
        if all(lab is not None for lab in labels):
            truth = np.concatenate(labels)
        else:
            if any(lab is not None for lab in labels):
                log.warning("only some sequences carry truth labels; dropping all labels")
            truth = None
        self.combined = DataSequence(
            np.vstack([b.samples for b in self.blocks]),
            truth,
            "+".join(b.name for b in self.blocks),
        )

    @property
    def m(self) -> int:
        return len(self.blocks)

    @property
    def junctions(self) -> list[int]:
        """0-based start of every block after the first."""
        return list(np.cumsum(self.lengths)[:-1])


def concat_sequences(blocks: Sequence[DataSequence]) -> MultiSequence:
    return MultiSequence(list(blocks))


def generate_circles(
    counts: Sequence[int],
    radii: Sequence[float] = DEFAULT_RADII,
    noise_sd: float = DEFAULT_NOISE,
    seed: int = 0,
) -> DataSequence:
    """Concentric 2-d circles, each circle a contiguous run of the sequence."""
    if len(counts) != len(radii):
        raise InputError("counts and radii must have the same length")
    if any(int(c) < 1 for c in counts):
        raise InputError("every count must be >= 1")
    if noise_sd < 0:
        raise InputError("noise_sd must be non-negative")
    rng = np.random.default_rng(seed)
    parts, labels = [], []
    for c, (count, radius) in enumerate(zip(counts, radii), start=1):
        theta = rng.uniform(0.0, 2 * np.pi, size=int(count))
        r = radius + rng.normal(0.0, noise_sd, size=int(count)) if noise_sd > 0 else np.full(int(count), float(radius))
        parts.append(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))
        labels.append(np.full(int(count), c))
    return DataSequence(np.vstack(parts), np.concatenate(labels), "circles")


def draw_circle_counts(rng: np.random.Generator, n_circles: int = 4, low: int = 500, high: int = 1500) -> list[int]:
    """Distinct counts drawn uniformly from [low, high]."""
    if high - low + 1 < n_circles:
        raise InputError("range too small for distinct counts")
    return [int(c) for c in rng.choice(np.arange(low, high + 1), size=n_circles, replace=False)]


def generate_gaussian_segments(
    counts: Sequence[int],
    dim: int = 2,
    separation: float = 5.0,
    noise_sd: float = 1.0,
    seed: int = 0,
) -> DataSequence:
    """Piecewise-constant mean plus Gaussian noise; consecutive means differ by ``separation``."""
    rng = np.random.default_rng(seed)
    means = [np.zeros(dim)]
    for _ in range(len(counts) - 1):
        step = rng.normal(size=dim)
        means.append(means[-1] + separation * step / np.linalg.norm(step))
    parts, labels = [], []
    for c, (count, mu) in enumerate(zip(counts, means), start=1):
        parts.append(mu + noise_sd * rng.normal(size=(int(count), dim)))
        labels.append(np.full(int(count), c))
    return DataSequence(np.vstack(parts), np.concatenate(labels), "gaussian")


def read_csv_sequence(
    path: Union[str, Path],
    delimiter: str = ",",
    header: bool = False,
    label_column: Union[int, str, None] = None,
) -> DataSequence:
    """Rows are time steps, columns are features.

    ``label_column`` (index or header name) is split off as integer truth labels.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"{path}: no such file")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r and any(c.strip() for c in r)]
    names = None
    if header:
        if not rows:
            raise InputError(f"{path}: header requested but file is empty")
        names, rows = [c.strip() for c in rows[0]], rows[1:]
    if not rows:
        raise InputError(f"{path}: no data rows")
    width = len(rows[0])
    first_line = 2 if header else 1
    for i, r in enumerate(rows):
        if len(r) != width:
            raise InputError(f"{path}: row {i + first_line} has {len(r)} columns, expected {width}")

    label_idx = None
    if label_column is not None:
        if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
            if names is None or label_column not in names:
                raise InputError(f"{path}: no column named {label_column!r}")
            label_idx = names.index(label_column)
        else:
            label_idx = int(label_column)
            if label_idx < 0:
                label_idx += width
            if not 0 <= label_idx < width:
                raise InputError(f"{path}: label column {label_column} out of range")

    values = np.empty((len(rows), width))
    for i, r in enumerate(rows):
        for c, cell in enumerate(r):
            try:
                values[i, c] = float(cell.strip())
            except ValueError:
                raise InputError(
                    f"{path}: non-numeric cell {cell!r} at row {i + first_line}, column {c + 1}"
                ) from None
    labels = None
    if label_idx is not None:
        col = values[:, label_idx]
        if not np.all(col == np.round(col)):
            raise InputError(f"{path}: label column holds non-integer values")
        labels = col.astype(np.int64)
        values = np.delete(values, label_idx, axis=1)
        if values.shape[1] == 0:
            raise InputError(f"{path}: no feature columns besides the label column")
    return DataSequence(values, labels, path.stem)


def write_csv_sequence(seq: DataSequence, path: Union[str, Path], with_labels: bool = True) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        header = [f"x{c}" for c in range(seq.d)]
        if with_labels and seq.truth_labels is not None:
            header.append("label")
        w.writerow(header)
        for j in range(seq.n):
            row = [repr(float(v)) for v in seq.samples[j]]
            if with_labels and seq.truth_labels is not None:
                row.append(str(int(seq.truth_labels[j])))
            w.writerow(row)


RESULT_FIELDS = (
    "method", "k", "alpha", "lambda", "kernel", "betas", "tau", "labels",
    "boundaries", "objective_trace", "seed", "block_lengths",
)


def result_to_dict(result) -> dict:
    return {
        "method": result.method,
        "k": int(result.k),
        "alpha": float(result.alpha),
        "lambda": float(result.lam),
        "kernel": {"kind": result.kernel.kind, "sigma": float(result.kernel.sigma)},
        "betas": [float(b) for b in result.betas],
        "tau": [float(t) for t in result.tau],
        "labels": [int(v) for v in result.labels],
        "boundaries": [int(b) for b in result.boundaries],
        "objective_trace": [[int(i), float(v)] for i, v in result.objective_trace],
        "seed": None if result.seed is None else int(result.seed),
        "block_lengths": None if result.block_lengths is None else [int(v) for v in result.block_lengths],
    }


def write_result_json(result, path: Union[str, Path]) -> None:
    """Floats go through ``repr``-exact JSON, so a read back is lossless."""
    Path(path).write_text(json.dumps(result_to_dict(result), indent=1) + "\n")


def read_result_json(path: Union[str, Path]):
    from kcsr.kernels import KernelSpec
    from kcsr.segmenter import SegmentationResult

    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    missing = [f for f in RESULT_FIELDS if f not in doc]
    if missing:
        raise InputError(f"{path}: missing fields {missing}")
    return SegmentationResult(
        method=doc["method"],
        k=doc["k"],
        alpha=doc["alpha"],
        lam=doc["lambda"],
        kernel=KernelSpec(doc["kernel"]["kind"], doc["kernel"]["sigma"]),
        betas=np.array(doc["betas"], dtype=np.float64),
        tau=np.array(doc["tau"], dtype=np.float64),
        labels=np.array(doc["labels"], dtype=np.int64),
        boundaries=np.array(doc["boundaries"], dtype=np.int64),
        objective_trace=[(int(i), float(v)) for i, v in doc["objective_trace"]],
        seed=doc["seed"],
        block_lengths=doc["block_lengths"],
    )
