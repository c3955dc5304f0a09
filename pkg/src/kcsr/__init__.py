"""Kernel clustering with sigmoid-based regularization for sequence segmentation."""

from kcsr.data import DataSequence, MultiSequence, concat_sequences, generate_circles
from kcsr.dp import dp_segment
from kcsr.errors import InputError, NumericalError, ResourceError
from kcsr.kernels import KernelSpec, build_kernel_matrix, median_heuristic_sigma
from kcsr.metrics import accuracy, nmi
from kcsr.segmenter import (
    SegmentationRequest,
    SegmentationResult,
    kcsr_segment,
    labels_from_tau,
    mkcsr_segment,
    skcsr_segment,
)

__all__ = [
    "DataSequence",
    "MultiSequence",
    "concat_sequences",
    "generate_circles",
    "dp_segment",
    "InputError",
    "NumericalError",
    "ResourceError",
    "KernelSpec",
    "build_kernel_matrix",
    "median_heuristic_sigma",
    "accuracy",
    "nmi",
    "SegmentationRequest",
    "SegmentationResult",
    "kcsr_segment",
    "labels_from_tau",
    "mkcsr_segment",
    "skcsr_segment",
]
