"""Embedding retrieval with calibrated relevance filtering.

Thin wrapper over the C++ core: exact top-K search, the monotone cosine
adapter, recall-targeted threshold calibration, and the evaluation
metrics.
"""

from ._calret import (
    AdapterNetwork,
    AdapterParams,
    ThresholdCalibration,
    TransformKind,
    VectorIndex,
    bce_loss,
    calibrate_threshold,
    cosine,
    generate_synthetic,
    mrr_at_k,
    normalize,
    pr_auc,
    read_embeddings,
    sigmoid,
    train_adapter,
    transform,
    transform_kind_from_name,
    write_embeddings,
)

__all__ = [
    "AdapterNetwork",
    "AdapterParams",
    "ThresholdCalibration",
    "TransformKind",
    "VectorIndex",
    "bce_loss",
    "calibrate_threshold",
    "cosine",
    "generate_synthetic",
    "mrr_at_k",
    "normalize",
    "pr_auc",
    "read_embeddings",
    "sigmoid",
    "train_adapter",
    "transform",
    "transform_kind_from_name",
    "write_embeddings",
]
