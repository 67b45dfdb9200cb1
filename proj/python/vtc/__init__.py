from ._vtc import (
    VtcError,
    compress,
    cosine_matrix,
    flops,
    minmax_normalize,
    oracle_check,
    pairwise_sq_euclidean,
    schedule_from_pipeline,
    softmax_rows,
    synth_video,
    text_merge,
)

__all__ = [
    "VtcError",
    "compress",
    "cosine_matrix",
    "flops",
    "minmax_normalize",
    "oracle_check",
    "pairwise_sq_euclidean",
    "schedule_from_pipeline",
    "softmax_rows",
    "synth_video",
    "text_merge",
]
