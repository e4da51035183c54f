"""Signature features for ordinal mood time series.

Windows of 7-point mood reports become 7-dimensional normalized paths (time
plus six categories); truncated path signatures of those windows feed linear
models that classify clinical cohort and predict the next report.
"""
from moodsig.cohorts import (
    Cohort,
    CohortParams,
    DatasetSplit,
    ParticipantRecord,
    SynthConfig,
    generate_synthetic,
    load_csv,
    split,
    write_csv,
)
from moodsig.metrics import (
    BootstrapResult,
    ClassMetrics,
    PairwiseResult,
    TraceRow,
    TrianglePoint,
    bootstrap,
    class_metrics,
    confusion,
    correct_rate,
    correct_within_one,
    evaluation_report,
    mae,
    pairwise_eval,
    prediction_trace,
    roc_auc,
    triangle,
)
from moodsig.models import (
    CohortClassifier,
    MoodRegressor,
    load_model,
    mean_baseline_features,
    persistence_predict,
    save_model,
)
from moodsig.streams import (
    MoodReport,
    NormalizedPath,
    SignatureFeatures,
    StreamWindow,
    corpus_windows,
    featurize,
    featurize_windows,
    normalize,
    prediction_pairs,
    window_streams,
)
from moodsig.tensors import (
    TruncatedTensor,
    feature_vector,
    path_signature,
    shuffle_product,
    signature_feature_matrix,
    tensor_dim,
    tensor_exp,
    tensor_inverse,
    tensor_mul,
    unit_tensor,
)

__version__ = "0.1.0"

__all__ = [
    "BootstrapResult",
    "ClassMetrics",
    "Cohort",
    "CohortClassifier",
    "CohortParams",
    "DatasetSplit",
    "MoodRegressor",
    "MoodReport",
    "NormalizedPath",
    "PairwiseResult",
    "ParticipantRecord",
    "SignatureFeatures",
    "StreamWindow",
    "SynthConfig",
    "TraceRow",
    "TrianglePoint",
    "TruncatedTensor",
    "bootstrap",
    "class_metrics",
    "confusion",
    "corpus_windows",
    "correct_rate",
    "correct_within_one",
    "evaluation_report",
    "feature_vector",
    "featurize",
    "featurize_windows",
    "generate_synthetic",
    "load_csv",
    "load_model",
    "mae",
    "mean_baseline_features",
    "normalize",
    "pairwise_eval",
    "path_signature",
    "persistence_predict",
    "prediction_pairs",
    "prediction_trace",
    "roc_auc",
    "save_model",
    "shuffle_product",
    "signature_feature_matrix",
    "split",
    "tensor_dim",
    "tensor_exp",
    "tensor_inverse",
    "tensor_mul",
    "triangle",
    "unit_tensor",
    "window_streams",
    "write_csv",
    "__version__",
]
