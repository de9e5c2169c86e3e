"""Distance-weighted augmentation for personalized continuous
valence/arousal regression: segment pooling, nearest-segment selection
under pluggable distance metrics, concordance-loss sequence regression
with per-individual fine-tuning, and ccc-proportional late fusion."""

from .augment import (
    AugmentationPool,
    AugmentedDataset,
    DwaConfig,
    augment_individual,
    build_pool,
    export_augmentation_report,
    nearest,
)
from .corpus import (
    AROUSAL,
    TARGETS,
    VALENCE,
    Corpus,
    CorpusSchema,
    FeatureSeries,
    Individual,
    LabelSeries,
    Portions,
    ScalerStats,
    Split,
    SynthConfig,
    apply_scaler,
    fit_scaler,
    generate_synthetic,
    load_corpus,
    save_corpus,
)
from .kernels import backend
from .metrics import (
    CccReport,
    DistanceMetric,
    ccc,
    ccc_loss,
    centroid,
    centroid_dp,
    centroid_l2,
    cosine_distance,
    segment_distance,
)
from .pipeline import (
    EvaluationRecord,
    ExperimentConfig,
    FusionWeights,
    GridSpec,
    evaluate,
    late_fuse,
    personalize,
    predict_span,
    run_experiment,
    train_generic,
)
from .regressor import (
    RegressorParams,
    TrainConfig,
    TrainTrace,
    forward,
    init_params,
    load_params,
    loss_and_gradient,
    save_params,
    train,
)
from .segmentation import (
    Segment,
    SegmentationConfig,
    concat_predictions,
    segment_count,
    segment_series,
)

__version__ = "0.1.0"

__all__ = [
    "AROUSAL",
    "AugmentationPool",
    "AugmentedDataset",
    "CccReport",
    "Corpus",
    "CorpusSchema",
    "DistanceMetric",
    "DwaConfig",
    "EvaluationRecord",
    "ExperimentConfig",
    "FeatureSeries",
    "FusionWeights",
    "GridSpec",
    "Individual",
    "LabelSeries",
    "Portions",
    "RegressorParams",
    "ScalerStats",
    "Segment",
    "SegmentationConfig",
    "Split",
    "SynthConfig",
    "TARGETS",
    "TrainConfig",
    "TrainTrace",
    "VALENCE",
    "apply_scaler",
    "augment_individual",
    "backend",
    "build_pool",
    "ccc",
    "ccc_loss",
    "centroid",
    "centroid_dp",
    "centroid_l2",
    "concat_predictions",
    "cosine_distance",
    "evaluate",
    "fit_scaler",
    "forward",
    "generate_synthetic",
    "init_params",
    "late_fuse",
    "load_corpus",
    "load_params",
    "loss_and_gradient",
    "nearest",
    "personalize",
    "predict_span",
    "run_experiment",
    "save_corpus",
    "save_params",
    "segment_count",
    "segment_distance",
    "segment_series",
    "train",
    "train_generic",
    "__version__",
]
