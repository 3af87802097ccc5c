"""Train the fully-connected head of a frozen random-feature CNN with
per-class dense QUBOs solved by simulated annealing."""

__version__ = "0.1.0"

from gramqubo.annealer import AnnealConfig, LocalFieldState, anneal, flip_delta
from gramqubo.data import (
    Dataset,
    RawImage,
    SubsampleSpec,
    downsample_to_8x8,
    load_cifar10,
    load_digits_csv,
    load_idx,
    prepare_dataset,
    subsample,
    subsample_split,
)
from gramqubo.encoding import PrecisionVector, decode, min_magnitude, precision_vector
from gramqubo.features import (
    ConvSpec,
    FeatureMatrix,
    FrozenConv,
    extract_features,
    feature_dim,
    init_frozen_conv,
)
from gramqubo.metrics import ConfusionMatrix, MetricReport, confusion, report
from gramqubo.qubo import (
    QuboProblem,
    Sample,
    brute_force_min,
    build_class_qubo,
    evaluate,
    evaluate_with_offset,
    normalize,
    read_qubo_file,
    write_qubo_file,
)
from gramqubo.surrogate import (
    Gram,
    HeadWeights,
    class_gradient,
    class_residual,
    gram,
    mean_cross_entropy,
    one_hot,
    softmax_probs,
)
from gramqubo.trainer import (
    HistoryEntry,
    RunRecord,
    TrainConfig,
    loss_increase_fraction,
    predict,
    train_classical,
    train_qubo,
)

__all__ = [
    "__version__",
    "AnnealConfig",
    "ConfusionMatrix",
    "ConvSpec",
    "Dataset",
    "FeatureMatrix",
    "FrozenConv",
    "Gram",
    "HeadWeights",
    "HistoryEntry",
    "LocalFieldState",
    "MetricReport",
    "PrecisionVector",
    "QuboProblem",
    "RawImage",
    "RunRecord",
    "Sample",
    "SubsampleSpec",
    "TrainConfig",
    "anneal",
    "brute_force_min",
    "build_class_qubo",
    "class_gradient",
    "class_residual",
    "confusion",
    "decode",
    "downsample_to_8x8",
    "evaluate",
    "evaluate_with_offset",
    "extract_features",
    "feature_dim",
    "flip_delta",
    "gram",
    "init_frozen_conv",
    "load_cifar10",
    "load_digits_csv",
    "load_idx",
    "loss_increase_fraction",
    "mean_cross_entropy",
    "min_magnitude",
    "normalize",
    "one_hot",
    "precision_vector",
    "predict",
    "prepare_dataset",
    "read_qubo_file",
    "report",
    "softmax_probs",
    "subsample",
    "subsample_split",
    "train_classical",
    "train_qubo",
    "write_qubo_file",
]
