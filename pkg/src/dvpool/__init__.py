"""Dual-view pyramid pooling: pooling operators, metrics, probes, synthesis.

The package turns convolutional feature maps (C x H x W or C x D x H x W)
into fixed-length feature vectors by combining two pooling views: spatial
pyramids that reduce positions per channel, and cross-channel pyramids
that reduce channels per position. It ships the evaluation stack used to
compare such representations: classification and calibration metrics, a
deterministic linear probe, a controlled synthetic dataset generator, a
minimal NPY codec, and a batch CLI (``dvpool``).
"""

__version__ = "0.1.0"

from .metrics import (
    BinStats,
    PredictionSet,
    ReliabilityTable,
    TemperatureFit,
    accuracy,
    balanced_accuracy,
    brier,
    cohen_kappa,
    confusion_matrix,
    ece,
    macro_f1,
    mean_nll,
    softmax,
    temperature_fit,
)
from .npyio import NpyFormatError, read_labels, read_npy, read_npy_file, write_npy, write_npy_file
from .pooling import (
    SC_C_SER_DEFAULT,
    SC_SER_DEFAULT,
    DvppConfig,
    PyramidLevels,
    Reduction,
    Variant,
    ccp_pool,
    dvpp,
    mixed_pool,
    output_len,
    pool_batch,
    pyramid,
    sp_pool,
)
from .probe import LinearProbe, TrainSpec, gradient_check, load_probe, loss_and_grads, save_probe, train
from .synth import SynthResult, SynthSpec, generate
from .tensor import ContractError, FeatureMap, FeatureVector, Segment, concat, region_max, region_mean

__all__ = [
    "__version__",
    "BinStats",
    "ContractError",
    "DvppConfig",
    "FeatureMap",
    "FeatureVector",
    "LinearProbe",
    "NpyFormatError",
    "PredictionSet",
    "PyramidLevels",
    "Reduction",
    "ReliabilityTable",
    "SC_C_SER_DEFAULT",
    "SC_SER_DEFAULT",
    "Segment",
    "SynthResult",
    "SynthSpec",
    "TemperatureFit",
    "TrainSpec",
    "Variant",
    "accuracy",
    "balanced_accuracy",
    "brier",
    "ccp_pool",
    "cohen_kappa",
    "concat",
    "confusion_matrix",
    "dvpp",
    "ece",
    "generate",
    "gradient_check",
    "load_probe",
    "loss_and_grads",
    "macro_f1",
    "mean_nll",
    "mixed_pool",
    "output_len",
    "pool_batch",
    "pyramid",
    "read_labels",
    "read_npy",
    "read_npy_file",
    "region_max",
    "region_mean",
    "save_probe",
    "softmax",
    "sp_pool",
    "temperature_fit",
    "train",
    "write_npy",
    "write_npy_file",
]
