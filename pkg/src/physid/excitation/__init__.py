from .dataset import (
    CHANNELS,
    ConstantChannelWarning,
    Dataset,
    DatasetFormatError,
    NormalizationStats,
    Samples,
    TrajectorySample,
    csv_header,
    load_csv,
    normalize_split,
    save_csv,
    split_index,
)
from .signals import differentiate, lowpass_zero_phase
from .trajectory import (
    FourierTrajectory,
    NoiseConfig,
    filter_targets,
    fourier_eval,
    load_trajectory,
    synthesize_dataset,
)

__all__ = [
    "CHANNELS",
    "ConstantChannelWarning",
    "Dataset",
    "DatasetFormatError",
    "FourierTrajectory",
    "NoiseConfig",
    "NormalizationStats",
    "Samples",
    "TrajectorySample",
    "csv_header",
    "differentiate",
    "filter_targets",
    "fourier_eval",
    "load_csv",
    "load_trajectory",
    "lowpass_zero_phase",
    "normalize_split",
    "save_csv",
    "split_index",
    "synthesize_dataset",
]
