from .transactions import (
    SLOT_MINUTES,
    ChargingTransaction,
    CleaningRules,
    aggregate,
    clean_transactions,
)
from .synth import SLOTS_PER_DAY, SynthSpec, base_profile, default_correlation, spatial_noise, synth_generate
from .dataset import (
    DemandSeries,
    WindowedDataset,
    denormalize,
    normalize,
    window_and_split,
)
from .metrics import metrics
from .error_model import (
    IntervalErrorModel,
    build_interval_error_model,
    fit_error_model_from_dataset,
    interval_index,
    probabilistic_forecast,
)

__all__ = [
    "IntervalErrorModel", "build_interval_error_model",
    "fit_error_model_from_dataset", "interval_index", "probabilistic_forecast",
    "SLOT_MINUTES", "SLOTS_PER_DAY", "ChargingTransaction", "CleaningRules",
    "aggregate", "clean_transactions", "SynthSpec", "base_profile",
    "default_correlation", "spatial_noise", "synth_generate", "DemandSeries",
    "WindowedDataset", "denormalize", "normalize", "window_and_split",
    "metrics",
]
