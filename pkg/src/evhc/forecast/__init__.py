from .astgcn import (
    DemandForecaster,
    TrainConfig,
    ablation_variant,
    baseline_ha,
    build_time_invariant_adjacency,
    build_time_varying_adjacency,
    chebyshev_conv,
    combine_adjacency,
    gated_temporal_conv,
    grad,
    historical_similarity,
    loss_fn,
    normalized_laplacian,
    second_order_pool,
    temporal_attention,
)
from .training import (
    TrainingDiverged,
    load_checkpoint,
    predict,
    save_checkpoint,
    train,
    write_loss_curves,
)

__all__ = [
    "DemandForecaster", "TrainConfig", "ablation_variant", "baseline_ha",
    "build_time_invariant_adjacency", "build_time_varying_adjacency",
    "chebyshev_conv", "combine_adjacency", "gated_temporal_conv", "grad",
    "historical_similarity", "loss_fn", "normalized_laplacian",
    "second_order_pool", "temporal_attention", "TrainingDiverged",
    "load_checkpoint", "predict", "save_checkpoint", "train",
    "write_loss_curves",
]
