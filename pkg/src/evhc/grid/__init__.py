from .network import (
    Bus,
    DistributionNetwork,
    Line,
    NetworkError,
    ieee33,
    load_network,
)
from .powerflow import (
    OperatingPoint,
    PowerFlowDivergence,
    SensitivityMatrix,
    SingularJacobian,
    base_injections,
    compute_sensitivity,
    solve_power_flow,
)
from .distflow import (
    DistFlowResiduals,
    DistFlowState,
    distflow_residual,
    state_from_operating_point,
)

__all__ = [
    "Bus", "DistributionNetwork", "Line", "NetworkError", "ieee33",
    "load_network", "OperatingPoint", "PowerFlowDivergence",
    "SensitivityMatrix", "SingularJacobian", "base_injections",
    "compute_sensitivity", "solve_power_flow", "DistFlowResiduals",
    "DistFlowState", "distflow_residual", "state_from_operating_point",
]
