"""Key-rate engine for continuous-variable QKD with a quantum-scissor receiver."""

from .params import (
    DEFAULT_LOSS_DB_PER_KM,
    ChannelParams,
    NoiseFactors,
    ProtocolParams,
    QSParams,
    noise_factors,
)
from .scissor import (
    QubitState,
    conditional_state,
    post_selected_state,
    rl_approx_success,
    success_probability,
    thermal_post_selected_state,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_LOSS_DB_PER_KM",
    "ChannelParams",
    "NoiseFactors",
    "ProtocolParams",
    "QSParams",
    "QubitState",
    "conditional_state",
    "noise_factors",
    "post_selected_state",
    "rl_approx_success",
    "success_probability",
    "thermal_post_selected_state",
    "__version__",
]
