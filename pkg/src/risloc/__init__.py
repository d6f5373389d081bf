"""Near-field RIS beam design for position error bound minimization."""
from .array import RisArray, build_planar_ris, steering, steering_derivatives
from .config import ScenarioConfig, load_config
from .design import build_beam_basis, solve_full_x_sdp, solve_lambda_sdp
from .errors import ConfigError, RislocError
from .fim import ChannelGain, Scenario, SnrScale, peb

__all__ = [
    "RisArray", "build_planar_ris", "steering", "steering_derivatives",
    "ScenarioConfig", "load_config",
    "build_beam_basis", "solve_full_x_sdp", "solve_lambda_sdp",
    "ConfigError", "RislocError",
    "ChannelGain", "Scenario", "SnrScale", "peb",
]

__version__ = "0.1.0"
