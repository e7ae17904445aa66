"""sk-descent - lambda-interpolated greedy/reluctant descent on the SK spin glass."""

__version__ = "0.1.0"

from .config import Config
from .sk_model import CouplingMatrix, DynamicsState, generate_couplings, energy, init_state
from .dynamics import LambdaParam, RunRecord, run_trajectory
from .experiment import ExperimentConfig, EnergyStats, ScalingFit, run_campaign

__all__ = [
    "Config",
    "CouplingMatrix",
    "DynamicsState",
    "generate_couplings",
    "energy",
    "init_state",
    "LambdaParam",
    "RunRecord",
    "run_trajectory",
    "ExperimentConfig",
    "EnergyStats",
    "ScalingFit",
    "run_campaign"
]
