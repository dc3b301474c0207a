"""Mutual-information-driven MIMO ISAC beamforming toolbox.

A library plus CLI for designing dual-function radar-communication transmit
beamformers that maximize the sensing mutual information subject to per-user
rate constraints and a total power budget, together with the simulation and
evaluation pipeline (beampatterns, Capon spectra, angle-estimation RMSE).
"""

__version__ = "0.1.0"

from .errors import (
    BracketFailure,
    ConfigError,
    DegenerateConstraint,
    Infeasible,
    MibeamError,
    NotPositiveDefinite,
    NotPSD,
    NumericalError,
)
from .model import (
    Instance,
    ScattererModel,
    Scenario,
    SystemConfig,
    achievable_rate,
    build_instance,
    mutual_information,
    steering_vector,
)

__all__ = [
    "BracketFailure",
    "ConfigError",
    "DegenerateConstraint",
    "Infeasible",
    "Instance",
    "MibeamError",
    "NotPSD",
    "NotPositiveDefinite",
    "NumericalError",
    "ScattererModel",
    "Scenario",
    "SystemConfig",
    "achievable_rate",
    "build_instance",
    "mutual_information",
    "steering_vector",
    "__version__",
]
