"""Moments of work for a driven, damped two-level system.

Master-equation moments (full drive and rotating-wave tracks), a quantum-jump
sampler of the work distribution, and an exact two-point-measurement oracle
on a small closed system.
"""

from .exceptions import (
    ConfigError,
    DomainError,
    NumericalError,
    ShapeError,
    SizeError,
    StepSizeError,
    UndefinedRatioError,
    WorkMomentsError,
)
from .mcwf import WorkRecord, WorkStatistics, evolve_trajectory, run_ensemble, sample_initial_level
from .model import DriveProtocol, SystemParams
from .moments import MomentsReport, fdt_ratio, fdt_taylor, moments_full, moments_rwa
from .tpm_oracle import (
    TotalSystemModel,
    TPMDistribution,
    generating_function_commuting,
    generating_function_exact,
    moments_by_finite_difference,
    moments_from_distribution,
    tpm_distribution,
)

__version__ = "0.1.0"
