"""Coded gradient aggregation through helper nodes.

Client codes (MDS, pyramid, repetition), erasure-pattern classification,
aggregation planners with recovery checks, exact occupancy-based costs and
a seeded Monte Carlo engine.
"""

from .analysis import CostEstimate, SystemParams, ceh, chm_amc_exact, chm_pyramid_formula, tradeoff
from .codes import build_arc, build_mds, build_pyramid
from .erasures import ClassIndex, ErasureMatrix, class_table
from .exceptions import BudgetExceeded, CaggError, FieldDomainError, ParameterError, RecoveryError
from .field import FieldMatrix, FieldSpec, gf
from .occupancy import OccupancyParams, phi, rho
from .sim import McResult, SimConfig, estimate_chm, estimate_type_moments
from .strategies import AggregationPlan, Strategy, verify_recovery

__version__ = "0.1.0"

__all__ = [
    "AggregationPlan",
    "BudgetExceeded",
    "CaggError",
    "ClassIndex",
    "CostEstimate",
    "ErasureMatrix",
    "FieldDomainError",
    "FieldMatrix",
    "FieldSpec",
    "McResult",
    "OccupancyParams",
    "ParameterError",
    "RecoveryError",
    "SimConfig",
    "Strategy",
    "SystemParams",
    "build_arc",
    "build_mds",
    "build_pyramid",
    "ceh",
    "chm_amc_exact",
    "chm_pyramid_formula",
    "class_table",
    "estimate_chm",
    "estimate_type_moments",
    "gf",
    "phi",
    "rho",
    "tradeoff",
    "verify_recovery",
]
