"""Age-of-information analysis and shared-server scheduling.

Exact mean-age computation for multi-source status-update systems in which
every source owns a dedicated server and all sources share one extra
server, plus construction of optimal probabilistic and heuristic cyclic
schedules for the shared server, validated by discrete-event simulation.
"""

from .chains import (
    AbsorbingChain,
    RecurrentChain,
    ValidationReport,
    mean_aoi,
    stationary_distribution,
    validate_chain,
)
from .cs import (
    BinaryPattern,
    CyclicSchedule,
    build_cs_amc,
    cs_initial_vector,
    cs_mean_aoi,
    cs_packet_rate,
    cs_rmc_stationary,
    cs_weighted_aoi,
    project_pattern,
)
from .errors import (
    AoischedError,
    ConvergenceError,
    DegenerateThetaError,
    DimensionMismatchError,
    InvalidProbabilityError,
    InvalidRateError,
    PatternLengthError,
    ReducibleChainError,
    ScenarioError,
    SingularChainError,
)
from .ps import (
    build_ps_amc,
    ps_closed_form,
    ps_mean_aoi_numeric,
    ps_rmc_stationary,
    ps_weighted_aoi,
)
from .schedulers import (
    ScheduleBuildReport,
    insertion_search,
    pac_build,
    round_robin_schedule,
    time_policies,
    uniform_pmf,
)
from .sim import SimConfig, SimEstimate, device_rate, simulate
from .system import Pmf, SystemSpec
from .waterfill import (
    WaterfillState,
    cardano_positive_root,
    kkt_residual,
    objective_terms,
    optimize_ps,
)

__version__ = "0.1.0"

__all__ = [
    "AbsorbingChain",
    "AoischedError",
    "BinaryPattern",
    "ConvergenceError",
    "CyclicSchedule",
    "DegenerateThetaError",
    "DimensionMismatchError",
    "InvalidProbabilityError",
    "InvalidRateError",
    "PatternLengthError",
    "Pmf",
    "RecurrentChain",
    "ReducibleChainError",
    "ScenarioError",
    "ScheduleBuildReport",
    "SimConfig",
    "SimEstimate",
    "SingularChainError",
    "SystemSpec",
    "ValidationReport",
    "WaterfillState",
    "build_cs_amc",
    "build_ps_amc",
    "cardano_positive_root",
    "cs_initial_vector",
    "cs_mean_aoi",
    "cs_packet_rate",
    "cs_rmc_stationary",
    "cs_weighted_aoi",
    "device_rate",
    "insertion_search",
    "kkt_residual",
    "mean_aoi",
    "objective_terms",
    "optimize_ps",
    "pac_build",
    "project_pattern",
    "ps_closed_form",
    "ps_mean_aoi_numeric",
    "ps_rmc_stationary",
    "ps_weighted_aoi",
    "round_robin_schedule",
    "simulate",
    "stationary_distribution",
    "time_policies",
    "uniform_pmf",
    "validate_chain",
]
