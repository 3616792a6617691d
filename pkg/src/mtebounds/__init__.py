"""Sharp bounds on treatment effects from Bernstein-sieve linear programs."""

from .continuous import ContinuousConfig, ContinuousSample, assemble_continuous, bounds_continuous
from .data import (CellDistribution, Dataset, dataset_from_arrays, estimate_distribution, ingest_csv,
                   load_distribution, save_distribution)
from .engine import (BoundsEngine, BoundsResult, EngineConfig, assemble, bounds, build_constraints,
                     k_sweep, mte_curve, refute)
from .errors import (CapacityError, ConfigurationError, DataError, DomainError, FormatError,
                     MteBoundsError, RankDeficientError, RelevanceError, SolverError, StructuralError)
from .latent import AssumptionSpec, SieveLayout, enumerate_maps
from .lp import LinearProgram, LpSolution, SimplexSolver, full_rank_check, rescale, solve
from .simulation import DgpSpec, paper_dgp, population_distribution, sample, true_parameter, true_theta
from .targets import TargetSpec

__version__ = "0.1.0"
