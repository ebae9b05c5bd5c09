"""Virtual Markov chains: projective families of absorbing chains on [0, N].

Submodules
----------
levels    path prefixes, projection and hitting indices
kernels   exact level distributions, stochastic matrices, VTMs, balayages
families  catalog VTMs and balayages with their analytic facts
simplex   delta points, extended balayage, membership and diagnostics
smc       staircase Markov chains with prescribed marginals
vmcsim    simulation, staircase decomposition and visit classification
zolaw     zero-one law evidence and verdicts
cli       the ``vmc`` command
"""
from .families import (
    catalog_balayage,
    classical_embed,
    down_from_infinity,
    explicit_vtm,
    infinite_clique,
    two_ladders,
    vtm_from_spec,
    vtm_to_spec,
)
from .kernels import (
    Balayage,
    LevelDistribution,
    MarginalSequence,
    ModelError,
    StochasticLevelMatrix,
    VIDPrefix,
    VTMPrefix,
    project_matrix,
    validate_compatibility,
    validate_vid,
    validate_vtm,
)
from .levels import LevelPath, VirtualPathPrefix, project_path, validate_virtual_prefix
from .simplex import delta_point, extended_balayage, limit_scan, membership, row_of_vtm, sternfeld_statistic
from .smc import SmcKernel, sample_staircases
from .vmcsim import (
    SimulationConfig,
    classify_state,
    sample_top_paths,
    sample_vmc,
    staircase_decomposition,
)
from .zolaw import Outcome, ZeroOneOptions, evaluate, extremality

__version__ = "0.1.0"
