"""Two-level overlapping Schwarz preconditioners for 2m-th order problems.

Library for discretizing the biharmonic (m = 2) and triharmonic (m = 3)
model problems on rectangular grids with four finite element families
(Bogner-Fox-Schmit, Adini, C0 interior penalty, Jin-Wu), building one- and
two-level overlapping additive Schwarz preconditioners with a universal
coarse space, and running preconditioned conjugate gradient experiments.
"""

from .assembly import (
    DofMap,
    assemble_c0ip_edges,
    assemble_load,
    assemble_stiffness,
    build_dofmap,
    evaluate,
    interpolate,
)
from .bench import ExperimentConfig, run, run_matrix
from .coarse import (
    CoarseGenerator,
    CoarseSpace,
    build_coarse_space,
    build_generator,
    partition_of_unity,
)
from .elements import (
    FAMILIES,
    QuadratureRule,
    ReferenceElement,
    build_element,
    gauss_legendre,
    local_load,
    local_stiffness,
    shape_eval,
)
from .geometry import CartesianMesh, Decomposition, build_decomposition, build_mesh
from .krylov import PcgReport, pcg
from .linalg import compact, factorize_spd, triple_product
from .manufactured import manufactured_solution
from .schwarz import AdditiveSchwarz, LocalSpace, build_local_spaces

__version__ = "0.1.0"

__all__ = [
    "FAMILIES",
    "CartesianMesh",
    "Decomposition",
    "DofMap",
    "ReferenceElement",
    "QuadratureRule",
    "CoarseGenerator",
    "CoarseSpace",
    "AdditiveSchwarz",
    "LocalSpace",
    "PcgReport",
    "ExperimentConfig",
    "build_mesh",
    "build_decomposition",
    "build_element",
    "build_dofmap",
    "build_generator",
    "build_coarse_space",
    "build_local_spaces",
    "gauss_legendre",
    "shape_eval",
    "local_stiffness",
    "local_load",
    "assemble_stiffness",
    "assemble_c0ip_edges",
    "assemble_load",
    "interpolate",
    "evaluate",
    "manufactured_solution",
    "partition_of_unity",
    "compact",
    "factorize_spd",
    "triple_product",
    "pcg",
    "run",
    "run_matrix",
]
