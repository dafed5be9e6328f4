"""landaulab: numerical apparatus for hard-potential Landau collision dynamics.

Subpackages cover the velocity-weight hierarchies and their exhaustive
inequality audit, the truncated phase-space grid with mixed derivatives and
weighted energy norms, the collision-coefficient convolutions (direct and FFT
engines), the cutoff/mollifier family, the viscous linearized solver with its
error-term ledger, and the Picard driver with contraction monitoring.
"""

__version__ = "0.1.0"

from .multiindex import MultiIndex, enumerate_indices
from .weights import ModelParams, WeightHierarchy, check_split_inequalities

__all__ = [
    "MultiIndex",
    "enumerate_indices",
    "ModelParams",
    "WeightHierarchy",
    "check_split_inequalities",
    "__version__",
]
