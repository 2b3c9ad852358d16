"""Ground-state degeneracy and entropy of 1D Euclidean matching at p = 1."""

from .errors import (DuplicateCoordinate, DyckMatchError, IndexOutOfRange,
                     NotABridge, QuadratureNonConvergence, SizeMismatch,
                     TooLarge, UnsupportedOrder)
from .paths import (ClosingStep, Ensemble, HeightProfile, Instance, PathClass,
                    SignPath, classify, closing_steps, from_instance, heights,
                    to_canonical_instance)

__version__ = "0.1.0"
