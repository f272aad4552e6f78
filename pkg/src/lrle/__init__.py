"""Long-range localizable entanglement in translationally invariant MPS."""

from lrle.errors import LRLEError
from lrle.mps import (
    BasisRotation,
    BoundaryIsometry,
    CanonicalForm,
    MPSTensor,
    apply_forward,
    apply_reverse,
    apply_reverse_selective,
    canonicalize,
    check_injectivity,
    check_physical_symmetry,
    rotate_physical_basis,
    transfer_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "BasisRotation",
    "BoundaryIsometry",
    "CanonicalForm",
    "LRLEError",
    "MPSTensor",
    "apply_forward",
    "apply_reverse",
    "apply_reverse_selective",
    "canonicalize",
    "check_injectivity",
    "check_physical_symmetry",
    "rotate_physical_basis",
    "transfer_matrix",
]
