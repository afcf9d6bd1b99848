"""ifslab: analysis of one-parameter affine iterated function systems."""

from .core import (AffineMap, Classification, FamilyMember, OneParamFamily, classify,
                   detect_degenerate, fixed_point, instantiate, scaling_data)
from .jsr import jsr_bounds, spectral_norm, spectral_radius, t0_threshold

__version__ = "0.1.0"

__all__ = [
    "AffineMap", "Classification", "FamilyMember", "OneParamFamily", "classify",
    "detect_degenerate", "fixed_point", "instantiate", "scaling_data",
    "jsr_bounds", "spectral_norm", "spectral_radius", "t0_threshold", "__version__",
]
