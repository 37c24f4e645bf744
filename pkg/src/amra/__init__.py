"""Anisotropic multiresolution analysis toolkit.

Isotropic (DWT, DWPT, DCT) and anisotropic (FSWT, samplet) 2D transforms
with boundary handling, block-wise normalization, and a full feature ->
shallow CNN -> seeded evaluation pipeline for image source identification.
"""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    AmraError,
    Block,
    BoundaryMode,
    CoefficientSet,
    SubbandLayout,
    TransformKind,
    TransformSpec,
    tensor_read,
    tensor_write,
)
from .transforms import transform, inverse_transform  # noqa: F401
