"""Orthonormal 2D DCT baseline (type-II forward, type-III inverse).

Used for the sparsity comparison against the wavelet transforms and as the
classic frequency-feature baseline. Orthonormal scaling, so the transform
preserves the 2-norm and a constant image maps to a single DC coefficient.
"""

from __future__ import annotations

import numpy as np
from scipy import fft as sp_fft

from .transforms import LayoutError
from .core import (
    Block,
    CoefficientSet,
    SubbandLayout,
    TransformKind,
    as_image,
)


def dct2(img) -> CoefficientSet:
    img = as_image(img)
    y = sp_fft.dct(img, type=2, norm="ortho", axis=0)
    y = sp_fft.dct(y, type=2, norm="ortho", axis=1)
    h, w = img.shape[:2]
    layout = SubbandLayout(
        kind=TransformKind.DCT,
        level=0,
        coefficient_shape=(h, w),
        blocks=(Block("dct", (0, h), (0, w)),),
        meta={"input_shape": [h, w]},
    )
    return CoefficientSet(y, layout)


def idct2(c: CoefficientSet) -> np.ndarray:
    if c.layout.kind != TransformKind.DCT:
        raise LayoutError(f"expected DCT layout, got {c.layout.kind}")
    y = sp_fft.idct(c.data, type=2, norm="ortho", axis=1)
    return sp_fft.idct(y, type=2, norm="ortho", axis=0)
