"""Block-wise normalization and classifier-ready feature assembly.

Every method name carries a "-BN-" stage: after the transform, each
sub-band block is divided per channel by its maximum absolute value, so
all blocks contribute values in [-1, 1] regardless of the scale gap
between approximation and detail coefficients. All-zero blocks are left
untouched, which keeps the sparsity pattern intact.
"""

from __future__ import annotations

import numpy as np

from .core import CoefficientSet, TransformKind, TransformSpec, replace_data
from .transforms import transform


def blockwise_normalize(c: CoefficientSet) -> CoefficientSet:
    """Divide each block, per channel, by its max absolute coefficient.

    Idempotent and invariant under positive rescaling of the input.
    Positions outside every block (structural filler) are untouched.
    """
    data = c.data.copy()
    lay = c.layout
    if lay.level_map is not None:
        for b in lay.blocks:
            mask = lay.block_mask(b.name)
            sub = data[mask]  # (npos, C)
            mx = np.abs(sub).max(axis=0) if sub.size else np.zeros(0)
            nz = mx > 0
            sub[:, nz] /= mx[nz]
            data[mask] = sub
        return replace_data(c, data)
    for b in lay.blocks:
        sub = data[b.rows[0]:b.rows[1], b.cols[0]:b.cols[1]]
        if sub.size == 0:
            continue
        mx = np.abs(sub).max(axis=(0, 1))
        nz = mx > 0
        sub[..., nz] /= mx[nz]
    return replace_data(c, data)


def extract_features(img, spec: TransformSpec) -> np.ndarray:
    """Transform, normalize block-wise, and emit an H' x W' x C' float32 tensor.

    DWPT packets are stacked along channels (C' = C * 4**level, spatial size
    = one packet); every other transform keeps its spatial layout (C' = C).
    """
    c = blockwise_normalize(transform(img, spec))
    if spec.kind == TransformKind.DWPT:
        parts = [
            c.data[b.rows[0]:b.rows[1], b.cols[0]:b.cols[1]]
            for b in c.layout.blocks
        ]
        return np.concatenate(parts, axis=2).astype(np.float32)
    return c.data.astype(np.float32)


def feature_shape(image_shape: tuple, spec: TransformSpec) -> tuple:
    """Feature tensor shape for a given image shape, without computing it."""
    probe = np.zeros(image_shape)
    return extract_features(probe, spec).shape
