"""Evidence generators: sparsity counts, canonical test patterns, average
fingerprints, and PCA separability.

Sparsity uses a relative threshold (default 1e-10 of the max absolute
coefficient) because transform scales differ; the canonical block-constant
patterns are exactly representable, so the counts are stable over many
decades of threshold.
"""

from __future__ import annotations

import numpy as np

from .core import AmraError, CoefficientSet, TransformSpec, as_image
from .features import blockwise_normalize
from .transforms import transform


def sparsity_count(c: CoefficientSet, tol: float = 1e-10) -> dict:
    """Nonzero-coefficient counts per block and in total.

    A coefficient counts as nonzero when |value| > tol * max|value| over
    the whole coefficient set. Returns {"blocks": {name: count}, "total": n}.
    """
    if tol < 0:
        raise AmraError("tol must be >= 0")
    mags = np.abs(c.data)
    cut = tol * mags.max() if mags.size else 0.0
    per_block = {}
    for b in c.layout.blocks:
        mask = c.layout.block_mask(b.name)
        per_block[b.name] = int((mags[mask] > cut).sum())
    return {"blocks": per_block, "total": int((mags > cut).sum())}


def generate_pattern(kind: str, n: int, grid: int = 4, count: int = 40,
                     seed: int = 0) -> np.ndarray:
    """Canonical block-constant grayscale test patterns, values in {0, 255}.

    iso_squares: grid x grid checkerboard of equal squares.
    aniso_rects: seeded recursive dyadic guillotine partition into exactly
    ``count`` axis-aligned rectangles, each filled 0 or 255.
    """
    if n < 1 or (n & (n - 1)) != 0:
        raise AmraError(f"n must be a power of two, got {n}")
    if kind == "iso_squares":
        if grid < 1 or n % grid != 0:
            raise AmraError(f"grid {grid} does not divide n {n}")
        s = n // grid
        tile = (np.add.outer(np.arange(grid), np.arange(grid)) % 2) * 255.0
        return np.kron(tile, np.ones((s, s)))[:, :, None]
    if kind == "aniso_rects":
        if count < 1 or count > n * n:
            raise AmraError(f"cannot partition {n}x{n} into {count} rectangles")
        rng = np.random.default_rng(seed)
        rects = [(0, n, 0, n)]
        while len(rects) < count:
            splittable = [i for i, (r0, r1, c0, c1) in enumerate(rects)
                          if r1 - r0 >= 2 or c1 - c0 >= 2]
            if not splittable:
                raise AmraError(f"cannot partition {n}x{n} into {count} rectangles")
            i = splittable[int(rng.integers(len(splittable)))]
            r0, r1, c0, c1 = rects.pop(i)
            h, w = r1 - r0, c1 - c0
            if h >= 2 and w >= 2:
                axis = int(rng.integers(2))
            else:
                axis = 0 if h >= 2 else 1
            if axis == 0:
                m = r0 + h // 2
                rects.extend([(r0, m, c0, c1), (m, r1, c0, c1)])
            else:
                m = c0 + w // 2
                rects.extend([(r0, r1, c0, m), (r0, r1, m, c1)])
        img = np.zeros((n, n))
        for r0, r1, c0, c1 in rects:
            img[r0:r1, c0:c1] = 255.0 * float(rng.integers(2))
        return img[:, :, None]
    raise AmraError(f"unknown pattern kind {kind!r}")


def average_fingerprint(images, spec: TransformSpec) -> CoefficientSet:
    """Mean of per-image transform coefficients, block-normalized for export.

    ``images`` is an iterable of arrays or paths; the mean is taken before
    normalization (streaming, bounded memory).
    """
    mean = None
    layout = None
    n = 0
    for item in images:
        if isinstance(item, (str, bytes)) or hasattr(item, "__fspath__"):
            from .dataset import load_image

            item = load_image(item)
        c = transform(as_image(item), spec)
        if mean is None:
            mean = np.zeros_like(c.data)
            layout = c.layout
        elif c.data.shape != mean.shape:
            raise AmraError(
                f"image size mismatch: got coefficients {c.data.shape}, "
                f"expected {mean.shape}"
            )
        n += 1
        mean += (c.data - mean) / n
    if mean is None:
        raise AmraError("average_fingerprint needs at least one image")
    return blockwise_normalize(CoefficientSet(mean, layout))


def pca_project(features, k: int = 3):
    """Top-k PCA of flattened feature vectors.

    Returns (components (k, p), coordinates (n, k), explained-variance
    ratios (k,)). Component signs are fixed so the largest-magnitude entry
    of each component is positive.
    """
    X = np.asarray([np.ravel(f) for f in features], dtype=np.float64)
    n = X.shape[0]
    if k < 1 or k > n:
        raise AmraError(f"k={k} out of range for {n} samples")
    Xc = X - X.mean(axis=0)
    _, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    comps = Vt[:k]
    for i in range(k):
        j = int(np.argmax(np.abs(comps[i])))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    coords = Xc @ comps.T
    total = float((s ** 2).sum())
    ratios = (s[:k] ** 2) / total if total > 0 else np.zeros(k)
    return comps, coords, ratios
