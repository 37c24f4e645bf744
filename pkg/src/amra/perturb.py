"""The four robustness perturbations with their sampling protocol.

All operations take and return H x W x C arrays valued in [0, 255] and
preserve shape. The pipeline applies, with probability 1/2, one of the
four perturbations chosen uniformly, with parameters drawn from the
distributions documented on each function.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image
from scipy import ndimage

from .core import AmraError, as_image


class PerturbationError(AmraError):
    pass


_KERNEL_SIZES = (3, 5, 7, 9)


def _to_pil(img: np.ndarray) -> Image.Image:
    u8 = np.clip(np.round(img), 0, 255).astype(np.uint8)
    if u8.shape[2] == 1:
        return Image.fromarray(u8[:, :, 0], mode="L")
    if u8.shape[2] == 3:
        return Image.fromarray(u8, mode="RGB")
    raise PerturbationError(f"unsupported channel count {u8.shape[2]}")


def _from_pil(im: Image.Image) -> np.ndarray:
    return as_image(np.asarray(im, dtype=np.float64))


def gaussian_blur(img, kernel_size: int) -> np.ndarray:
    """Separable Gaussian blur, sigma = 0.3*((k-1)/2 - 1) + 0.8, reflect border."""
    if kernel_size not in _KERNEL_SIZES:
        raise AmraError(f"kernel size must be one of {_KERNEL_SIZES}")
    img = as_image(img)
    sigma = 0.3 * ((kernel_size - 1) / 2 - 1) + 0.8
    radius = (kernel_size - 1) // 2
    out = ndimage.gaussian_filter(
        img, sigma=(sigma, sigma, 0), mode="reflect", truncate=radius / sigma
    )
    return np.clip(out, 0, 255)


def random_crop(img, pct: float) -> np.ndarray:
    """Centered crop removing pct% per dimension, bilinear resize back."""
    if not 5 <= pct <= 20:
        raise AmraError(f"crop percentage {pct} outside [5, 20]")
    img = as_image(img)
    h, w, _ = img.shape
    keep_h = max(1, int(round(h * (100 - pct) / 100)))
    keep_w = max(1, int(round(w * (100 - pct) / 100)))
    r0 = (h - keep_h) // 2
    c0 = (w - keep_w) // 2
    crop = img[r0:r0 + keep_h, c0:c0 + keep_w]
    im = _to_pil(crop).resize((w, h), Image.BILINEAR)
    return np.clip(_from_pil(im), 0, 255)


def jpeg_roundtrip(img, quality: int) -> np.ndarray:
    """Baseline JPEG encode/decode at the given quality; uint8-valued output."""
    quality = int(quality)
    if not 10 <= quality <= 75:
        raise AmraError(f"quality {quality} outside [10, 75]")
    buf = io.BytesIO()
    try:
        _to_pil(img).save(buf, format="JPEG", quality=quality)
        buf.seek(0)
        out = _from_pil(Image.open(buf))
    except OSError as e:  # codec failure
        raise PerturbationError(f"JPEG round trip failed: {e}") from e
    return out


def add_noise(img, variance: float, rng=None) -> np.ndarray:
    """Zero-mean Gaussian noise with the given variance (sigma = sqrt(var)),
    clipped to [0, 255] and quantized to integers."""
    if not 5 <= variance <= 20:
        raise AmraError(f"noise variance {variance} outside [5, 20]")
    rng = np.random.default_rng(rng)
    img = as_image(img)
    noisy = img + rng.normal(0.0, np.sqrt(variance), size=img.shape)
    return np.round(np.clip(noisy, 0, 255))


def perturb_pipeline(img, rng) -> tuple[np.ndarray, dict]:
    """With probability 1/2 return the image unchanged, else apply one of the
    four perturbations uniformly with parameters drawn per their protocols.

    Returns (image, record); the record names the perturbation applied and
    its parameters.
    """
    rng = np.random.default_rng(rng)
    img = as_image(img)
    if rng.random() < 0.5:
        return img, {"perturbation": "none"}
    which = int(rng.integers(4))
    if which == 0:
        k = int(rng.choice(_KERNEL_SIZES))
        return gaussian_blur(img, k), {"perturbation": "blur", "kernel_size": k}
    if which == 1:
        pct = float(rng.uniform(5, 20))
        return random_crop(img, pct), {"perturbation": "crop", "pct": pct}
    if which == 2:
        q = int(rng.integers(10, 76))
        return jpeg_roundtrip(img, q), {"perturbation": "jpeg", "quality": q}
    var = float(rng.uniform(5, 20))
    return add_noise(img, var, rng), {"perturbation": "noise", "variance": var}


def derive_seed(global_seed: int, index: int) -> np.random.SeedSequence:
    """Per-image rng seed so batches can be processed in any order."""
    return np.random.SeedSequence(entropy=global_seed, spawn_key=(index,))
