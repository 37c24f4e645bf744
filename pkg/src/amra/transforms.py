"""2D multiresolution transforms: Mallat DWT, wavelet packets (DWPT), and the
fully separable wavelet transform (FSWT), with inverses.

All transforms act per channel on H x W x C arrays. Coefficients are packed
into a single 2D canvas per channel; the sub-band geometry lives in the
attached SubbandLayout. Under reflect padding the per-level sizes are
redundant (floor((s+F-1)/2) > s/2 for F > 2), so the packed DWT canvas
contains structural zero filler between blocks; boundary-filter mode and
Haar keep sizes exactly halved and the blocks tile the canvas tightly.
"""

from __future__ import annotations

import numpy as np

from . import filterbank
from .core import (
    AmraError,
    Block,
    BoundaryMode,
    CoefficientSet,
    SubbandLayout,
    TransformKind,
    TransformSpec,
    as_image,
)


class LayoutError(AmraError):
    pass


def _analysis(X, f, mode, axis):
    Y = np.moveaxis(X, axis, -1)
    A, D = filterbank.analysis_1d(Y, f, mode)
    return np.moveaxis(A, -1, axis), np.moveaxis(D, -1, axis)


def _synthesis(A, D, f, mode, orig, axis):
    A = np.moveaxis(A, axis, -1)
    D = np.moveaxis(D, axis, -1)
    Y = filterbank.synthesis_1d(A, D, f, mode, orig)
    return np.moveaxis(Y, -1, axis)


def _child_len(s: int, f, mode) -> tuple[int, int]:
    """(approx, detail) lengths after one analysis step."""
    if mode == BoundaryMode.REFLECT:
        n = filterbank.reflect_length(s, f.length)
        return n, n
    return (s + 1) // 2, s // 2


def _check_depth(img, spec):
    h, w = img.shape[:2]
    if min(h, w) < 2 ** spec.level:
        raise filterbank.SizeError(
            f"level {spec.level} too deep for image of size {h}x{w}"
        )


# ---------------------------------------------------------------------------
# Mallat DWT

def dwt2(img, spec: TransformSpec) -> CoefficientSet:
    img = as_image(img)
    if spec.kind != TransformKind.DWT:
        raise AmraError("spec.kind must be DWT")
    _check_depth(img, spec)
    f = filterbank.get_filter(spec.wavelet)
    mode = spec.boundary
    a = img
    levels = []  # (h, v, d) finest-first
    sizes = [img.shape[:2]]
    for _ in range(spec.level):
        A1, D1 = _analysis(a, f, mode, axis=1)
        a, v = _analysis(A1, f, mode, axis=0)
        h, d = _analysis(D1, f, mode, axis=0)
        levels.append((h, v, d))
        sizes.append(a.shape[:2])
    # pack: approx in the corner, level-j details in nested L-shapes
    off_r, off_c = sizes[-1]
    canvas_r, canvas_c = off_r, off_c
    placements = {"a": ((0, sizes[-1][0]), (0, sizes[-1][1]))}
    for j in range(spec.level, 0, -1):
        sr, sc = levels[j - 1][2].shape[:2]
        placements[f"h{j}"] = ((0, sr), (off_c, off_c + sc))
        placements[f"v{j}"] = ((off_r, off_r + sr), (0, sc))
        placements[f"d{j}"] = ((off_r, off_r + sr), (off_c, off_c + sc))
        canvas_r, canvas_c = off_r + sr, off_c + sc
        off_r, off_c = canvas_r, canvas_c
    data = np.zeros((canvas_r, canvas_c, img.shape[2]))
    blocks = []
    def put(name, arr):
        (r0, r1), (c0, c1) = placements[name]
        data[r0:r1, c0:c1] = arr
        blocks.append(Block(name, (r0, r1), (c0, c1)))
    put("a", a)
    for j in range(spec.level, 0, -1):
        h, v, d = levels[j - 1]
        put(f"h{j}", h)
        put(f"v{j}", v)
        put(f"d{j}", d)
    layout = SubbandLayout(
        kind=TransformKind.DWT,
        level=spec.level,
        coefficient_shape=(canvas_r, canvas_c),
        blocks=tuple(blocks),
        meta={
            "wavelet": spec.wavelet,
            "boundary": mode.value,
            "input_shape": list(img.shape[:2]),
            "level_sizes": [list(s) for s in sizes],
        },
    )
    return CoefficientSet(data, layout)


def idwt2(c: CoefficientSet, spec: TransformSpec | None = None) -> np.ndarray:
    lay = c.layout
    if lay.kind != TransformKind.DWT:
        raise LayoutError(f"expected DWT layout, got {lay.kind}")
    if spec is not None and (spec.wavelet != lay.meta["wavelet"]
                             or spec.boundary.value != lay.meta["boundary"]
                             or spec.level != lay.level):
        raise LayoutError("spec does not match coefficient layout")
    f = filterbank.get_filter(lay.meta["wavelet"])
    mode = BoundaryMode(lay.meta["boundary"])
    sizes = [tuple(s) for s in lay.meta["level_sizes"]]

    def grab(name):
        b = lay.block(name)
        return c.data[b.rows[0]:b.rows[1], b.cols[0]:b.cols[1]]

    a = grab("a")
    for j in range(lay.level, 0, -1):
        h, v, d = grab(f"h{j}"), grab(f"v{j}"), grab(f"d{j}")
        pr, pc = sizes[j - 1]
        mid_r = _child_len(pr, f, mode)[0] if mode == BoundaryMode.BOUNDARY_FILTER \
            else filterbank.reflect_length(pr, f.length)
        if a.shape[0] != mid_r:
            raise LayoutError("approximation size inconsistent with layout")
        A1 = _synthesis(a, v, f, mode, pr, axis=0)
        D1 = _synthesis(h, d, f, mode, pr, axis=0)
        a = _synthesis(A1, D1, f, mode, pc, axis=1)
    return a


# ---------------------------------------------------------------------------
# Wavelet packets

_QUAD = {"a": (0, 0), "h": (0, 1), "v": (1, 0), "d": (1, 1)}


def dwpt2(img, spec: TransformSpec) -> CoefficientSet:
    img = as_image(img)
    if spec.kind != TransformKind.DWPT:
        raise AmraError("spec.kind must be DWPT")
    _check_depth(img, spec)
    f = filterbank.get_filter(spec.wavelet)
    mode = spec.boundary
    packets = {"": img}
    sizes = [img.shape[:2]]
    for _ in range(spec.level):
        nxt = {}
        for path, X in packets.items():
            A1, D1 = _analysis(X, f, mode, axis=1)
            a, v = _analysis(A1, f, mode, axis=0)
            h, d = _analysis(D1, f, mode, axis=0)
            nxt[path + "a"] = a
            nxt[path + "h"] = h
            nxt[path + "v"] = v
            nxt[path + "d"] = d
        packets = nxt
        sizes.append(packets[("a" * len(next(iter(packets))))].shape[:2])
    pr, pc = sizes[-1]
    grid = 2 ** spec.level
    data = np.zeros((grid * pr, grid * pc, img.shape[2]))
    blocks = []
    for path in sorted(packets):
        row = sum(_QUAD[ch][0] << (spec.level - 1 - i) for i, ch in enumerate(path))
        col = sum(_QUAD[ch][1] << (spec.level - 1 - i) for i, ch in enumerate(path))
        r0, c0 = row * pr, col * pc
        data[r0:r0 + pr, c0:c0 + pc] = packets[path]
        blocks.append(Block(path, (r0, r0 + pr), (c0, c0 + pc)))
    layout = SubbandLayout(
        kind=TransformKind.DWPT,
        level=spec.level,
        coefficient_shape=(grid * pr, grid * pc),
        blocks=tuple(blocks),
        meta={
            "wavelet": spec.wavelet,
            "boundary": mode.value,
            "input_shape": list(img.shape[:2]),
            "level_sizes": [list(s) for s in sizes],
            "packet_order": "natural",
        },
    )
    return CoefficientSet(data, layout)


def idwpt2(c: CoefficientSet, spec: TransformSpec | None = None) -> np.ndarray:
    lay = c.layout
    if lay.kind != TransformKind.DWPT:
        raise LayoutError(f"expected DWPT layout, got {lay.kind}")
    f = filterbank.get_filter(lay.meta["wavelet"])
    mode = BoundaryMode(lay.meta["boundary"])
    sizes = [tuple(s) for s in lay.meta["level_sizes"]]
    packets = {}
    for b in lay.blocks:
        packets[b.name] = c.data[b.rows[0]:b.rows[1], b.cols[0]:b.cols[1]]
    for j in range(lay.level, 0, -1):
        pr, pc = sizes[j - 1]
        nxt = {}
        parents = sorted({p[:-1] for p in packets})
        for path in parents:
            a, h = packets[path + "a"], packets[path + "h"]
            v, d = packets[path + "v"], packets[path + "d"]
            A1 = _synthesis(a, v, f, mode, pr, axis=0)
            D1 = _synthesis(h, d, f, mode, pr, axis=0)
            nxt[path] = _synthesis(A1, D1, f, mode, pc, axis=1)
        packets = nxt
    return packets[""]


# ---------------------------------------------------------------------------
# Fully separable transform

def _multilevel_lengths(s: int, f, mode, level: int) -> list[int]:
    out = [s]
    for _ in range(level):
        out.append(_child_len(out[-1], f, mode)[0])
    return out


def _fswt_segments(s: int, f, mode, level: int) -> list[tuple[str, int]]:
    """Concatenation segments [a_l, d_l, ..., d_1] with labels and lengths."""
    lens = _multilevel_lengths(s, f, mode, level)
    segs = [(f"a{level}", lens[level])]
    for j in range(level, 0, -1):
        if mode == BoundaryMode.REFLECT:
            d_len = filterbank.reflect_length(lens[j - 1], f.length)
        else:
            d_len = lens[j - 1] // 2
        segs.append((f"d{j}", d_len))
    return segs


def _fswt_axis(X, f, mode, level, axis):
    a = np.moveaxis(X, axis, -1)
    details = []
    for _ in range(level):
        a, d = filterbank.analysis_1d(a, f, mode)
        details.append(d)
    parts = [a] + details[::-1]  # a_l, d_l, ..., d_1
    return np.moveaxis(np.concatenate(parts, axis=-1), -1, axis)


def _ifswt_axis(Y, f, mode, level, orig_len, axis):
    lens = _multilevel_lengths(orig_len, f, mode, level)
    segs = _fswt_segments(orig_len, f, mode, level)
    bounds = np.cumsum([0] + [L for _, L in segs])
    Y = np.moveaxis(Y, axis, -1)
    a = Y[..., bounds[0]:bounds[1]]
    for idx, j in enumerate(range(level, 0, -1), start=1):
        d = Y[..., bounds[idx]:bounds[idx + 1]]
        a = filterbank.synthesis_1d(a, d, f, mode, lens[j - 1])
    return np.moveaxis(a, -1, axis)


def fswt2(img, spec: TransformSpec) -> CoefficientSet:
    img = as_image(img)
    if spec.kind != TransformKind.FSWT:
        raise AmraError("spec.kind must be FSWT")
    _check_depth(img, spec)
    f = filterbank.get_filter(spec.wavelet)
    mode = spec.boundary
    # rows first (each row is a 1D signal, i.e. transform along axis 1),
    # then columns
    Y = _fswt_axis(img, f, mode, spec.level, axis=1)
    Y = _fswt_axis(Y, f, mode, spec.level, axis=0)
    seg_r = _fswt_segments(img.shape[0], f, mode, spec.level)
    seg_c = _fswt_segments(img.shape[1], f, mode, spec.level)
    blocks = []
    r0 = 0
    for rl, rn in seg_r:
        c0 = 0
        for cl, cn in seg_c:
            blocks.append(Block(f"{rl}|{cl}", (r0, r0 + rn), (c0, c0 + cn)))
            c0 += cn
        r0 += rn
    layout = SubbandLayout(
        kind=TransformKind.FSWT,
        level=spec.level,
        coefficient_shape=Y.shape[:2],
        blocks=tuple(blocks),
        meta={
            "wavelet": spec.wavelet,
            "boundary": mode.value,
            "input_shape": list(img.shape[:2]),
            "axis_order": "rows-then-columns",
        },
    )
    return CoefficientSet(Y, layout)


def ifswt2(c: CoefficientSet, spec: TransformSpec | None = None) -> np.ndarray:
    lay = c.layout
    if lay.kind != TransformKind.FSWT:
        raise LayoutError(f"expected FSWT layout, got {lay.kind}")
    f = filterbank.get_filter(lay.meta["wavelet"])
    mode = BoundaryMode(lay.meta["boundary"])
    h, w = lay.meta["input_shape"]
    Y = _ifswt_axis(c.data, f, mode, lay.level, h, axis=0)
    return _ifswt_axis(Y, f, mode, lay.level, w, axis=1)


# ---------------------------------------------------------------------------
# dispatch

def transform(img, spec: TransformSpec) -> CoefficientSet:
    """Apply the transform named by ``spec`` (including DCT/samplet/pixels)."""
    from . import dct as _dct
    from . import samplets as _samplets

    if spec.kind == TransformKind.DWT:
        return dwt2(img, spec)
    if spec.kind == TransformKind.DWPT:
        return dwpt2(img, spec)
    if spec.kind == TransformKind.FSWT:
        return fswt2(img, spec)
    if spec.kind == TransformKind.DCT:
        return _dct.dct2(img)
    if spec.kind == TransformKind.SAMPLET:
        return _samplets.samplet_image_transform(img, spec)
    if spec.kind == TransformKind.PIXELS:
        img = as_image(img)
        layout = SubbandLayout(
            kind=TransformKind.PIXELS, level=0,
            coefficient_shape=img.shape[:2],
            blocks=(Block("pixels", (0, img.shape[0]), (0, img.shape[1])),),
        )
        return CoefficientSet(img.copy(), layout)
    raise AmraError(f"unsupported kind {spec.kind}")


def inverse_transform(c: CoefficientSet) -> np.ndarray:
    from . import dct as _dct
    from . import samplets as _samplets

    kind = c.layout.kind
    if kind == TransformKind.DWT:
        return idwt2(c)
    if kind == TransformKind.DWPT:
        return idwpt2(c)
    if kind == TransformKind.FSWT:
        return ifswt2(c)
    if kind == TransformKind.DCT:
        return _dct.idct2(c)
    if kind == TransformKind.SAMPLET:
        return _samplets.samplet_image_inverse(c)
    if kind == TransformKind.PIXELS:
        return c.data.copy()
    raise AmraError(f"unsupported kind {kind}")
