"""Shared tensor types, sub-band layout bookkeeping, and the AMRA binary tensor format.

Images are H x W x C float arrays, channel-last, row-major. All internal
arithmetic is float64; the file format additionally supports float32 for
compact feature export.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

MAGIC = b"AMRA"
VERSION = 1
_DTYPE_CODES = {np.dtype("<f4"): 1, np.dtype("<f8"): 2}
_CODE_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}


class AmraError(Exception):
    """Base error for this package."""


class FormatError(AmraError):
    """Malformed or unsupported AMRA file."""


class CorruptionError(FormatError):
    """Truncated or inconsistent AMRA payload."""


class TransformKind(str, Enum):
    PIXELS = "pixels"
    DWT = "dwt"
    DWPT = "dwpt"
    FSWT = "fswt"
    DCT = "dct"
    SAMPLET = "samplet"


class BoundaryMode(str, Enum):
    REFLECT = "reflect"
    BOUNDARY_FILTER = "boundary"
    NONE = "none"


@dataclass(frozen=True)
class Block:
    """A named rectangular region of a coefficient array (half-open ranges)."""

    name: str
    rows: tuple[int, int]
    cols: tuple[int, int]

    @property
    def area(self) -> int:
        return (self.rows[1] - self.rows[0]) * (self.cols[1] - self.cols[0])


@dataclass(frozen=True)
class SubbandLayout:
    """Block structure of a transform output.

    ``blocks`` carries rectangular sub-bands for the separable transforms.
    Samplet output is not rectangular; there ``level_map`` assigns each
    coefficient position an integer level tag (-1 = approximation block)
    and ``blocks`` lists one pseudo-block per tag with empty ranges.
    """

    kind: TransformKind
    level: int
    coefficient_shape: tuple[int, int]
    blocks: tuple[Block, ...]
    level_map: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def block(self, name: str) -> Block:
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)

    def block_mask(self, name: str) -> np.ndarray:
        """Boolean mask of the coefficient positions belonging to a block."""
        if self.level_map is not None:
            tag = int(name)
            return self.level_map == tag
        b = self.block(name)
        mask = np.zeros(self.coefficient_shape, dtype=bool)
        mask[b.rows[0]:b.rows[1], b.cols[0]:b.cols[1]] = True
        return mask

    def validate_tiling(self) -> bool:
        """True iff the rectangular blocks tile the shape exactly."""
        if self.level_map is not None:
            return True
        cover = np.zeros(self.coefficient_shape, dtype=np.int64)
        for b in self.blocks:
            cover[b.rows[0]:b.rows[1], b.cols[0]:b.cols[1]] += 1
        return bool((cover == 1).all())


@dataclass(frozen=True)
class CoefficientSet:
    """Transform output: rows x cols x channels data plus its layout."""

    data: np.ndarray
    layout: SubbandLayout

    def __post_init__(self):
        if self.data.ndim == 2:
            object.__setattr__(self, "data", self.data[:, :, None])
        if self.data.shape[:2] != self.layout.coefficient_shape:
            raise AmraError(
                f"data shape {self.data.shape[:2]} does not match layout "
                f"{self.layout.coefficient_shape}"
            )

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class TransformSpec:
    kind: TransformKind
    wavelet: str = "haar"
    level: int = 1
    boundary: BoundaryMode = BoundaryMode.REFLECT
    moments: int = 1  # samplets only

    def __post_init__(self):
        if self.kind == TransformKind.SAMPLET and self.moments < 1:
            raise AmraError("samplet spec requires moments >= 1")
        if self.kind in (TransformKind.DWT, TransformKind.DWPT, TransformKind.FSWT):
            from . import filterbank

            if self.wavelet not in filterbank.FILTER_NAMES:
                raise AmraError(f"unknown wavelet {self.wavelet!r}")

    @classmethod
    def parse(cls, text: str) -> "TransformSpec":
        """Parse a comma-separated spec string, e.g.
        ``kind=fswt,wavelet=db3,level=3,boundary=reflect`` or
        ``kind=samplet,m=3,level=3``."""
        fields = {}
        for token in text.split(","):
            token = token.strip()
            if not token:
                continue
            if "=" not in token:
                raise AmraError(f"bad spec token {token!r}")
            key, value = token.split("=", 1)
            fields[key.strip()] = value.strip()
        try:
            kind = TransformKind(fields.pop("kind"))
        except KeyError:
            raise AmraError("spec string requires kind=...") from None
        except ValueError:
            raise AmraError(f"unknown transform kind {fields.get('kind')!r}") from None
        kw = {}
        for key, value in fields.items():
            if key == "wavelet":
                kw["wavelet"] = value
            elif key in ("level", "l"):
                kw["level"] = int(value)
            elif key == "boundary":
                kw["boundary"] = BoundaryMode(value)
            elif key in ("m", "moments"):
                kw["moments"] = int(value)
            elif key == "bn":
                pass  # normalization is applied by the feature stage
            else:
                raise AmraError(f"unknown spec field {key!r}")
        return cls(kind=kind, **kw)

    def label(self) -> str:
        if self.kind == TransformKind.SAMPLET:
            return f"Samplets-BN-{self.moments}-{self.level}"
        if self.kind == TransformKind.FSWT:
            return f"FSWT-BN-{self.wavelet}-{self.level}-{self.boundary.value}"
        return self.kind.value


def _layout_to_json(layout: SubbandLayout) -> dict:
    doc = {
        "kind": layout.kind.value,
        "level": layout.level,
        "shape": list(layout.coefficient_shape),
        "blocks": [
            {"name": b.name, "rows": list(b.rows), "cols": list(b.cols)}
            for b in layout.blocks
        ],
        "meta": layout.meta,
    }
    if layout.level_map is not None:
        doc["level_map"] = layout.level_map.astype(int).tolist()
    return doc


def _layout_from_json(doc: dict) -> SubbandLayout:
    level_map = None
    if "level_map" in doc:
        level_map = np.asarray(doc["level_map"], dtype=np.int64)
    return SubbandLayout(
        kind=TransformKind(doc["kind"]),
        level=int(doc["level"]),
        coefficient_shape=tuple(doc["shape"]),
        blocks=tuple(
            Block(b["name"], tuple(b["rows"]), tuple(b["cols"]))
            for b in doc["blocks"]
        ),
        level_map=level_map,
        meta=doc.get("meta", {}),
    )


def tensor_write(obj, path, dtype=None) -> None:
    """Write an array or CoefficientSet to an AMRA file.

    Layout: magic "AMRA", version u16, dtype code u8 (f32=1, f64=2),
    rank u8, dims as u64 little-endian, raw data little-endian, then an
    optional layout record (u32 length + UTF-8 JSON).
    """
    layout = None
    if isinstance(obj, CoefficientSet):
        layout = obj.layout
        arr = obj.data
    else:
        arr = np.asarray(obj)
    if dtype is not None:
        arr = arr.astype(dtype)
    arr = np.ascontiguousarray(arr)
    dt = np.dtype(arr.dtype).newbyteorder("<")
    if dt not in _DTYPE_CODES:
        dt = np.dtype("<f8")
        arr = arr.astype(dt)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HBB", VERSION, _DTYPE_CODES[dt], arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        fh.write(arr.astype(dt).tobytes())
        if layout is not None:
            blob = json.dumps(_layout_to_json(layout)).encode("utf-8")
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)


def tensor_read(path):
    """Read an AMRA file; returns an ndarray, or a CoefficientSet when a
    layout record is present."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGIC:
        raise FormatError(f"bad magic {raw[:4]!r}")
    if len(raw) < 8:
        raise CorruptionError("truncated header")
    version, code, rank = struct.unpack_from("<HBB", raw, 4)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if code not in _CODE_DTYPES:
        raise FormatError(f"unknown dtype code {code}")
    off = 8
    if len(raw) < off + 8 * rank:
        raise CorruptionError("truncated dims")
    dims = struct.unpack_from(f"<{rank}Q", raw, off)
    off += 8 * rank
    dt = _CODE_DTYPES[code]
    count = int(np.prod(dims)) if rank else 1
    nbytes = count * dt.itemsize
    if len(raw) < off + nbytes:
        raise CorruptionError("truncated payload")
    arr = np.frombuffer(raw, dtype=dt, count=count, offset=off).reshape(dims)
    off += nbytes
    if off == len(raw):
        return arr.copy()
    if len(raw) < off + 4:
        raise CorruptionError("truncated layout record")
    (blob_len,) = struct.unpack_from("<I", raw, off)
    off += 4
    if len(raw) < off + blob_len:
        raise CorruptionError("truncated layout record")
    layout = _layout_from_json(json.loads(raw[off:off + blob_len].decode("utf-8")))
    return CoefficientSet(arr.astype(np.float64), layout)


def header_size(rank: int) -> int:
    """Byte size of the fixed header for a given rank (before raw data)."""
    return 8 + 8 * rank


def as_image(arr) -> np.ndarray:
    """Coerce to a float64 H x W x C array (C added if missing)."""
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3:
        raise AmraError(f"expected 2D or 3D image, got shape {a.shape}")
    return a


def replace_data(c: CoefficientSet, data: np.ndarray) -> CoefficientSet:
    return replace(c, data=data)
