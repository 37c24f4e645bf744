"""Orthogonal wavelet filters, single-level 1D analysis/synthesis, and
boundary-filter transform matrices.

Reflect mode uses whole-sample symmetric extension and yields
floor((s + F - 1)/2) coefficients per branch for filter length F; the
frozen alignment (odd convolution phase on analysis, F-2 left trim on
synthesis) gives machine-precision reconstruction for every length s >= 2.

Boundary mode applies an s x s orthogonal matrix whose interior rows are
the plain shifted filters and whose truncated edge rows are
re-orthonormalized by QR, so the output size equals the input size.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import sparse

from .core import AmraError, BoundaryMode


class FilterLookupError(AmraError):
    pass


class SizeError(AmraError):
    pass


# Daubechies scaling coefficients from spectral factorization of the
# binomial half-band polynomial (minimum phase), normalized to sum sqrt(2).
_DEC_LO = {
    "haar": [0.7071067811865476, 0.7071067811865476],
    "db2": [-0.12940952255126037, 0.2241438680420134,
            0.8365163037378079, 0.48296291314453416],
    "db3": [0.03522629188570953, -0.08544127388202666, -0.13501102001025458,
            0.45987750211849154, 0.8068915093110925, 0.33267055295008263],
    "db4": [-0.010597401785069032, 0.0328830116668852, 0.030841381835560764,
            -0.18703481171909309, -0.027983769416859854, 0.6308807679298589,
            0.7148465705529157, 0.2303778133088965],
    "db5": [0.0033357252854737712, -0.012580751999081999, -0.006241490212798274,
            0.07757149384004572, -0.032244869584638375, -0.24229488706638203,
            0.13842814590132074, 0.7243085284377729, 0.6038292697971896,
            0.16010239797419293],
    "db6": [-0.0010773010853084796, 0.004777257510945511, 0.0005538422011614961,
            -0.03158203931748603, 0.027522865530305727, 0.09750160558732304,
            -0.12976686756726194, -0.22626469396543983, 0.31525035170919763,
            0.7511339080210954, 0.49462389039845306, 0.11154074335010947],
    "db7": [0.00035371379997452024, -0.0018016407040474908, 0.0004295779729213665,
            0.01255099855609984, -0.01657454163066688, -0.03802993693501441,
            0.08061260915108308, 0.07130921926683026, -0.22403618499387498,
            -0.14390600392856498, 0.4697822874051931, 0.7291320908462351,
            0.3965393194819173, 0.07785205408500918],
}

FILTER_NAMES = tuple(_DEC_LO)


@dataclass(frozen=True)
class WaveletFilter:
    name: str
    dec_lo: np.ndarray
    dec_hi: np.ndarray
    rec_lo: np.ndarray
    rec_hi: np.ndarray

    @property
    def length(self) -> int:
        return len(self.dec_lo)

    @property
    def order(self) -> int:
        """Number of vanishing moments (k for db-k)."""
        return self.length // 2


def _validate(f: WaveletFilter) -> None:
    lo, hi = f.dec_lo, f.dec_hi
    L = f.length
    if abs(lo @ lo - 1.0) > 1e-12:
        raise FilterLookupError(f"{f.name}: taps not unit norm")
    for j in range(1, L // 2):
        if abs(lo[: L - 2 * j] @ lo[2 * j:]) > 1e-12:
            raise FilterLookupError(f"{f.name}: shift-2 orthogonality fails")
    qmf = np.array([(-1) ** i * lo[L - 1 - i] for i in range(L)])
    if np.abs(hi - qmf).max() > 1e-14:
        raise FilterLookupError(f"{f.name}: QMF relation fails")
    idx = np.arange(L, dtype=np.float64)
    for p in range(f.order):
        if abs((idx ** p * hi).sum()) > 1e-8:
            raise FilterLookupError(f"{f.name}: moment {p} does not vanish")


def _reflect_ext(X: np.ndarray, p: int) -> np.ndarray:
    # whole-sample reflection; manual concatenate is cheaper than np.pad
    s = X.shape[-1]
    if p <= s - 1:
        stop = s - 2 - p if s - 2 - p >= 0 else None
        return np.concatenate(
            [X[..., p:0:-1], X, X[..., s - 2:stop:-1]], axis=-1
        )
    return np.pad(X, [(0, 0)] * (X.ndim - 1) + [(p, p)], mode="reflect")


@lru_cache(maxsize=None)
def get_filter(name: str) -> WaveletFilter:
    """Look up a wavelet filter by name (haar, db2..db7)."""
    try:
        lo = np.array(_DEC_LO[name], dtype=np.float64)
    except KeyError:
        raise FilterLookupError(
            f"unknown wavelet {name!r}; expected one of {FILTER_NAMES}"
        ) from None
    L = len(lo)
    hi = np.array([(-1) ** i * lo[L - 1 - i] for i in range(L)], dtype=np.float64)
    f = WaveletFilter(name, lo, hi, lo[::-1].copy(), hi[::-1].copy())
    _validate(f)
    return f


def reflect_length(s: int, F: int) -> int:
    return (s + F - 1) // 2


@lru_cache(maxsize=None)
def _analysis_taps(name: str) -> np.ndarray:
    f = get_filter(name)
    return np.stack([f.dec_lo[::-1], f.dec_hi[::-1]], axis=1)


@dataclass(frozen=True)
class BoundaryTransform:
    n: int
    matrix: np.ndarray  # dense s x s orthogonal, rows interleaved lo/hi
    filter: WaveletFilter


def boundary_matrix(s: int, f: WaveletFilter) -> BoundaryTransform:
    """Banded orthogonal analysis matrix with QR-corrected edge rows.

    Row 2i carries the lowpass taps at columns 2i-(k-1)..2i+k (clipped),
    row 2i+1 the highpass taps; rows losing taps at the edges are projected
    off the interior rows and re-orthonormalized.
    """
    F = f.length
    if s < 2 * F:
        raise SizeError(f"boundary matrix needs s >= {2 * F}, got {s}")
    k = F // 2
    n_lo = (s + 1) // 2
    n_hi = s // 2
    M = np.zeros((s, s))
    truncated = []
    for i in range(n_lo):
        start = 2 * i - (k - 1)
        for row, taps in ((2 * i, f.dec_lo), (2 * i + 1, f.dec_hi)):
            if row == 2 * i + 1 and i >= n_hi:
                continue
            a = max(start, 0)
            b = min(start + F, s)
            M[row, a:b] = taps[a - start: b - start]
            if b - a < F:
                truncated.append(row)
    interior = sorted(set(range(s)) - set(truncated))
    if truncated:
        B = M[truncated]
        I_rows = M[interior]
        # project off the (already orthonormal) interior rows
        B = B - (B @ I_rows.T) @ I_rows
        Q, R = np.linalg.qr(B.T)
        signs = np.sign(np.diag(R))
        signs[signs == 0] = 1.0
        M[truncated] = (Q * signs).T
    bt = BoundaryTransform(s, M, f)
    err = np.abs(M @ M.T - np.eye(s)).max()
    if err > 1e-10:
        raise AmraError(f"boundary matrix for s={s}, {f.name} not orthogonal ({err:.2e})")
    return bt


class _MatrixCache:
    """Process-wide cache of boundary matrices, safe for concurrent readers."""

    def __init__(self):
        self._lock = threading.Lock()
        self._store: dict[tuple[int, str], tuple] = {}

    def get(self, s: int, f: WaveletFilter):
        key = (s, f.name)
        with self._lock:
            hit = self._store.get(key)
        if hit is not None:
            return hit
        bt = boundary_matrix(s, f)
        fwd = sparse.csr_matrix(np.where(np.abs(bt.matrix) > 0, bt.matrix, 0.0))
        inv = fwd.T.tocsr()
        entry = (bt, fwd, inv)
        with self._lock:
            self._store[key] = entry
        return entry


_CACHE = _MatrixCache()


def _reflect_pair(X: np.ndarray, f: WaveletFilter):
    # decimated correlation at odd phase over the whole-sample reflected
    # extension, done as one fused matmul against the stacked filter pair
    F = f.length
    s = X.shape[-1]
    n_a = reflect_length(s, F)
    ext = _reflect_ext(X, F - 1)
    W = sliding_window_view(ext, F, axis=-1)[..., 1::2, :][..., :n_a, :]
    Y = W @ _analysis_taps(f.name)
    return Y[..., 0], Y[..., 1]


def _full_conv(up: np.ndarray, taps: np.ndarray) -> np.ndarray:
    # vectorized full convolution along the last axis
    F = len(taps)
    ext = np.pad(up, [(0, 0)] * (up.ndim - 1) + [(F - 1, F - 1)])
    W = sliding_window_view(ext, F, axis=-1)
    return W @ taps[::-1]


def _reflect_inverse(A: np.ndarray, D: np.ndarray, f: WaveletFilter, s: int):
    F = f.length
    n_a = A.shape[-1]
    up = np.zeros(A.shape[:-1] + (2 * n_a,))
    up[..., 0::2] = A
    y = _full_conv(up, f.rec_lo)
    up[...] = 0.0
    up[..., 0::2] = D
    y = y + _full_conv(up, f.rec_hi)
    return y[..., F - 2: F - 2 + s]


def analysis_1d(signal, f: WaveletFilter, mode: BoundaryMode):
    """Single-level analysis along the last axis; returns (approx, detail)."""
    X = np.asarray(signal, dtype=np.float64)
    s = X.shape[-1]
    if s < 2:
        raise SizeError(f"signal too short: {s}")
    if mode == BoundaryMode.REFLECT:
        return _reflect_pair(X, f)
    if mode == BoundaryMode.BOUNDARY_FILTER:
        if s < 2 * f.length:
            raise SizeError(
                f"boundary mode needs length >= {2 * f.length}, got {s}"
            )
        _, fwd, _ = _CACHE.get(s, f)
        Y = (fwd @ X.reshape(-1, s).T).T.reshape(X.shape)
        return Y[..., 0::2], Y[..., 1::2]
    raise AmraError(f"unsupported mode {mode}")


def synthesis_1d(approx, detail, f: WaveletFilter, mode: BoundaryMode,
                 original_length: int):
    """Inverse of :func:`analysis_1d` given the original signal length."""
    A = np.asarray(approx, dtype=np.float64)
    D = np.asarray(detail, dtype=np.float64)
    s = original_length
    if mode == BoundaryMode.REFLECT:
        n_a = reflect_length(s, f.length)
        if A.shape[-1] != n_a or D.shape[-1] != n_a:
            raise SizeError(
                f"coefficient lengths {A.shape[-1]}/{D.shape[-1]} inconsistent "
                f"with original length {s} (expected {n_a})"
            )
        return _reflect_inverse(A, D, f, s)
    if mode == BoundaryMode.BOUNDARY_FILTER:
        if A.shape[-1] != (s + 1) // 2 or D.shape[-1] != s // 2:
            raise SizeError("coefficient lengths inconsistent with original length")
        _, _, inv = _CACHE.get(s, f)
        Y = np.zeros(A.shape[:-1] + (s,))
        Y[..., 0::2] = A
        Y[..., 1::2] = D
        return (inv @ Y.reshape(-1, s).T).T.reshape(A.shape[:-1] + (s,))
    raise AmraError(f"unsupported mode {mode}")
