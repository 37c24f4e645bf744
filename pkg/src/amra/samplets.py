"""Samplet bases over 2D point clouds and the fast samplet transform.

A binary cluster tree is built over the points (median split along the
longer bounding-box axis). Per leaf, a QR factorization of the transposed
moment matrix splits the coordinate space into m_q scaling directions and
samplet directions with m vanishing moments; internal nodes repeat the
construction on their children's scaling functions, with moments carried
between the per-node scaled coordinate systems by an exact monomial
change of basis. Both the construction and the transform are organized as
level-synchronous batched matrix products, so transforming an n x n image
costs O(n^2).

For images, one "image level" corresponds to two tree levels (one x-split
plus one y-split), so level l processes the 2l finest tree levels.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .core import (
    AmraError,
    Block,
    CoefficientSet,
    SubbandLayout,
    TransformKind,
    TransformSpec,
    as_image,
)


class ConstructionError(AmraError):
    pass


def moment_count(m: int) -> int:
    """Number of 2D monomials of total degree < m."""
    return m * (m + 1) // 2


def monomial_exponents(m: int) -> np.ndarray:
    """(m_q, 2) exponent table, graded lexicographic."""
    out = []
    for deg in range(m):
        for ax in range(deg + 1):
            out.append((deg - ax, ax))
    return np.array(out, dtype=np.int64)


# ---------------------------------------------------------------------------
# Cluster tree


@dataclass
class ClusterTree:
    points: np.ndarray          # original order, (n, 2)
    perm: np.ndarray            # position p in tree order holds point perm[p]
    lo: np.ndarray              # per node: start of owned slice (tree order)
    hi: np.ndarray
    depth: np.ndarray
    left: np.ndarray            # child node ids, -1 for leaves
    right: np.ndarray
    max_depth: int

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def n_nodes(self) -> int:
        return len(self.lo)

    def is_leaf(self, i) -> np.ndarray:
        return self.left[i] < 0

    def node_bbox(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        pts = self.points[self.perm[self.lo[i]:self.hi[i]]]
        return pts.min(axis=0), pts.max(axis=0)


def build_cluster_tree(points, leaf_capacity: int) -> ClusterTree:
    """Balanced binary tree: split along the longer bounding-box axis
    (ties -> x) at the median index, until nodes hold <= leaf_capacity
    points."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise AmraError(f"expected (n, 2) points, got {pts.shape}")
    n = len(pts)
    if n == 0:
        raise AmraError("empty point set")
    if leaf_capacity < 1:
        raise AmraError("leaf_capacity must be >= 1")
    perm = np.arange(n)
    lo, hi, depth, left, right = [], [], [], [], []

    def add_node(a, b, d):
        lo.append(a); hi.append(b); depth.append(d)
        left.append(-1); right.append(-1)
        return len(lo) - 1

    root = add_node(0, n, 0)
    stack = [root]
    while stack:
        node = stack.pop()
        a, b = lo[node], hi[node]
        t = b - a
        if t <= leaf_capacity:
            continue
        sl = perm[a:b]
        coords = pts[sl]
        ext = coords.max(axis=0) - coords.min(axis=0)
        axis = 0 if ext[0] >= ext[1] else 1
        mid = a + (t + 1) // 2
        order = np.argsort(coords[:, axis], kind="stable")
        perm[a:b] = sl[order]
        lc = add_node(a, mid, depth[node] + 1)
        rc = add_node(mid, b, depth[node] + 1)
        left[node], right[node] = lc, rc
        stack.extend((lc, rc))
    return ClusterTree(
        points=pts,
        perm=perm,
        lo=np.array(lo), hi=np.array(hi), depth=np.array(depth),
        left=np.array(left), right=np.array(right),
        max_depth=int(np.max(depth)),
    )


# ---------------------------------------------------------------------------
# Basis construction


@dataclass
class _Step:
    """One batched mixing step: gather positions ``idx`` (g, t), multiply by
    the stacked orthogonal matrices ``Q`` (g, t, t), scatter back to ``idx``.
    Scaling slots are the first m_q positions of each row of ``idx``;
    ``tree_level`` tags the produced samplet coefficients."""

    tree_level: int
    idx: np.ndarray
    Q: np.ndarray
    n_scaling: int


@dataclass
class SampletBasis:
    tree: ClusterTree
    m: int
    steps: list[_Step] = field(default_factory=list)  # fine-to-coarse order

    @property
    def m_q(self) -> int:
        return moment_count(self.m)


def _scaled_coords(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Center/half-width per axis for conditioning; zero widths -> 1."""
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    center = (lo + hi) / 2
    half = (hi - lo) / 2
    half[half == 0] = 1.0
    return (pts - center) / half, center, half


def _monomial_change(exps, c_child, h_child, c_par, h_par):
    """C with mono_parent = C @ mono_child for stacked nodes.

    Child coordinates x_c relate to parent coordinates by
    x_p = alpha + beta * x_c per axis."""
    g = len(c_child)
    m_q = len(exps)
    alpha = (c_child - c_par) / h_par        # (g, 2)
    beta = h_child / h_par                   # (g, 2)
    C = np.zeros((g, m_q, m_q))
    for qi, (a, b) in enumerate(exps):
        for qj, (i, j) in enumerate(exps):
            if i > a or j > b:
                continue
            w = comb(int(a), int(i)) * comb(int(b), int(j))
            C[:, qi, qj] = (
                w
                * alpha[:, 0] ** (a - i) * beta[:, 0] ** i
                * alpha[:, 1] ** (b - j) * beta[:, 1] ** j
            )
    return C


def _sign_fix(Q, R, m_q):
    """Deterministic signs: diag(R) >= 0 for scaling columns, first
    nonzero entry positive for samplet columns."""
    g, t, _ = Q.shape
    d = np.sign(np.einsum("gii->gi", R[:, :m_q, :m_q]))
    d[d == 0] = 1.0
    Q[:, :, :m_q] *= d[:, None, :]
    R[:, :m_q, :] *= d[:, :, None]
    if t > m_q:
        S = Q[:, :, m_q:]
        first = np.argmax(np.abs(S) > 1e-12, axis=1)
        lead = np.take_along_axis(S, first[:, None, :], axis=1)[:, 0, :]
        sgn = np.sign(lead)
        sgn[sgn == 0] = 1.0
        Q[:, :, m_q:] *= sgn[:, None, :]
    return Q, R


def construct_basis(tree: ClusterTree, m: int) -> SampletBasis:
    """Bottom-up samplet basis with m vanishing moments."""
    if m < 1:
        raise ConstructionError("m must be >= 1")
    m_q = moment_count(m)
    exps = monomial_exponents(m)
    sizes = tree.hi - tree.lo
    if sizes[tree.is_leaf(np.arange(tree.n_nodes))].min() < m_q:
        raise ConstructionError(
            f"leaf of size {sizes.min()} too small for m={m} (need >= {m_q})"
        )
    basis = SampletBasis(tree=tree, m=m)
    node_ids = np.arange(tree.n_nodes)
    # per-node own-coordinate frames and (filled during the sweep) moments
    centers = np.zeros((tree.n_nodes, 2))
    halves = np.ones((tree.n_nodes, 2))
    moments = np.zeros((tree.n_nodes, m_q, m_q))
    # scaling coefficient slot start per node (in tree order): always node.lo
    steps: list[_Step] = []
    for d in range(tree.max_depth, -1, -1):
        at_depth = node_ids[tree.depth == d]
        leaves = at_depth[tree.is_leaf(at_depth)]
        internal = at_depth[~tree.is_leaf(at_depth)]
        # leaves grouped by size
        for t in np.unique(sizes[leaves]) if len(leaves) else []:
            grp = leaves[sizes[leaves] == t]
            idx = tree.lo[grp][:, None] + np.arange(t)[None, :]
            pts = tree.points[tree.perm[idx]]          # (g, t, 2)
            plo = pts.min(axis=1)
            phi = pts.max(axis=1)
            ctr = (plo + phi) / 2
            hlf = (phi - plo) / 2
            hlf[hlf == 0] = 1.0
            centers[grp] = ctr
            halves[grp] = hlf
            loc = (pts - ctr[:, None, :]) / hlf[:, None, :]
            # moment matrix (g, m_q, t)
            M = np.prod(loc[:, None, :, :] ** exps[None, :, None, :], axis=3)
            Q, R = np.linalg.qr(np.swapaxes(M, 1, 2), mode="complete")
            Q, R = _sign_fix(Q, R, m_q)
            moments[grp] = np.swapaxes(R[:, :m_q, :m_q], 1, 2)
            steps.append(_Step(d, idx, np.swapaxes(Q, 1, 2).copy(), m_q))
        if len(internal):
            lc, rc = tree.left[internal], tree.right[internal]
            pts_lo = np.minimum.reduce([centers[lc] - halves[lc],
                                        centers[rc] - halves[rc]])
            pts_hi = np.maximum.reduce([centers[lc] + halves[lc],
                                        centers[rc] + halves[rc]])
            ctr = (pts_lo + pts_hi) / 2
            hlf = (pts_hi - pts_lo) / 2
            hlf[hlf == 0] = 1.0
            centers[internal] = ctr
            halves[internal] = hlf
            C1 = _monomial_change(exps, centers[lc], halves[lc], ctr, hlf)
            C2 = _monomial_change(exps, centers[rc], halves[rc], ctr, hlf)
            M = np.concatenate([C1 @ moments[lc], C2 @ moments[rc]], axis=2)
            Q, R = np.linalg.qr(np.swapaxes(M, 1, 2), mode="complete")
            Q, R = _sign_fix(Q, R, m_q)
            moments[internal] = np.swapaxes(R[:, :m_q, :m_q], 1, 2)
            idx = np.concatenate(
                [tree.lo[lc][:, None] + np.arange(m_q)[None, :],
                 tree.lo[rc][:, None] + np.arange(m_q)[None, :]], axis=1)
            steps.append(_Step(d, idx, np.swapaxes(Q, 1, 2).copy(), m_q))
    basis.steps = steps
    return basis


# ---------------------------------------------------------------------------
# Transform


def _stop_depth(tree: ClusterTree, level: int | None) -> int:
    if level is None:
        return 0
    return max(tree.max_depth - 2 * level, 0)


def samplet_transform(values, basis: SampletBasis, level: int | None = None):
    """Forward transform; returns (coefficients, level_tags), both in tree
    (permuted) order. Tag -1 marks the approximation block; tag d marks
    samplets produced at tree depth d."""
    tree = basis.tree
    v = np.asarray(values, dtype=np.float64)
    if v.shape[0] != tree.n_points:
        raise AmraError(
            f"values length {v.shape[0]} != point count {tree.n_points}"
        )
    stop = _stop_depth(tree, level)
    out = v[tree.perm].copy()
    tags = np.full(tree.n_points, -1, dtype=np.int64)
    for step in basis.steps:
        if step.tree_level < stop:
            continue
        gathered = out[step.idx]
        mixed = np.einsum("gij,gj...->gi...", step.Q, gathered)
        out[step.idx] = mixed
        tags[step.idx[:, step.n_scaling:]] = step.tree_level
    return out, tags


def samplet_inverse(coeffs, basis: SampletBasis, level: int | None = None):
    """Inverse transform; returns values in original point order."""
    tree = basis.tree
    c = np.asarray(coeffs, dtype=np.float64)
    stop = _stop_depth(tree, level)
    out = c.copy()
    for step in reversed(basis.steps):
        if step.tree_level < stop:
            continue
        gathered = out[step.idx]
        mixed = np.einsum("gji,gj...->gi...", step.Q, gathered)
        out[step.idx] = mixed
    values = np.empty_like(out)
    values[tree.perm] = out
    return values


def dense_basis_matrix(basis: SampletBasis, level: int | None = None) -> np.ndarray:
    """Dense assembly of the (processed part of the) transform as an n x n
    matrix Q_total with coefficients = Q_total @ values[tree order ->
    original order handled internally]. Intended as a desk-scale oracle."""
    n = basis.tree.n_points
    T = np.zeros((n, n))
    T[np.arange(n), basis.tree.perm] = 1.0  # values -> tree order
    stop = _stop_depth(basis.tree, level)
    for step in basis.steps:
        if step.tree_level < stop:
            continue
        L = np.eye(n)
        for g in range(len(step.idx)):
            L[np.ix_(step.idx[g], step.idx[g])] = step.Q[g]
        T = L @ T
    return T


# ---------------------------------------------------------------------------
# Image interface


class _BasisCache:
    def __init__(self):
        self._lock = threading.Lock()
        self._store: dict[tuple, SampletBasis] = {}

    def get(self, h: int, w: int, m: int) -> SampletBasis:
        key = (h, w, m)
        with self._lock:
            hit = self._store.get(key)
        if hit is not None:
            return hit
        rows, cols = np.mgrid[0:h, 0:w]
        # pixel centers, (col + 0.5, row + 0.5)
        points = np.stack([cols.ravel() + 0.5, rows.ravel() + 0.5], axis=1)
        capacity = max(2 * moment_count(m), 2)
        tree = build_cluster_tree(points, capacity)
        basis = construct_basis(tree, m)
        with self._lock:
            self._store[key] = basis
        return basis


_IMAGE_BASES = _BasisCache()


def image_basis(h: int, w: int, m: int) -> SampletBasis:
    return _IMAGE_BASES.get(h, w, m)


def samplet_image_transform(img, spec: TransformSpec) -> CoefficientSet:
    img = as_image(img)
    if spec.kind != TransformKind.SAMPLET:
        raise AmraError("spec.kind must be SAMPLET")
    h, w, ch = img.shape
    basis = image_basis(h, w, spec.moments)
    flat = img.reshape(h * w, ch)
    coeffs, tags = samplet_transform(flat, basis, spec.level)
    data = np.zeros((h * w, ch))
    data[basis.tree.perm] = coeffs        # coefficient sits at its pixel slot
    level_map = np.full(h * w, -1, dtype=np.int64)
    level_map[basis.tree.perm] = tags
    level_map = level_map.reshape(h, w)
    present = sorted(np.unique(level_map).tolist())
    blocks = tuple(Block(str(t), (0, 0), (0, 0)) for t in present)
    layout = SubbandLayout(
        kind=TransformKind.SAMPLET,
        level=spec.level,
        coefficient_shape=(h, w),
        blocks=blocks,
        level_map=level_map,
        meta={
            "moments": spec.moments,
            "input_shape": [h, w],
            "tree_depth": basis.tree.max_depth,
            "level_convention": "one image level = two tree levels",
        },
    )
    return CoefficientSet(data.reshape(h, w, ch), layout)


def samplet_image_inverse(c: CoefficientSet) -> np.ndarray:
    lay = c.layout
    if lay.kind != TransformKind.SAMPLET:
        raise AmraError(f"expected SAMPLET layout, got {lay.kind}")
    h, w = lay.coefficient_shape
    ch = c.channels
    basis = image_basis(h, w, lay.meta["moments"])
    coeffs = c.data.reshape(h * w, ch)[basis.tree.perm]
    values = samplet_inverse(coeffs, basis, lay.level)
    return values.reshape(h, w, ch)
