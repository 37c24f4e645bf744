import numpy as np
import pytest

from amra.core import AmraError, TransformSpec
from amra.samplets import (
    build_cluster_tree,
    construct_basis,
    dense_basis_matrix,
    image_basis,
    moment_count,
    monomial_exponents,
    samplet_image_inverse,
    samplet_image_transform,
    samplet_inverse,
    samplet_transform,
)


def _grid_points(h, w):
    rows, cols = np.mgrid[0:h, 0:w]
    return np.stack([cols.ravel() + 0.5, rows.ravel() + 0.5], axis=1)


class TestClusterTree:
    def test_leaf_sizes(self):
        tree = build_cluster_tree(_grid_points(8, 8), leaf_capacity=4)
        leaves = np.where(tree.is_leaf(np.arange(tree.n_nodes)))[0]
        sizes = tree.hi[leaves] - tree.lo[leaves]
        assert sizes.max() <= 4 and sizes.min() >= 1

    def test_perm_is_permutation(self):
        tree = build_cluster_tree(_grid_points(5, 7), leaf_capacity=3)
        assert np.array_equal(np.sort(tree.perm), np.arange(35))

    def test_split_axis_longer_extent(self):
        # 16 x 2 grid: the first split must be along x (columns)
        tree = build_cluster_tree(_grid_points(2, 16), leaf_capacity=4)
        lc = tree.left[0]
        _, hi_l = tree.node_bbox(lc)
        lo_r, _ = tree.node_bbox(tree.right[0])
        assert hi_l[0] <= lo_r[0]

    def test_empty_rejected(self):
        with pytest.raises(AmraError):
            build_cluster_tree(np.zeros((0, 2)), 2)


class TestMoments:
    def test_moment_count(self):
        assert [moment_count(m) for m in (1, 2, 3, 4)] == [1, 3, 6, 10]

    def test_exponent_table(self):
        exps = monomial_exponents(2)
        assert exps.tolist() == [[0, 0], [1, 0], [0, 1]]


class TestBasis:
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_dense_orthogonal(self, m):
        tree = build_cluster_tree(_grid_points(16, 16),
                                  max(2 * moment_count(m), 2))
        basis = construct_basis(tree, m)
        T = dense_basis_matrix(basis)
        err = np.abs(T @ T.T - np.eye(tree.n_points)).max()
        assert err < 1e-9

    def test_dense_matches_fast(self):
        tree = build_cluster_tree(_grid_points(16, 16), 6)
        basis = construct_basis(tree, 2)
        v = np.random.default_rng(0).standard_normal(tree.n_points)
        T = dense_basis_matrix(basis)
        fast, _ = samplet_transform(v, basis)
        np.testing.assert_allclose(fast, T @ v, atol=1e-10)

    @pytest.mark.parametrize("m", [1, 2, 3, 4, 5, 6, 7])
    def test_vanishing_moments(self, m):
        # samplet coefficients of polynomial fields of degree < m vanish
        pts = _grid_points(16, 16)
        tree = build_cluster_tree(pts, max(2 * moment_count(m), 2))
        basis = construct_basis(tree, m)
        x, y = pts[:, 0] / 16, pts[:, 1] / 16
        rng = np.random.default_rng(m)
        poly = np.zeros(len(pts))
        for px, py in monomial_exponents(m):
            poly += rng.uniform(-1, 1) * x ** px * y ** py
        coeffs, tags = samplet_transform(poly, basis)
        assert np.abs(coeffs[tags >= 0]).max() < 1e-6

    def test_haar_pair_for_m1(self):
        # two points, m=1: the samplet is the normalized difference
        tree = build_cluster_tree(np.array([[0.0, 0.0], [1.0, 0.0]]), 1)
        basis = construct_basis(tree, 1)
        coeffs, tags = samplet_transform(np.array([3.0, 1.0]), basis)
        r = np.sqrt(2)
        assert abs(abs(coeffs[tags >= 0][0]) - 2.0 / r * 1.0) < 1e-12

    def test_round_trip(self):
        tree = build_cluster_tree(_grid_points(16, 16), 6)
        basis = construct_basis(tree, 2)
        v = np.random.default_rng(1).standard_normal((tree.n_points, 3))
        c, _ = samplet_transform(v, basis)
        back = samplet_inverse(c, basis)
        np.testing.assert_allclose(back, v, atol=1e-10)

    def test_norm_preserved(self):
        tree = build_cluster_tree(_grid_points(16, 16), 12)
        basis = construct_basis(tree, 3)
        v = np.random.default_rng(2).standard_normal(tree.n_points)
        c, _ = samplet_transform(v, basis)
        assert abs(np.linalg.norm(c) - np.linalg.norm(v)) < 1e-9


class TestImageInterface:
    def test_round_trip(self):
        x = np.random.default_rng(0).uniform(0, 255, (32, 32, 3))
        spec = TransformSpec.parse("kind=samplet,m=3,level=3")
        c = samplet_image_transform(x, spec)
        np.testing.assert_allclose(samplet_image_inverse(c), x, atol=1e-8)

    def test_level_map_tags(self):
        x = np.random.default_rng(1).uniform(0, 255, (32, 32, 1))
        c = samplet_image_transform(x, TransformSpec.parse("kind=samplet,m=1,level=2"))
        lm = c.layout.level_map
        assert lm is not None and lm.shape == (32, 32)
        assert (lm == -1).sum() > 0  # approximation block present
        # finest tags come from the deepest tree levels
        depth = c.layout.meta["tree_depth"]
        assert depth - 1 <= lm.max() <= depth
        assert set(np.unique(lm).tolist()) <= set(range(-1, depth + 1))

    def test_constant_image_sparsity(self):
        # full depth: a constant image keeps only the scaling coefficients
        x = np.full((16, 16, 1), 7.0)
        basis = image_basis(16, 16, 2)
        coeffs, tags = samplet_transform(x.reshape(-1, 1), basis)
        assert np.abs(coeffs[tags >= 0]).max() < 1e-10

    def test_basis_cache_reuse(self):
        b1 = image_basis(16, 16, 2)
        b2 = image_basis(16, 16, 2)
        assert b1 is b2
