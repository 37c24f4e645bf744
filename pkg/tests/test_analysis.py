import numpy as np
import pytest

from amra.analysis import (
    average_fingerprint,
    generate_pattern,
    pca_project,
    sparsity_count,
)
from amra.core import AmraError, TransformSpec
from amra.transforms import transform


class TestSparsityCount:
    def test_zero_tensor(self):
        c = transform(np.zeros((16, 16, 1)), TransformSpec.parse("kind=dct"))
        assert sparsity_count(c)["total"] == 0

    def test_checkerboard_haar_full_depth(self):
        # frozen regression value: 1 approximation + 4 diagonal at the 4x4 scale
        img = generate_pattern("iso_squares", 256, grid=4)
        c = transform(img, TransformSpec.parse("kind=dwt,wavelet=haar,level=8"))
        counts = sparsity_count(c, tol=1e-10)
        assert counts["total"] == 5
        assert counts["blocks"]["a"] == 1
        assert counts["blocks"]["d7"] == 4

    def test_dct_much_denser_than_wavelet(self):
        img = generate_pattern("iso_squares", 256, grid=4)
        dct_total = sparsity_count(
            transform(img, TransformSpec.parse("kind=dct")))["total"]
        assert dct_total > 1000

    def test_monotone_in_tol(self):
        c = transform(np.random.default_rng(0).uniform(0, 255, (32, 32, 1)),
                      TransformSpec.parse("kind=dwt,wavelet=db2,level=2"))
        counts = [sparsity_count(c, tol=t)["total"]
                  for t in (0.0, 1e-10, 1e-4, 1e-1)]
        assert counts == sorted(counts, reverse=True)

    def test_negative_tol_rejected(self):
        c = transform(np.zeros((8, 8, 1)), TransformSpec.parse("kind=pixels"))
        with pytest.raises(AmraError):
            sparsity_count(c, tol=-1.0)


class TestGeneratePattern:
    def test_iso_squares_geometry(self):
        img = generate_pattern("iso_squares", 256, grid=4)
        assert img.shape == (256, 256, 1)
        assert set(np.unique(img)) == {0.0, 255.0}
        # 64x64 squares, alternating
        assert img[0, 0, 0] != img[0, 64, 0]
        assert img[0, 0, 0] == img[64, 64, 0]
        assert (img[:64, :64] == img[0, 0, 0]).all()

    def test_aniso_rect_count(self):
        img = generate_pattern("aniso_rects", 256, count=40, seed=0)
        assert img.shape == (256, 256, 1)
        assert set(np.unique(img)) <= {0.0, 255.0}

    def test_aniso_deterministic(self):
        a = generate_pattern("aniso_rects", 128, count=30, seed=5)
        b = generate_pattern("aniso_rects", 128, count=30, seed=5)
        np.testing.assert_array_equal(a, b)

    def test_impossible_partition(self):
        with pytest.raises(AmraError):
            generate_pattern("aniso_rects", 4, count=100)

    def test_non_power_of_two_rejected(self):
        with pytest.raises(AmraError):
            generate_pattern("iso_squares", 100)


class TestAverageFingerprint:
    def test_single_image(self):
        img = np.random.default_rng(0).uniform(0, 255, (32, 32, 1))
        spec = TransformSpec.parse("kind=dwt,wavelet=haar,level=2")
        fp = average_fingerprint([img], spec)
        from amra.features import blockwise_normalize

        expect = blockwise_normalize(transform(img, spec))
        np.testing.assert_allclose(fp.data, expect.data, atol=1e-12)

    def test_antisymmetric_pair_cancels(self):
        img = np.random.default_rng(1).standard_normal((32, 32, 1))
        spec = TransformSpec.parse("kind=fswt,wavelet=db2,level=2")
        fp = average_fingerprint([img, -img], spec)
        assert np.abs(fp.data).max() < 1e-10

    def test_noise_shrinks_like_sqrt_n(self):
        rng = np.random.default_rng(2)
        spec = TransformSpec.parse("kind=dwt,wavelet=haar,level=1")
        imgs = [rng.standard_normal((32, 32, 1)) for _ in range(100)]
        single = transform(imgs[0], spec)
        many = sum(transform(im, spec).data for im in imgs) / 100

        def detail_mag(data, lay):
            b = lay.block("d1")
            return np.abs(data[b.rows[0]:b.rows[1], b.cols[0]:b.cols[1]]).mean()

        ratio = detail_mag(many, single.layout) / detail_mag(
            single.data, single.layout)
        assert 0.05 < ratio < 0.2

    def test_size_mismatch_rejected(self):
        spec = TransformSpec.parse("kind=dct")
        with pytest.raises(AmraError):
            average_fingerprint([np.zeros((16, 16, 1)), np.zeros((8, 8, 1))],
                                spec)

    def test_empty_rejected(self):
        with pytest.raises(AmraError):
            average_fingerprint([], TransformSpec.parse("kind=dct"))


class TestPca:
    def test_line_explains_variance(self):
        t = np.linspace(-1, 1, 50)
        direction = np.array([1.0, 2.0, -0.5, 3.0])
        samples = t[:, None] * direction
        _, _, ratios = pca_project(samples, k=3)
        assert ratios[0] > 0.999

    def test_components_orthonormal(self):
        X = np.random.default_rng(0).standard_normal((40, 20))
        comps, _, ratios = pca_project(X, k=3)
        np.testing.assert_allclose(comps @ comps.T, np.eye(3), atol=1e-10)
        assert ratios[0] >= ratios[1] >= ratios[2]

    def test_sign_convention(self):
        X = np.random.default_rng(1).standard_normal((30, 10))
        comps, _, _ = pca_project(X, k=2)
        for row in comps:
            assert row[np.argmax(np.abs(row))] > 0

    def test_separated_clusters(self):
        rng = np.random.default_rng(3)
        a = rng.normal(0, 1, (50, 8))
        b = rng.normal(10, 1, (50, 8))
        _, coords, _ = pca_project(np.vstack([a, b]), k=1)
        thresh = coords[:, 0].mean()
        labels = coords[:, 0] > thresh
        acc = max(labels[:50].mean() + (1 - labels[50:]).mean(),
                  (1 - labels[:50]).mean() + labels[50:].mean()) / 2
        assert acc == 1.0

    def test_k_too_large(self):
        with pytest.raises(AmraError):
            pca_project(np.zeros((2, 5)), k=3)
