import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from amra.core import (
    Block,
    CoefficientSet,
    SubbandLayout,
    TransformKind,
    TransformSpec,
)
from amra.features import blockwise_normalize, extract_features, feature_shape


def _two_block_set(left, right):
    h = max(len(left), len(right))
    data = np.zeros((h, 2, 1))
    data[: len(left), 0, 0] = left
    data[: len(right), 1, 0] = right
    lay = SubbandLayout(
        kind=TransformKind.DWT, level=1, coefficient_shape=(h, 2),
        blocks=(Block("l", (0, h), (0, 1)), Block("r", (0, h), (1, 2))),
    )
    return CoefficientSet(data, lay)


class TestBlockwiseNormalize:
    def test_divides_by_max_abs(self):
        c = _two_block_set([-2, 0, 4], [0, 0, 0])
        out = blockwise_normalize(c)
        np.testing.assert_allclose(out.data[:, 0, 0], [-0.5, 0, 1])

    def test_zero_block_untouched(self):
        c = _two_block_set([1, 2, 3], [0, 0, 0])
        out = blockwise_normalize(c)
        np.testing.assert_array_equal(out.data[:, 1, 0], [0, 0, 0])

    def test_blocks_independent(self):
        c = _two_block_set([1, 2], [10, 20])
        out = blockwise_normalize(c)
        np.testing.assert_allclose(out.data[:2, 0, 0], [0.5, 1])
        np.testing.assert_allclose(out.data[:2, 1, 0], [0.5, 1])

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        c = _two_block_set(rng.standard_normal(6), rng.standard_normal(6))
        once = blockwise_normalize(c)
        twice = blockwise_normalize(once)
        np.testing.assert_allclose(twice.data, once.data, atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.01, 100.0))
    def test_scale_invariant(self, alpha):
        rng = np.random.default_rng(7)
        vals = rng.standard_normal(8)
        a = blockwise_normalize(_two_block_set(vals, vals[::-1]))
        b = blockwise_normalize(_two_block_set(alpha * vals,
                                               alpha * vals[::-1]))
        np.testing.assert_allclose(a.data, b.data, atol=1e-12)

    def test_bounded_and_sparsity_preserved(self):
        rng = np.random.default_rng(1)
        vals = rng.standard_normal(10)
        vals[3] = 0.0
        out = blockwise_normalize(_two_block_set(vals, rng.standard_normal(10)))
        assert np.abs(out.data).max() <= 1.0 + 1e-15
        assert out.data[3, 0, 0] == 0.0

    def test_per_channel(self):
        data = np.stack([np.full((2, 2), 2.0), np.full((2, 2), 8.0)], axis=2)
        lay = SubbandLayout(
            kind=TransformKind.PIXELS, level=0, coefficient_shape=(2, 2),
            blocks=(Block("pixels", (0, 2), (0, 2)),),
        )
        out = blockwise_normalize(CoefficientSet(data, lay))
        assert np.allclose(out.data, 1.0)

    def test_samplet_level_map_blocks(self):
        x = np.random.default_rng(2).uniform(0, 255, (16, 16, 1))
        from amra.transforms import transform

        c = transform(x, TransformSpec.parse("kind=samplet,m=1,level=2"))
        out = blockwise_normalize(c)
        for b in out.layout.blocks:
            sub = out.data[out.layout.block_mask(b.name)]
            assert np.abs(sub).max() <= 1.0 + 1e-12


class TestExtractFeatures:
    def test_pixels_rescaled_to_unit(self):
        img = np.random.default_rng(0).uniform(0, 255, (16, 16, 3))
        f = extract_features(img, TransformSpec.parse("kind=pixels"))
        assert f.dtype == np.float32
        assert 0.999 <= f.max() <= 1.0 and f.min() >= 0.0
        # one global block per channel
        ch_max = np.abs(img).max(axis=(0, 1))
        np.testing.assert_allclose(f, img / ch_max, rtol=1e-6)

    def test_fswt_shape(self):
        img = np.zeros((128, 128, 3))
        spec = TransformSpec.parse("kind=fswt,wavelet=db3,level=3,boundary=reflect")
        assert feature_shape(img.shape, spec) == (141, 141, 3)

    def test_dwpt_channel_stacking(self):
        img = np.random.default_rng(1).uniform(0, 255, (64, 64, 3))
        f = extract_features(img, TransformSpec.parse("kind=dwpt,wavelet=haar,level=2"))
        assert f.shape == (16, 16, 3 * 16)

    def test_constant_image_details_zero(self):
        # haar taps are exact in float64; db taps leave ~1e-14 dust
        img = np.full((64, 64, 3), 80.0)
        spec = TransformSpec.parse("kind=dwt,wavelet=haar,level=2")
        f = extract_features(img, spec)
        # every detail block stays exactly zero under the zero-max rule
        from amra.transforms import transform

        lay = transform(img, spec).layout
        for b in lay.blocks:
            if b.name != "a":
                sub = f[b.rows[0]:b.rows[1], b.cols[0]:b.cols[1]]
                assert np.abs(sub).max() == 0.0
