import numpy as np
import pytest

from amra.core import TransformSpec
from amra.dct import dct2, idct2
from amra.transforms import LayoutError, transform


def _img(h=32, w=32, c=3, seed=0):
    return np.random.default_rng(seed).uniform(0, 255, (h, w, c))


class TestDct:
    def test_round_trip(self):
        x = _img()
        np.testing.assert_allclose(idct2(dct2(x)), x, atol=1e-10)

    def test_orthonormal_norm_preserved(self):
        x = _img(48, 31)
        c = dct2(x)
        assert abs(np.linalg.norm(c.data) - np.linalg.norm(x)) < 1e-9

    def test_constant_image_single_dc(self):
        c = dct2(np.full((16, 16, 1), 5.0))
        assert abs(c.data[0, 0, 0] - 5.0 * 16) < 1e-10
        rest = c.data.copy()
        rest[0, 0, 0] = 0.0
        assert np.abs(rest).max() < 1e-10

    def test_single_block_layout(self):
        c = dct2(_img(8, 12, 1))
        assert len(c.layout.blocks) == 1
        assert c.layout.validate_tiling()

    def test_wrong_layout_rejected(self):
        c = transform(_img(), TransformSpec.parse("kind=pixels"))
        with pytest.raises(LayoutError):
            idct2(c)
