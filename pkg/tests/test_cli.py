import json

import numpy as np
import pytest
from click.testing import CliRunner

from amra.cli import main
from amra.core import CoefficientSet, tensor_read, tensor_write


@pytest.fixture
def runner():
    return CliRunner()


def _invoke(runner, *args):
    return runner.invoke(main, list(args), catch_exceptions=False)


class TestPatternAndSparsity:
    def test_checkerboard_total_five(self, runner, tmp_path):
        pat = str(tmp_path / "pat.amra")
        r = _invoke(runner, "pattern", "--kind", "iso_squares", "--n", "256",
                    "--grid", "4", "--out", pat)
        assert r.exit_code == 0
        r = _invoke(runner, "sparsity", "--spec", "kind=dwt,wavelet=haar,level=8",
                    "--in", pat)
        assert r.exit_code == 0
        last = r.output.strip().splitlines()[-1]
        assert last == "total,5"

    def test_png_output(self, runner, tmp_path):
        out = str(tmp_path / "p.png")
        r = _invoke(runner, "pattern", "--kind", "aniso_rects", "--n", "64",
                    "--count", "10", "--seed", "1", "--out", out)
        assert r.exit_code == 0
        from PIL import Image

        assert Image.open(out).size == (64, 64)


class TestTransformLifecycle:
    def test_transform_inverse_round_trip(self, runner, tmp_path):
        img = np.random.default_rng(0).uniform(0, 255, (32, 32, 3))
        src = str(tmp_path / "img.amra")
        tensor_write(img, src)
        coeffs = str(tmp_path / "c.amra")
        rec = str(tmp_path / "r.amra")
        r = _invoke(runner, "transform", "--spec",
                    "kind=fswt,wavelet=db2,level=2,boundary=reflect",
                    "--in", src, "--out", coeffs)
        assert r.exit_code == 0
        back = tensor_read(coeffs)
        assert isinstance(back, CoefficientSet)
        r = _invoke(runner, "inverse", "--in", coeffs, "--out", rec)
        assert r.exit_code == 0
        np.testing.assert_allclose(np.asarray(tensor_read(rec)), img, atol=1e-8)

    def test_samplet_layout_tagged(self, runner, tmp_path):
        img = np.random.default_rng(1).uniform(0, 255, (32, 32, 1))
        src = str(tmp_path / "img.amra")
        tensor_write(img, src)
        out = str(tmp_path / "s.amra")
        r = _invoke(runner, "transform", "--spec", "kind=samplet,m=3,level=3",
                    "--in", src, "--out", out)
        assert r.exit_code == 0
        c = tensor_read(out)
        assert c.layout.level_map is not None

    def test_normalize(self, runner, tmp_path):
        img = np.random.default_rng(2).uniform(0, 255, (32, 32, 1))
        src = str(tmp_path / "img.amra")
        tensor_write(img, src)
        coeffs = str(tmp_path / "c.amra")
        normed = str(tmp_path / "n.amra")
        _invoke(runner, "transform", "--spec", "kind=dwt,wavelet=haar,level=2",
                "--in", src, "--out", coeffs)
        r = _invoke(runner, "normalize", "--in", coeffs, "--out", normed)
        assert r.exit_code == 0
        assert np.abs(tensor_read(normed).data).max() <= 1.0 + 1e-12


class TestPerturbCommand:
    def test_record_json(self, runner, tmp_path):
        img = np.random.default_rng(0).uniform(0, 255, (32, 32, 3))
        src = str(tmp_path / "img.amra")
        tensor_write(img, src)
        out = str(tmp_path / "p.amra")
        r = _invoke(runner, "perturb", "--seed", "3", "--in", src, "--out", out)
        assert r.exit_code == 0
        record = json.loads(r.output.strip().splitlines()[-1])
        assert "perturbation" in record


class TestExitCodes:
    def test_usage_error_is_2(self, runner):
        r = runner.invoke(main, ["sparsity", "--spec", "kind=dwt"])
        assert r.exit_code == 2

    def test_unknown_spec_token_named(self, runner, tmp_path):
        src = str(tmp_path / "img.amra")
        tensor_write(np.zeros((16, 16, 1)), src)
        r = runner.invoke(main, ["transform", "--spec", "kind=dwt,bogus=1",
                                 "--in", src, "--out", str(tmp_path / "o.amra")])
        assert r.exit_code != 0
        assert "bogus" in str(r.exception or r.output)

    def test_help_names_specs(self, runner):
        r = _invoke(runner, "transform", "--help")
        assert "kind=fswt" in r.output
