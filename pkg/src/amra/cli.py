"""Command-line entry point for the full pipeline.

Every subcommand emits machine-readable output (AMRA tensors, CSV, JSON);
there is no plotting. Seeded invocations are bit-reproducible except for
JPEG codec output, which depends on the installed codec version.

Exit codes: 0 success, 2 usage error, 1 runtime error.
"""

from __future__ import annotations

import csv
import json
import sys

import click
import numpy as np

from . import analysis, classifier, dataset, features, perturb
from .core import AmraError, CoefficientSet, TransformSpec, tensor_read, tensor_write
from .transforms import inverse_transform, transform

SPEC_HELP = (
    "comma-separated transform spec, e.g. "
    "'kind=fswt,wavelet=db3,level=3,boundary=reflect', "
    "'kind=samplet,m=3,level=3', 'kind=dct', 'kind=pixels'; "
    "wavelets: haar, db2..db7; boundary: reflect | boundary"
)


def _read_input(path, size=None):
    if str(path).endswith(".amra"):
        obj = tensor_read(path)
        return obj.data if isinstance(obj, CoefficientSet) else np.asarray(obj)
    return dataset.load_image(path, size=size)


def _write_output(arr, path):
    if str(path).endswith(".png"):
        from PIL import Image

        u8 = np.clip(np.round(np.asarray(arr)), 0, 255).astype(np.uint8)
        if u8.ndim == 3 and u8.shape[2] == 1:
            u8 = u8[:, :, 0]
        Image.fromarray(u8).save(path)
    else:
        tensor_write(arr, path)


@click.group()
def main():
    """Multiresolution transforms and the source-identification pipeline."""


@main.command("transform")
@click.option("--spec", "spec_text", required=True, help=SPEC_HELP)
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def transform_cmd(spec_text, in_path, out_path):
    """Transform an image; write coefficients + layout as AMRA."""
    spec = TransformSpec.parse(spec_text)
    img = _read_input(in_path)
    tensor_write(transform(img, spec), out_path)


@main.command("inverse")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def inverse_cmd(in_path, out_path):
    """Reconstruct an image from an AMRA coefficient file."""
    obj = tensor_read(in_path)
    if not isinstance(obj, CoefficientSet):
        raise AmraError("input has no layout record; cannot invert")
    _write_output(inverse_transform(obj), out_path)


@main.command("normalize")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def normalize_cmd(in_path, out_path):
    """Block-wise normalize an AMRA coefficient file."""
    obj = tensor_read(in_path)
    if not isinstance(obj, CoefficientSet):
        raise AmraError("input has no layout record; cannot normalize")
    tensor_write(features.blockwise_normalize(obj), out_path)


@main.command("pattern")
@click.option("--kind", required=True,
              type=click.Choice(["iso_squares", "aniso_rects"]))
@click.option("--n", required=True, type=int)
@click.option("--grid", default=4, type=int, show_default=True)
@click.option("--count", default=40, type=int, show_default=True)
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def pattern_cmd(kind, n, grid, count, seed, out_path):
    """Generate a canonical block-constant test pattern."""
    img = analysis.generate_pattern(kind, n, grid=grid, count=count, seed=seed)
    _write_output(img, out_path)


@main.command("sparsity")
@click.option("--spec", "spec_text", required=True, help=SPEC_HELP)
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--tol", default=1e-10, type=float, show_default=True)
@click.option("--out", "out_path", default="-", type=click.Path(allow_dash=True))
def sparsity_cmd(spec_text, in_path, tol, out_path):
    """Nonzero-coefficient counts per block, as CSV."""
    spec = TransformSpec.parse(spec_text)
    c = transform(_read_input(in_path), spec)
    counts = analysis.sparsity_count(c, tol=tol)
    with click.open_file(out_path, "w") as fh:
        w = csv.writer(fh)
        w.writerow(["block", "count"])
        for name, cnt in counts["blocks"].items():
            w.writerow([name, cnt])
        w.writerow(["total", counts["total"]])


@main.command("fingerprint")
@click.option("--spec", "spec_text", required=True, help=SPEC_HELP)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.argument("images", nargs=-1, required=True,
                type=click.Path(exists=True))
def fingerprint_cmd(spec_text, out_path, images):
    """Average transform coefficients over an image set (normalized)."""
    spec = TransformSpec.parse(spec_text)
    fp = analysis.average_fingerprint(images, spec)
    tensor_write(fp, out_path)


@main.command("pca")
@click.option("--k", default=3, type=int, show_default=True)
@click.option("--out", "out_path", default="-", type=click.Path(allow_dash=True))
@click.argument("feature_files", nargs=-1, required=True,
                type=click.Path(exists=True))
def pca_cmd(k, out_path, feature_files):
    """Top-k PCA coordinates of flattened AMRA feature tensors, as CSV."""
    feats = []
    for path in feature_files:
        obj = tensor_read(path)
        feats.append(obj.data if isinstance(obj, CoefficientSet) else obj)
    _, coords, ratios = analysis.pca_project(feats, k=k)
    with click.open_file(out_path, "w") as fh:
        w = csv.writer(fh)
        w.writerow(["file"] + [f"pc{i + 1}" for i in range(k)])
        for path, row in zip(feature_files, coords):
            w.writerow([path] + [f"{v:.10g}" for v in row])
        w.writerow(["explained_variance"] + [f"{r:.10g}" for r in ratios])


@main.command("perturb")
@click.option("--seed", required=True, type=int)
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def perturb_cmd(seed, in_path, out_path):
    """Apply the seeded perturbation pipeline; record goes to stdout as JSON."""
    img = _read_input(in_path)
    rng = np.random.default_rng(seed)
    out, record = perturb.perturb_pipeline(img, rng)
    _write_output(out, out_path)
    click.echo(json.dumps(record))


def _parse_seeds(text):
    return tuple(int(s) for s in text.split(",") if s.strip())


@main.command("train")
@click.option("--spec", "spec_text", required=True, help=SPEC_HELP)
@click.option("--data", "manifest_path", required=True,
              type=click.Path(exists=True), help="JSON-lines manifest")
@click.option("--split", "split_text", default="0.667,0.133,0.2",
              show_default=True)
@click.option("--seed", default=0, type=int, show_default=True,
              help="split shuffle seed")
@click.option("--seeds", default="0,1,2,3,4", show_default=True,
              help="training seeds, comma separated")
@click.option("--epochs", default=10, type=int, show_default=True)
@click.option("--batch", default=128, type=int, show_default=True)
@click.option("--cache", "cache_dir", default=None, type=click.Path())
@click.option("--out", "out_dir", default=None, type=click.Path(),
              help="checkpoint directory (last seed's model)")
def train_cmd(spec_text, manifest_path, split_text, seed, seeds, epochs,
              batch, cache_dir, out_dir):
    """Train over multiple seeds; print max/mean/std test accuracy as JSON."""
    spec = TransformSpec.parse(spec_text)
    fractions = tuple(float(f) for f in split_text.split(","))
    # normalize rounding slop in user-given fractions
    fractions = tuple(f / sum(fractions) for f in fractions)
    manifest = dataset.Manifest.load(manifest_path)
    tr, va, te = dataset.split(manifest, dataset.SplitConfig(fractions, seed))
    xt, yt = dataset.load_all(tr, spec, cache_dir=cache_dir)
    xv, yv = dataset.load_all(va, spec, cache_dir=cache_dir)
    xe, ye = dataset.load_all(te, spec, cache_dir=cache_dir)
    cfg = classifier.TrainConfig(batch=batch, epochs=epochs,
                                 seeds=_parse_seeds(seeds))
    accs = []
    model = None
    for s in cfg.seeds:
        model, _ = classifier.train(xt, yt, cfg, s, val=(xv, yv))
        accs.append(evaluate_accuracy := classifier.evaluate(model, xe, ye))
        click.echo(f"seed {s}: test accuracy {evaluate_accuracy:.4f}",
                   err=True)
    if out_dir is not None and model is not None:
        classifier.save_checkpoint(model, out_dir)
    stats = classifier.multi_seed_stats(accs)
    stats["label"] = spec.label()
    click.echo(json.dumps(stats))


@main.command("evaluate")
@click.option("--spec", "spec_text", required=True, help=SPEC_HELP)
@click.option("--checkpoint", "ckpt_dir", required=True,
              type=click.Path(exists=True))
@click.option("--data", "manifest_path", required=True,
              type=click.Path(exists=True))
@click.option("--perturb", "perturb_seed", default=None, type=int,
              help="apply the seeded perturbation pipeline before features")
def evaluate_cmd(spec_text, ckpt_dir, manifest_path, perturb_seed):
    """Score a checkpoint on a manifest; prints JSON accuracy."""
    spec = TransformSpec.parse(spec_text)
    manifest = dataset.Manifest.load(manifest_path)
    x, y = dataset.load_all(manifest, spec, perturb_seed=perturb_seed)
    model = classifier.load_checkpoint(ckpt_dir)
    acc = classifier.evaluate(model, x, y)
    click.echo(json.dumps({"accuracy": acc, "samples": int(len(y)),
                           "perturb_seed": perturb_seed}))


def run():
    try:
        main(standalone_mode=False)
    except click.UsageError as e:
        e.show()
        sys.exit(2)
    except click.ClickException as e:
        e.show()
        sys.exit(1)
    except click.Abort:
        sys.exit(1)
    except AmraError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    run()
