"""Dataset ingestion, deterministic splitting, and batched feature streaming.

A manifest is a list of (path, label, source tag) entries with dense labels,
serialized as JSON-lines. Splitting shuffles the whole entry list with a
seeded generator and slices it contiguously by the configured fractions,
mirroring a global-shuffle-then-partition protocol.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .core import AmraError, TransformSpec, tensor_read, tensor_write
from .features import extract_features
from .perturb import derive_seed, perturb_pipeline

log = logging.getLogger(__name__)

_IMAGE_EXTS = (".png", ".jpg", ".jpeg")


def load_image(path, size: int | None = 128) -> np.ndarray:
    """Decode an image to H x W x C float64 in [0, 255]; bilinear resize to
    size x size when a size is given and the image differs."""
    im = Image.open(path)
    if im.mode not in ("L", "RGB"):
        im = im.convert("RGB")
    if size is not None and im.size != (size, size):
        im = im.resize((size, size), Image.BILINEAR)
    arr = np.asarray(im, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr


@dataclass(frozen=True)
class Entry:
    path: str
    label: int
    source: str


@dataclass(frozen=True)
class Manifest:
    entries: tuple
    class_names: tuple

    def __post_init__(self):
        paths = [e.path for e in self.entries]
        if len(set(paths)) != len(paths):
            raise AmraError("duplicate paths in manifest")
        labels = {e.label for e in self.entries}
        if labels and not labels <= set(range(len(self.class_names))):
            raise AmraError("labels must lie in 0..c-1 for the declared classes")

    @property
    def checksum(self) -> str:
        h = hashlib.sha256()
        for e in self.entries:
            h.update(f"{e.path}\t{e.label}\t{e.source}\n".encode())
        return h.hexdigest()

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(json.dumps({"classes": list(self.class_names)}) + "\n")
            for e in self.entries:
                fh.write(json.dumps(
                    {"path": e.path, "label": e.label, "source": e.source}) + "\n")

    @classmethod
    def load(cls, path) -> "Manifest":
        with open(path) as fh:
            header = json.loads(fh.readline())
            entries = tuple(
                Entry(d["path"], int(d["label"]), d.get("source", ""))
                for d in map(json.loads, fh)
            )
        return cls(entries, tuple(header["classes"]))


def build_manifest(class_dirs: dict) -> Manifest:
    """Scan one directory per class; deterministic lexicographic order.

    ``class_dirs`` maps class name -> directory. Unreadable files are
    skipped with a logged warning; an empty class is an error.
    """
    names = tuple(sorted(class_dirs))
    entries = []
    for label, name in enumerate(names):
        root = class_dirs[name]
        found = 0
        for fname in sorted(os.listdir(root)):
            if not fname.lower().endswith(_IMAGE_EXTS):
                continue
            full = os.path.join(root, fname)
            try:
                with Image.open(full) as im:
                    im.verify()
            except Exception as e:
                log.warning("skipping unreadable image %s: %s", full, e)
                continue
            entries.append(Entry(full, label, name))
            found += 1
        if found == 0:
            raise AmraError(f"class {name!r} has no readable images in {root}")
    return Manifest(tuple(entries), names)


@dataclass(frozen=True)
class SplitConfig:
    fractions: tuple = (2 / 3, 2 / 15, 1 / 5)
    seed: int = 0

    def __post_init__(self):
        if any(f < 0 for f in self.fractions):
            raise AmraError("fractions must be >= 0")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise AmraError("fractions must sum to 1")


def split(manifest: Manifest, cfg: SplitConfig):
    """Seeded uniform shuffle, then contiguous slices by fraction.

    Returns (train, val, test) manifests; they partition the input.
    """
    n = len(manifest.entries)
    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(n)
    n_train = int(round(n * cfg.fractions[0]))
    n_val = int(round(n * cfg.fractions[1]))
    cuts = (order[:n_train], order[n_train:n_train + n_val],
            order[n_train + n_val:])
    out = []
    for idx in cuts:
        if n > 0 and len(idx) == 0:
            raise AmraError("split fraction leaves an empty partition")
        out.append(Manifest(tuple(manifest.entries[i] for i in idx),
                            manifest.class_names))
    return tuple(out)


def _cache_key(path: str, spec: TransformSpec, perturb_seed) -> str:
    h = hashlib.sha256()
    h.update(f"{path}\n{spec}\n{perturb_seed}".encode())
    return h.hexdigest()


def stream_batches(manifest: Manifest, spec: TransformSpec, batch: int,
                   perturb_seed: int | None = None, cache_dir: str | None = None):
    """Yield (feature batch, labels) in manifest order; the last partial
    batch is kept. Optional perturbation uses a per-image seed derived from
    (perturb_seed, entry index); an on-disk cache stores float32 features
    keyed by (path, spec, perturb seed)."""
    if batch < 1:
        raise AmraError("batch must be >= 1")
    if cache_dir is not None:
        os.makedirs(cache_dir, exist_ok=True)
    feats, labels = [], []
    for idx, entry in enumerate(manifest.entries):
        cache_path = None
        feat = None
        if cache_dir is not None:
            key = _cache_key(entry.path, spec, perturb_seed)
            cache_path = os.path.join(cache_dir, key + ".amra")
            if os.path.exists(cache_path):
                try:
                    feat = np.asarray(tensor_read(cache_path), dtype=np.float32)
                except AmraError:
                    log.warning("corrupt cache entry %s, recomputing", cache_path)
                    feat = None
        if feat is None:
            try:
                img = load_image(entry.path)
            except Exception as e:
                log.warning("skipping undecodable image %s: %s", entry.path, e)
                continue
            if perturb_seed is not None:
                rng = np.random.default_rng(derive_seed(perturb_seed, idx))
                img, _ = perturb_pipeline(img, rng)
            feat = extract_features(img, spec)
            if cache_path is not None:
                tensor_write(feat, cache_path, dtype=np.float32)
        feats.append(feat)
        labels.append(entry.label)
        if len(feats) == batch:
            yield np.stack(feats), np.asarray(labels)
            feats, labels = [], []
    if feats:
        yield np.stack(feats), np.asarray(labels)


def load_all(manifest: Manifest, spec: TransformSpec,
             perturb_seed: int | None = None, cache_dir: str | None = None):
    """Materialize every feature tensor; desk-scale convenience wrapper."""
    xs, ys = [], []
    for xb, yb in stream_batches(manifest, spec, 256, perturb_seed, cache_dir):
        xs.append(xb)
        ys.append(yb)
    if not xs:
        raise AmraError("manifest produced no features")
    return np.concatenate(xs), np.concatenate(ys)
