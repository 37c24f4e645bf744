"""Shallow CNN classifier with seeded deterministic training.

Architecture: conv(3x3, same padding) -> ReLU for channel progression
in->3->8, average pool 2, conv->16, pool 2, conv->32, flatten, dense to
the class scores. With same padding only the two pooling stages shrink
the spatial size, so the dense input is 32*d_h*d_w with
d = floor(floor(H'/2)/2). Trained with Adam, softmax cross-entropy.

Everything is a pure function of (data, seed): initialization draws from
an explicit torch.Generator, and epoch shuffles come from a numpy
Generator derived from the same seed.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from .core import AmraError, tensor_read, tensor_write


@dataclass
class TrainConfig:
    batch: int = 128
    lr: float = 0.001
    epochs: int = 10
    seeds: tuple = (0, 1, 2, 3, 4)
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8

    def __post_init__(self):
        if self.batch < 1 or self.epochs < 1:
            raise AmraError("batch and epochs must be >= 1")


class ShallowCnn(nn.Module):
    """Four 3x3 conv layers (same padding), two average pools, one dense."""

    def __init__(self, in_channels: int, spatial: tuple, classes: int):
        super().__init__()
        h, w = spatial
        if min(h, w) < 8:
            raise AmraError(f"spatial size {spatial} too small (needs >= 8)")
        self.conv1 = nn.Conv2d(in_channels, 3, 3, padding=1)
        self.conv2 = nn.Conv2d(3, 8, 3, padding=1)
        self.conv3 = nn.Conv2d(8, 16, 3, padding=1)
        self.conv4 = nn.Conv2d(16, 32, 3, padding=1)
        self.d = (h // 2 // 2, w // 2 // 2)
        self.dense = nn.Linear(32 * self.d[0] * self.d[1], classes)
        self.in_channels = in_channels
        self.spatial = (h, w)
        self.classes = classes

    def forward(self, x):
        x = F.relu(self.conv1(x))
        x = F.relu(self.conv2(x))
        x = F.avg_pool2d(x, 2)
        x = F.relu(self.conv3(x))
        x = F.avg_pool2d(x, 2)
        x = F.relu(self.conv4(x))
        return self.dense(x.flatten(1))


def param_count(feature_shape: tuple, classes: int) -> int:
    """Total trainable parameter count for a given H' x W' x C' feature shape."""
    h, w, c = feature_shape
    d = (h // 2 // 2) * (w // 2 // 2)
    convs = (c * 9 + 1) * 3 + (3 * 9 + 1) * 8 + (8 * 9 + 1) * 16 + (16 * 9 + 1) * 32
    return convs + (32 * d + 1) * classes


def init_params(seed: int, feature_shape: tuple, classes: int) -> ShallowCnn:
    """Seeded uniform fan-in initialization; same seed gives identical params."""
    h, w, c = feature_shape
    model = ShallowCnn(c, (h, w), classes)
    gen = torch.Generator().manual_seed(int(seed))
    with torch.no_grad():
        for m in (model.conv1, model.conv2, model.conv3, model.conv4, model.dense):
            if isinstance(m, nn.Conv2d):
                fan_in = m.in_channels * m.kernel_size[0] * m.kernel_size[1]
            else:
                fan_in = m.in_features
            bound = 1.0 / np.sqrt(fan_in)
            m.weight.uniform_(-bound, bound, generator=gen)
            m.bias.uniform_(-bound, bound, generator=gen)
    return model


def _to_batch(features: np.ndarray, dtype=torch.float32) -> torch.Tensor:
    # N x H x W x C -> N x C x H x W
    t = torch.as_tensor(np.ascontiguousarray(features), dtype=dtype)
    return t.permute(0, 3, 1, 2).contiguous()


def loss_and_grad(model: ShallowCnn, features, labels):
    """Softmax cross-entropy loss and per-parameter gradients (for the
    finite-difference oracle; call on a .double() model for 64-bit)."""
    dtype = next(model.parameters()).dtype
    x = _to_batch(np.asarray(features), dtype=dtype)
    y = torch.as_tensor(np.asarray(labels), dtype=torch.long)
    model.zero_grad()
    loss = F.cross_entropy(model(x), y)
    loss.backward()
    grads = {n: p.grad.detach().clone().numpy() for n, p in model.named_parameters()}
    return float(loss.item()), grads


@dataclass
class History:
    loss: list = field(default_factory=list)
    train_accuracy: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)


def evaluate(model: ShallowCnn, features, labels, batch: int = 256) -> float:
    """Fraction of argmax-correct predictions."""
    x = np.asarray(features)
    y = np.asarray(labels)
    if len(x) == 0:
        raise AmraError("empty evaluation set")
    correct = 0
    model.eval()
    with torch.no_grad():
        for i in range(0, len(x), batch):
            scores = model(_to_batch(x[i:i + batch],
                                     dtype=next(model.parameters()).dtype))
            correct += int((scores.argmax(1).numpy() == y[i:i + batch]).sum())
    return correct / len(x)


def train(features, labels, cfg: TrainConfig, seed: int,
          val: tuple | None = None, max_steps: int | None = None):
    """Adam training with seeded per-epoch shuffles.

    Returns (model, History). ``val`` is an optional (features, labels)
    pair scored after each epoch; ``max_steps`` caps total update steps.
    """
    x = np.asarray(features, dtype=np.float32)
    y = np.asarray(labels)
    if len(x) == 0:
        raise AmraError("empty training set")
    model = init_params(seed, x.shape[1:], int(y.max()) + 1 if val is None
                        else max(int(y.max()), int(np.max(val[1]))) + 1)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr,
                           betas=cfg.betas, eps=cfg.eps)
    rng = np.random.default_rng(seed)
    hist = History()
    steps = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(len(x))
        model.train()
        epoch_loss = 0.0
        nb = 0
        for i in range(0, len(order), cfg.batch):
            idx = order[i:i + cfg.batch]
            xb = _to_batch(x[idx])
            yb = torch.as_tensor(y[idx], dtype=torch.long)
            opt.zero_grad()
            loss = F.cross_entropy(model(xb), yb)
            loss.backward()
            opt.step()
            epoch_loss += float(loss.item())
            nb += 1
            steps += 1
            if max_steps is not None and steps >= max_steps:
                break
        hist.loss.append(epoch_loss / max(nb, 1))
        hist.train_accuracy.append(evaluate(model, x, y))
        if val is not None:
            hist.val_accuracy.append(evaluate(model, val[0], val[1]))
        if max_steps is not None and steps >= max_steps:
            break
    return model, hist


def multi_seed_stats(accuracies) -> dict:
    """Max, mean and sample standard deviation over seed runs.

    A single run reports std 0 and flags it.
    """
    a = np.asarray(list(accuracies), dtype=np.float64)
    if a.size == 0:
        raise AmraError("no accuracies given")
    std = float(a.std(ddof=1)) if a.size > 1 else 0.0
    return {
        "max": float(a.max()),
        "mean": float(a.mean()),
        "std": std,
        "runs": int(a.size),
        "single_seed": bool(a.size == 1),
    }


def save_checkpoint(model: ShallowCnn, directory: str) -> None:
    """One AMRA tensor per parameter block plus a JSON manifest."""
    os.makedirs(directory, exist_ok=True)
    names = []
    for name, p in model.named_parameters():
        fname = name.replace(".", "_") + ".amra"
        tensor_write(p.detach().numpy().astype(np.float64),
                     os.path.join(directory, fname))
        names.append({"param": name, "file": fname})
    manifest = {
        "in_channels": model.in_channels,
        "spatial": list(model.spatial),
        "classes": model.classes,
        "params": names,
    }
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1)


def load_checkpoint(directory: str) -> ShallowCnn:
    with open(os.path.join(directory, "manifest.json")) as fh:
        manifest = json.load(fh)
    model = ShallowCnn(manifest["in_channels"], tuple(manifest["spatial"]),
                       manifest["classes"])
    params = dict(model.named_parameters())
    with torch.no_grad():
        for entry in manifest["params"]:
            arr = tensor_read(os.path.join(directory, entry["file"]))
            params[entry["param"]].copy_(torch.as_tensor(np.asarray(arr)))
    return model
