"""Mini-batch SGD with momentum, and inference helpers."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..dataset import DatasetManifest
from ..errors import DomainError
from ..geometry import GridSpec, RankedPrediction, linearize, pixel_to_cell
from ..scenegen import jitter
from .loss import softmax, softmax_cross_entropy
from .network import Network

log = logging.getLogger(__name__)

TASKS = ("existence", "localization")


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and schedule settings.

    ``jitter`` > 0 shifts every training image by a random integer offset of
    at most that many pixels each epoch, moving localization labels with it.
    """

    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 16
    epochs: int = 20
    seed: int = 0
    shuffle: bool = True
    jitter: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise DomainError("learning_rate must be > 0")
        if not 0 <= self.momentum < 1:
            raise DomainError("momentum must lie in [0, 1)")
        if self.batch_size < 1 or self.epochs < 0 or self.jitter < 0:
            raise DomainError("batch_size >= 1, epochs >= 0 and jitter >= 0 required")


def preprocess(images) -> np.ndarray:
    """Stack ``(H, W)`` rasters into a standardized ``(B, 1, H, W)`` batch."""
    x = np.asarray(images, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    mean = x.mean(axis=(1, 2), keepdims=True)
    std = x.std(axis=(1, 2), keepdims=True)
    return ((x - mean) / (std + 1e-6))[:, None]


def _jittered(images, labels, vps, grid, cfg, rng):
    out = np.empty_like(images)
    new_labels = labels.copy()
    shifts = rng.integers(-cfg.jitter, cfg.jitter + 1, size=(len(images), 2))
    for i, (img, (dx, dy)) in enumerate(zip(images, shifts)):
        moved, transform = jitter(img, int(dx), int(dy))
        if vps is not None:
            x, y = transform.apply(vps[i])
            if not (0 <= x < grid.width and 0 <= y < grid.height):
                out[i] = img
                continue
            new_labels[i] = linearize(pixel_to_cell((x, y), grid), grid)
        out[i] = moved
    return out, new_labels


def fit(
    net: Network,
    images,
    labels,
    cfg: TrainConfig,
    vps=None,
    grid: GridSpec | None = None,
) -> list[float]:
    """Train ``net`` in place on raw rasters; returns per-epoch mean loss.

    ``vps`` and ``grid`` are needed only when jittering localization data.
    """
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n = len(images)
    if n == 0:
        raise DomainError("cannot train on an empty split")
    if labels.shape != (n,):
        raise DomainError("one label per image required")
    rng = np.random.default_rng(cfg.seed)
    params = net.parameters()
    velocity = [np.zeros_like(p) for p in params]
    fixed = preprocess(images) if cfg.jitter == 0 else None
    curve = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        if cfg.jitter:
            batch_imgs, batch_labels = _jittered(images, labels, vps, grid, cfg, rng)
            x_all, y_all = preprocess(batch_imgs), batch_labels
        else:
            x_all, y_all = fixed, labels
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, dlogits = softmax_cross_entropy(net.forward(x_all[idx]), y_all[idx])
            grads = net.backward(dlogits)
            for p, v, g in zip(params, velocity, grads):
                v *= cfg.momentum
                v -= cfg.learning_rate * g
                p += v
            total += loss * len(idx)
        curve.append(total / n)
        log.debug("epoch %d loss %.5f", epoch + 1, curve[-1])
    return curve


def task_data(manifest: DatasetManifest, task: str, grid: GridSpec, split: str = "train"):
    """Entries, class labels and VPs (or None) for one task and split."""
    if task not in TASKS:
        raise DomainError(f"task must be one of {TASKS}, got {task!r}")
    if task == "localization":
        entries = manifest.select(split, has_vp=True)
        labels = [linearize(pixel_to_cell(e.vp, grid), grid) for e in entries]
        vps = [e.vp for e in entries]
    else:
        entries = manifest.select(split)
        labels = [int(e.has_vp) for e in entries]
        vps = None
    return entries, np.asarray(labels, dtype=np.int64), vps


def train(net: Network, manifest: DatasetManifest, task: str, grid: GridSpec, cfg: TrainConfig):
    """Train on the manifest's train split; returns ``(net, loss_curve)``."""
    expected = 2 if task == "existence" else grid.class_count
    if net.head_classes != expected:
        raise DomainError(f"{task} needs a {expected}-way head, network has {net.head_classes}")
    entries, labels, vps = task_data(manifest, task, grid, "train")
    if not entries:
        raise DomainError(f"no training samples for task {task!r}")
    images = manifest.load_images(entries)
    curve = fit(net, images, labels, cfg, vps if task == "localization" else None, grid)
    return net, curve


def predict_proba(net: Network, images, batch_size: int = 64) -> np.ndarray:
    x = preprocess(images)
    out = [softmax(net.forward(x[i:i + batch_size])) for i in range(0, len(x), batch_size)]
    return np.concatenate(out) if out else np.zeros((0, net.head_classes))


def predict_existence(net: Network, img) -> float:
    """Probability that ``img`` contains a vanishing point."""
    if net.head_classes != 2:
        raise DomainError(f"existence needs a 2-way head, network has {net.head_classes}")
    return float(predict_proba(net, [img])[0, 1])


def predict_localization(net: Network, img, grid: GridSpec, top_k: int = 5) -> RankedPrediction:
    if net.head_classes != grid.class_count:
        raise DomainError(
            f"network head has {net.head_classes} classes, grid n={grid.n} needs {grid.class_count}"
        )
    return RankedPrediction.from_scores(predict_proba(net, [img])[0], grid, top_k)


def rank_batch(net: Network, images, grid: GridSpec, top_k: int = 5) -> list[RankedPrediction]:
    probs = predict_proba(net, images)
    return [RankedPrediction.from_scores(p, grid, top_k) for p in probs]
