"""Method comparison over a manifest's test split, and the desk-scale pipeline."""

from __future__ import annotations

import logging
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

from .classical import HoughParams, center_baseline, detect_lines, vote_vp
from .dataset import DatasetManifest, build_dataset
from .errors import DomainError
from .evaluation import EvalReport, ExistenceRow, evaluate, existence_correct
from .geometry import GridSpec
from .nn import Network, TrainConfig, predict_proba, rank_batch, reference_network, save_model, train
from .scenegen import SceneParams

log = logging.getLogger(__name__)

METHODS = ("cnn", "hough", "center")


def evaluate_methods(
    manifest: DatasetManifest,
    methods: Sequence[str],
    grids: Sequence[int],
    model: Network | None = None,
    existence_model: Network | None = None,
    hough_params: HoughParams = HoughParams(),
    split: str = "test",
) -> EvalReport:
    """Score each method on every grid; the CNN only on grids matching its head."""
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise DomainError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
    if "cnn" in methods and model is None:
        raise DomainError("method 'cnn' needs a localization model")
    entries = manifest.select(split, has_vp=True)
    if not entries:
        raise DomainError(f"no positive samples in split {split!r}")
    images = manifest.load_images(entries)
    lines = [detect_lines(img, hough_params) for img in images] if "hough" in methods else None

    report = EvalReport()
    for n in grids:
        grid = manifest.grid(n)
        truths = manifest.cells(entries, grid)
        for method in methods:
            if method == "cnn":
                if model.head_classes != grid.class_count:
                    log.info("skipping cnn on %dx%d grid: head has %d classes", n, n, model.head_classes)
                    continue
                preds = rank_batch(model, images, grid)
            elif method == "hough":
                preds = [vote_vp(ls, grid, 5) for ls in lines]
            else:
                train_cells = manifest.cells(manifest.select("train", has_vp=True), grid)
                baseline = center_baseline(train_cells, grid, "top5")
                preds = [baseline] * len(entries)
            report.rows.append(evaluate(preds, truths, grid, method))
    if "cnn" in methods and not any(r.method == "cnn" for r in report.rows):
        raise DomainError(f"cnn head ({model.head_classes} classes) matches none of grids {list(grids)}")

    if existence_model is not None:
        all_entries = manifest.select(split)
        probs = predict_proba(existence_model, manifest.load_images(all_entries))[:, 1]
        truth = [e.has_vp for e in all_entries]
        report.existence.append(ExistenceRow("cnn", len(all_entries), existence_correct(probs, truth)))
    return report


@dataclass(frozen=True)
class DeskConfig:
    """Settings for the end-to-end desk-scale experiment (700 images, 64x64, n=8)."""

    n_pos: int = 350
    n_neg: int = 350
    train_fraction: float = 5 / 7
    size: int = 64
    grid: int = 8
    noise_sigma: float = 0.1
    n_distractor: int = 3
    seed: int = 0
    localization_epochs: int = 80
    existence_epochs: int = 20
    jitter: int = 8
    learning_rate: float = 0.01

    def scene_params(self) -> SceneParams:
        return SceneParams(
            width=self.size, height=self.size,
            noise_sigma=self.noise_sigma, n_distractor=self.n_distractor,
        )


def run_pipeline(out_dir: str | os.PathLike, cfg: DeskConfig = DeskConfig()) -> EvalReport:
    """Generate data, train both heads, evaluate every method, write ``report.tsv``."""
    out = Path(out_dir)
    manifest = build_dataset(
        cfg.n_pos, cfg.n_neg, cfg.train_fraction, cfg.scene_params(), cfg.seed, out / "data", (cfg.grid,)
    )
    grid = GridSpec(cfg.size, cfg.size, cfg.grid)
    loc = reference_network(grid.class_count, cfg.size, seed=cfg.seed)
    _, loc_curve = train(loc, manifest, "localization", grid, TrainConfig(
        learning_rate=cfg.learning_rate, epochs=cfg.localization_epochs, seed=cfg.seed, jitter=cfg.jitter,
    ))
    ex = reference_network(2, cfg.size, seed=cfg.seed + 1)
    _, ex_curve = train(ex, manifest, "existence", grid, TrainConfig(
        learning_rate=cfg.learning_rate, epochs=cfg.existence_epochs, seed=cfg.seed + 1, jitter=cfg.jitter,
    ))
    save_model(loc, out / "localization.vpg")
    save_model(ex, out / "existence.vpg")
    log.info("final losses: localization %.4f, existence %.4f", loc_curve[-1], ex_curve[-1])
    report = evaluate_methods(manifest, METHODS, [cfg.grid], loc, ex)
    report.write(out / "report.tsv")
    (out / "config.txt").write_text(
        "".join(f"{k} {v}\n" for k, v in asdict(cfg).items()), encoding="utf-8"
    )
    return report
