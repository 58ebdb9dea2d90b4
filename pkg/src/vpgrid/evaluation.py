"""Top-k metrics, report tables, and prediction overlays."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError, ParseError
from .geometry import GridSpec, RankedPrediction, cell_to_center, topk_hit

TSV_HEADER = "method\tgrid_n\tN\ttop1_hits\ttop5_hits\ttop1_err\ttop5_err"
EXISTENCE_HEADER = "task\tN\tcorrect\taccuracy"


@dataclass(frozen=True)
class EvalRow:
    """Hit counts for one (method, grid) pair; errors derive from them exactly."""

    method: str
    grid_n: int
    n: int
    top1_hits: int
    top5_hits: int

    def __post_init__(self):
        if self.n <= 0:
            raise DomainError("an evaluation row needs at least one sample")
        if not 0 <= self.top1_hits <= self.top5_hits <= self.n:
            raise DomainError(f"inconsistent hit counts {self.top1_hits}/{self.top5_hits}/{self.n}")

    @property
    def top1_error(self) -> float:
        return float(1 - Fraction(self.top1_hits, self.n))

    @property
    def top5_error(self) -> float:
        return float(1 - Fraction(self.top5_hits, self.n))

    @property
    def top1_accuracy(self) -> float:
        return float(Fraction(self.top1_hits, self.n))

    @property
    def top5_accuracy(self) -> float:
        return float(Fraction(self.top5_hits, self.n))


@dataclass(frozen=True)
class ExistenceRow:
    method: str
    n: int
    correct: int

    @property
    def accuracy(self) -> float:
        return float(Fraction(self.correct, self.n))


@dataclass
class EvalReport:
    rows: list[EvalRow] = field(default_factory=list)
    existence: list[ExistenceRow] = field(default_factory=list)

    def row(self, method: str, grid_n: int) -> EvalRow:
        for r in self.rows:
            if r.method == method and r.grid_n == grid_n:
                return r
        raise KeyError((method, grid_n))

    def to_tsv(self) -> str:
        lines = [TSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.method}\t{r.grid_n}\t{r.n}\t{r.top1_hits}\t{r.top5_hits}\t"
                f"{r.top1_error:.4f}\t{r.top5_error:.4f}"
            )
        if self.existence:
            lines += ["", EXISTENCE_HEADER]
            for e in self.existence:
                lines.append(f"{e.method}\t{e.n}\t{e.correct}\t{e.accuracy:.4f}")
        return "\n".join(lines) + "\n"

    def write(self, path: str | os.PathLike) -> None:
        Path(path).write_text(self.to_tsv(), encoding="utf-8")

    @classmethod
    def from_tsv(cls, text: str) -> "EvalReport":
        lines = text.splitlines()
        if not lines or lines[0] != TSV_HEADER:
            raise ParseError("missing report header", 1)
        report = cls()
        section = "rows"
        for lineno, line in enumerate(lines[1:], start=2):
            if not line:
                continue
            if line == EXISTENCE_HEADER:
                section = "existence"
                continue
            parts = line.split("\t")
            try:
                if section == "rows":
                    method, n_grid, n, h1, h5 = parts[:5]
                    report.rows.append(EvalRow(method, int(n_grid), int(n), int(h1), int(h5)))
                else:
                    method, n, correct = parts[:3]
                    report.existence.append(ExistenceRow(method, int(n), int(correct)))
            except (ValueError, DomainError) as exc:
                raise ParseError(f"bad report line: {exc}", lineno) from None
        return report

    @classmethod
    def read(cls, path: str | os.PathLike) -> "EvalReport":
        return cls.from_tsv(Path(path).read_text(encoding="utf-8"))

    def to_table(self, chance: bool = True) -> str:
        """Human-readable aligned table."""
        head = ["method", "grid", "N", "top1 hits", "top5 hits", "top1 err", "top5 err"]
        body = [
            [r.method, f"{r.grid_n}x{r.grid_n}", str(r.n), str(r.top1_hits), str(r.top5_hits),
             f"{r.top1_error:.4f}", f"{r.top5_error:.4f}"]
            for r in self.rows
        ]
        if chance:
            for n in sorted({r.grid_n for r in self.rows}):
                p = n * n
                body.append(["chance", f"{n}x{n}", "-", "-", "-", f"{1 - 1 / p:.4f}", f"{1 - min(5, p) / p:.4f}"])
        widths = [max(len(x) for x in col) for col in zip(head, *body)]
        fmt = lambda row: "  ".join(x.rjust(w) if i else x.ljust(w) for i, (x, w) in enumerate(zip(row, widths)))  # noqa: E731
        out = [fmt(head), "  ".join("-" * w for w in widths)] + [fmt(r) for r in body]
        for e in self.existence:
            out.append(f"existence accuracy ({e.method}): {e.correct}/{e.n} = {e.accuracy:.4f}")
        return "\n".join(out) + "\n"


def evaluate(
    predictions: Sequence[RankedPrediction],
    truths: Sequence,
    grid: GridSpec,
    method: str = "",
) -> EvalRow:
    """Top-1 and top-5 hit counts of ranked predictions against true cells."""
    if len(predictions) != len(truths):
        raise DomainError(f"{len(predictions)} predictions but {len(truths)} truths")
    if len(predictions) == 0:
        raise DomainError("nothing to evaluate")
    h1 = sum(topk_hit(p, t, 1) for p, t in zip(predictions, truths))
    h5 = sum(topk_hit(p, t, 5) for p, t in zip(predictions, truths))
    return EvalRow(method, grid.n, len(predictions), h1, h5)


def existence_correct(probabilities: Sequence[float], truths: Sequence[bool], threshold: float = 0.5) -> int:
    if len(probabilities) != len(truths):
        raise DomainError(f"{len(probabilities)} probabilities but {len(truths)} truths")
    if not 0 < threshold < 1:
        raise DomainError("threshold must lie in (0, 1)")
    return sum((p >= threshold) == bool(t) for p, t in zip(probabilities, truths))


def evaluate_existence(probabilities: Sequence[float], truths: Sequence[bool], threshold: float = 0.5) -> float:
    """Fraction of images whose ``prob >= threshold`` decision matches the truth."""
    correct = existence_correct(probabilities, truths, threshold)
    if len(truths) == 0:
        raise DomainError("nothing to evaluate")
    return float(Fraction(correct, len(truths)))


@dataclass(frozen=True)
class OverlayStyle:
    """Ring markers; the top-1 ring is larger and brighter than the rest."""

    top1_radius: float = 6.0
    other_radius: float = 3.0
    top1_intensity: float = 1.0
    other_intensity: float = 0.6
    ring_width: float = 1.0

    def __post_init__(self):
        if not self.top1_radius > self.other_radius > 0:
            raise DomainError("top1_radius must exceed other_radius > 0")


def render_overlay(img, pred: RankedPrediction, style: OverlayStyle = OverlayStyle()) -> np.ndarray:
    """Copy of ``img`` with rings at the centers of the top-5 predicted cells."""
    out = np.array(img, dtype=np.float64, copy=True)
    h, w = out.shape
    if (w, h) != (pred.grid.width, pred.grid.height):
        raise DomainError(f"prediction grid frame does not match image {w}x{h}")
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64) + 0.5
    # draw lower ranks first so the top-1 ring stays on top
    for rank in reversed(range(min(5, len(pred)))):
        cx, cy = cell_to_center(pred.entries[rank][0], pred.grid)
        radius = style.top1_radius if rank == 0 else style.other_radius
        value = style.top1_intensity if rank == 0 else style.other_intensity
        d = np.abs(np.hypot(xs - cx, ys - cy) - radius)
        cover = np.clip(style.ring_width / 2 + 0.5 - d, 0.0, 1.0)
        out = out * (1 - cover) + value * cover
    return np.clip(out, 0.0, 1.0)
