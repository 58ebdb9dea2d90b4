"""Grid model shared by every detector and by the evaluator.

Coordinates follow the raster convention: the origin is the top-left corner,
``x`` grows along columns and ``y`` along rows.  Pixel ``(row, col)`` covers the
half-open square ``[col, col + 1) x [row, row + 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import DomainError


class PixelPoint(NamedTuple):
    x: float
    y: float


class CellIndex(NamedTuple):
    row: int
    col: int


@dataclass(frozen=True)
class GridSpec:
    """An ``n x n`` partition of a ``width x height`` image."""

    width: int
    height: int
    n: int

    def __post_init__(self):
        for name in ("width", "height", "n"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise DomainError(f"{name} must be a positive integer, got {value!r}")
        if self.width < self.n or self.height < self.n:
            raise DomainError(
                f"grid side {self.n} exceeds image size {self.width}x{self.height}"
            )

    @property
    def class_count(self) -> int:
        return self.n * self.n

    p = class_count

    @property
    def cell_width(self) -> Fraction:
        return Fraction(self.width, self.n)

    @property
    def cell_height(self) -> Fraction:
        return Fraction(self.height, self.n)

    def contains(self, cell: CellIndex) -> bool:
        return 0 <= cell[0] < self.n and 0 <= cell[1] < self.n

    def check_cell(self, cell) -> CellIndex:
        row, col = cell
        if not (isinstance(row, (int, np.integer)) and isinstance(col, (int, np.integer))):
            raise DomainError(f"cell indices must be integers, got {cell!r}")
        if not self.contains((row, col)):
            raise DomainError(f"cell {tuple(cell)} outside {self.n}x{self.n} grid")
        return CellIndex(int(row), int(col))


def pixel_to_cell(point, grid: GridSpec) -> CellIndex:
    """Quantize a pixel position to the grid cell that contains it.

    The division is done on exact rationals so that a label sitting on a cell
    boundary always lands in the same cell, independent of float rounding.
    """
    x, y = float(point[0]), float(point[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise DomainError(f"non-finite point {point!r}")
    if not (0 <= x < grid.width and 0 <= y < grid.height):
        raise DomainError(
            f"point ({x}, {y}) outside image {grid.width}x{grid.height}"
        )
    yn, yd = y.as_integer_ratio()
    xn, xd = x.as_integer_ratio()
    row = yn * grid.n // (yd * grid.height)
    col = xn * grid.n // (xd * grid.width)
    return CellIndex(min(row, grid.n - 1), min(col, grid.n - 1))


def cell_to_center(cell, grid: GridSpec) -> PixelPoint:
    row, col = grid.check_cell(cell)
    return PixelPoint((col + 0.5) * grid.width / grid.n, (row + 0.5) * grid.height / grid.n)


def linearize(cell, grid: GridSpec) -> int:
    row, col = grid.check_cell(cell)
    return row * grid.n + col


def delinearize(index: int, grid: GridSpec) -> CellIndex:
    if not 0 <= index < grid.class_count:
        raise DomainError(f"class index {index} outside [0, {grid.class_count})")
    row, col = divmod(int(index), grid.n)
    return CellIndex(row, col)


def chance_level(grid: GridSpec) -> float:
    """Top-1 accuracy of a uniform random guess, ``1 / p``."""
    return 1.0 / grid.class_count


@dataclass(frozen=True)
class RankedPrediction:
    """Cells ordered by score, highest first.

    Equal scores are ordered by ascending linear index, which makes every
    ranking a deterministic total order.  Use :meth:`from_scores` to build one
    from a dense score vector.
    """

    entries: tuple[tuple[CellIndex, float], ...]
    grid: GridSpec

    def __post_init__(self):
        entries = tuple((self.grid.check_cell(c), float(s)) for c, s in self.entries)
        object.__setattr__(self, "entries", entries)
        seen = set()
        prev = None
        for cell, score in entries:
            if cell in seen:
                raise DomainError(f"duplicate cell {cell} in ranking")
            seen.add(cell)
            key = (-score, linearize(cell, self.grid))
            if prev is not None and key < prev:
                raise DomainError("ranking is not ordered by (score desc, index asc)")
            prev = key

    @classmethod
    def from_scores(cls, scores, grid: GridSpec, top_k: int | None = None) -> "RankedPrediction":
        """Rank a length-``p`` score vector, keeping the best ``top_k`` cells."""
        scores = np.asarray(scores, dtype=np.float64).ravel()
        if scores.size != grid.class_count:
            raise DomainError(
                f"expected {grid.class_count} scores for n={grid.n}, got {scores.size}"
            )
        # lexsort: last key is primary; stable on index for ties
        order = np.lexsort((np.arange(scores.size), -scores))
        if top_k is not None:
            order = order[:top_k]
        return cls(tuple((delinearize(int(i), grid), float(scores[i])) for i in order), grid)

    @classmethod
    def from_cells(cls, cells: Iterable, scores: Sequence[float], grid: GridSpec):
        return cls(tuple(zip(cells, scores)), grid)

    @property
    def cells(self) -> list[CellIndex]:
        return [c for c, _ in self.entries]

    def __len__(self):
        return len(self.entries)

    def top(self) -> CellIndex | None:
        return self.entries[0][0] if self.entries else None


def topk_hit(pred: RankedPrediction, truth, k: int) -> bool:
    """True when ``truth`` is among the first ``k`` ranked cells."""
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    truth = CellIndex(*truth)
    return any(cell == truth for cell, _ in pred.entries[:k])
