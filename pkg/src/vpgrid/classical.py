"""Non-learned vanishing point detectors.

The Hough chain is Sobel edges -> (theta, rho) accumulator -> greedy peak
picking -> pairwise line intersections voted into grid cells.  Hough space
uses pixel-index coordinates (``x = col``, ``y = row``); intersections are
shifted by half a pixel into the continuous frame before cell lookup.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DomainError
from .geometry import (
    CellIndex,
    GridSpec,
    PixelPoint,
    RankedPrediction,
    linearize,
    pixel_to_cell,
)

SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T
PARALLEL_EPS = 1e-6


@dataclass
class EdgeMap:
    mask: np.ndarray
    magnitude: np.ndarray
    threshold: float
    gx: np.ndarray | None = None
    gy: np.ndarray | None = None

    @property
    def shape(self):
        return self.mask.shape

    @property
    def count(self) -> int:
        return int(self.mask.sum())


@dataclass
class HoughAccumulator:
    votes: np.ndarray
    rho_max: int
    rho_resolution: float

    @property
    def theta_bins(self) -> int:
        return self.votes.shape[0]

    @property
    def rho_bins(self) -> int:
        return self.votes.shape[1]

    def theta(self, i: int) -> float:
        return i * math.pi / self.theta_bins

    def rho(self, j: int) -> float:
        return j * self.rho_resolution - self.rho_max

    def mirror_rho_bin(self, j: int) -> int:
        """Bin holding ``-rho(j)``, used when theta wraps past pi."""
        return int(round(2 * self.rho_max / self.rho_resolution)) - j


@dataclass(frozen=True)
class HoughLine:
    """Line ``rho = x cos(theta) + y sin(theta)`` with its accumulator support."""

    theta: float
    rho: float
    votes: int
    theta_bin: int = -1
    rho_bin: int = -1


@dataclass
class VoteGrid:
    grid: GridSpec
    weights: np.ndarray
    pair_counts: np.ndarray


@dataclass(frozen=True)
class HoughParams:
    """Tunables for :func:`detect_hough`.

    ``min_votes=None`` resolves to 15% of the shorter image side, i.e. 30% of
    the typical ray length from a central VP to the border.
    """

    edge_threshold: float = 1.0
    theta_bins: int = 180
    rho_resolution: float = 1.0
    min_votes: int | None = None
    max_lines: int = 12
    nms_radius: int = 3
    refine: bool = True
    fit_band: float | None = 2.0
    dedupe_angle: float = math.radians(3.0)
    dedupe_offset: float = 2.0

    def resolve_min_votes(self, width: int, height: int) -> int:
        if self.min_votes is not None:
            return self.min_votes
        return max(1, round(0.15 * min(width, height)))


def sobel_edges(img: np.ndarray, threshold: float) -> EdgeMap:
    """3x3 Sobel gradient magnitude and its thresholded mask.

    The one-pixel border has magnitude 0 and is never part of the mask.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] < 3 or img.shape[1] < 3:
        raise DomainError(f"sobel needs an image of at least 3x3, got {img.shape}")
    if not threshold >= 0:
        raise DomainError(f"threshold must be >= 0, got {threshold}")
    h, w = img.shape
    gx = np.zeros((h - 2, w - 2))
    gy = np.zeros((h - 2, w - 2))
    for i in range(3):
        for j in range(3):
            window = img[i:i + h - 2, j:j + w - 2]
            if SOBEL_X[i, j]:
                gx += SOBEL_X[i, j] * window
            if SOBEL_Y[i, j]:
                gy += SOBEL_Y[i, j] * window
    full_gx = np.zeros((h, w))
    full_gy = np.zeros((h, w))
    full_gx[1:-1, 1:-1] = gx
    full_gy[1:-1, 1:-1] = gy
    magnitude = np.sqrt(full_gx * full_gx + full_gy * full_gy)
    mask = np.zeros((h, w), dtype=bool)
    mask[1:-1, 1:-1] = magnitude[1:-1, 1:-1] >= threshold
    return EdgeMap(mask, magnitude, float(threshold), full_gx, full_gy)


def hough_transform(edges: EdgeMap, theta_bins: int = 180, rho_resolution: float = 1.0) -> HoughAccumulator:
    """Vote each masked pixel once per theta bin."""
    if theta_bins < 1:
        raise DomainError("theta_bins must be >= 1")
    if not rho_resolution > 0:
        raise DomainError("rho_resolution must be > 0")
    h, w = edges.shape
    rho_max = math.ceil(math.hypot(w, h))
    rho_bins = int(math.floor(2 * rho_max / rho_resolution)) + 1
    thetas = np.arange(theta_bins) * (math.pi / theta_bins)
    rows, cols = np.nonzero(edges.mask)
    votes = kernels.hough_accumulate(
        cols.astype(np.float64), rows.astype(np.float64),
        np.cos(thetas), np.sin(thetas), float(rho_max), float(rho_resolution), rho_bins,
    )
    return HoughAccumulator(votes, rho_max, float(rho_resolution))


def _neighborhood(acc: HoughAccumulator, t: int, r: int, radius: int):
    """Yield ``(dt, dr, votes)`` around a bin, unwrapping theta across pi."""
    T, R = acc.votes.shape
    for dt in range(-radius, radius + 1):
        tt = t + dt
        wrapped = tt < 0 or tt >= T
        tt %= T
        for dr in range(-radius, radius + 1):
            rr = acc.mirror_rho_bin(r + dr) if wrapped else r + dr
            if 0 <= rr < R:
                yield dt, dr, tt, rr


def _refine_peak(acc: HoughAccumulator, t: int, r: int, radius: int) -> tuple[float, float]:
    """Centroid of the bins holding at least half the peak's votes.

    Sobel marks both flanks of a thin stroke, which splits its support over
    neighboring rho bins; the centroid puts the line back on the stroke.
    """
    peak = acc.votes[t, r]
    wsum = st = sr = 0.0
    for dt, dr, tt, rr in _neighborhood(acc, t, r, radius):
        v = acc.votes[tt, rr]
        if 2 * v >= peak:
            wsum += v
            st += v * dt
            sr += v * dr
    theta = (t + st / wsum) * math.pi / acc.theta_bins
    rho = (r + sr / wsum) * acc.rho_resolution - acc.rho_max
    if theta < 0:
        theta, rho = theta + math.pi, -rho
    elif theta >= math.pi:
        theta, rho = theta - math.pi, -rho
    return theta, rho


def extract_peaks(
    acc: HoughAccumulator,
    max_lines: int,
    min_votes: int = 1,
    nms_radius: int = 2,
    refine: bool = False,
) -> list[HoughLine]:
    """Greedy non-maximum suppression over the accumulator.

    Candidates are visited by votes descending, then (theta_bin, rho_bin)
    ascending.  Each accepted peak blocks its ``(2r+1)^2`` neighborhood; the
    theta axis wraps with a sign flip of rho.  With ``refine`` the reported
    ``(theta, rho)`` is the sub-bin centroid of the peak's neighborhood.
    """
    if max_lines < 1:
        raise DomainError("max_lines must be >= 1")
    votes = acc.votes
    t_idx, r_idx = np.nonzero(votes >= max(min_votes, 1))
    v = votes[t_idx, r_idx]
    order = np.lexsort((r_idx, t_idx, -v))
    suppressed = np.zeros(votes.shape, dtype=bool)
    lines: list[HoughLine] = []
    for k in order:
        t, r = int(t_idx[k]), int(r_idx[k])
        if suppressed[t, r]:
            continue
        theta, rho = _refine_peak(acc, t, r, nms_radius) if refine else (acc.theta(t), acc.rho(r))
        lines.append(HoughLine(theta, rho, int(v[k]), t, r))
        if len(lines) == max_lines:
            break
        for _, _, tt, rr in _neighborhood(acc, t, r, nms_radius):
            suppressed[tt, rr] = True
    return lines


def fit_line(
    line: HoughLine,
    edges: EdgeMap,
    band: float = 2.0,
    iterations: int = 4,
    max_normal_angle: float = math.radians(10.0),
) -> HoughLine:
    """Refit a Hough line to the edge pixels within ``band`` px of it.

    Weighted total least squares with gradient magnitude as weight; both
    flanks of a thin stroke fall in the band, so the fit lands on its center.
    Pixels whose gradient is more than ``max_normal_angle`` away from the line
    normal (crossing strokes, stroke ends) are left out.
    """
    rows, cols = np.nonzero(edges.mask)
    if rows.size == 0:
        return line
    xs, ys = cols.astype(np.float64), rows.astype(np.float64)
    wts = edges.magnitude[rows, cols]
    if edges.gx is not None:
        ux, uy = edges.gx[rows, cols] / wts, edges.gy[rows, cols] / wts
    cos_limit = math.cos(max_normal_angle)
    theta, rho = line.theta, line.rho
    for _ in range(iterations):
        near = np.abs(xs * math.cos(theta) + ys * math.sin(theta) - rho) <= band
        if edges.gx is not None:
            near &= np.abs(ux * math.cos(theta) + uy * math.sin(theta)) >= cos_limit
        if near.sum() < 3:
            break
        w = wts[near]
        px, py = xs[near], ys[near]
        mx, my = np.average(px, weights=w), np.average(py, weights=w)
        dx, dy = px - mx, py - my
        cov = np.array([[np.sum(w * dx * dx), np.sum(w * dx * dy)],
                        [np.sum(w * dx * dy), np.sum(w * dy * dy)]])
        _, vecs = np.linalg.eigh(cov)
        nx, ny = vecs[:, 0]
        theta = math.atan2(ny, nx)
        if theta < 0:
            theta += math.pi
        if theta >= math.pi:
            theta -= math.pi
        rho = mx * math.cos(theta) + my * math.sin(theta)
    return HoughLine(theta, rho, line.votes, line.theta_bin, line.rho_bin)


def _same_line(a: HoughLine, b: HoughLine, max_angle: float, max_offset: float) -> bool:
    dt = abs(a.theta - b.theta)
    rho_b = b.rho
    if dt > math.pi / 2:
        dt = math.pi - dt
        rho_b = -rho_b
    return dt <= max_angle and abs(a.rho - rho_b) <= max_offset


def dedupe_lines(lines: Sequence[HoughLine], max_angle: float, max_offset: float) -> list[HoughLine]:
    """Drop lines that repeat an earlier (stronger) line within the tolerances."""
    kept: list[HoughLine] = []
    for line in lines:
        if not any(_same_line(k, line, max_angle, max_offset) for k in kept):
            kept.append(line)
    return kept


def intersect(a: HoughLine, b: HoughLine, bounds: tuple[float, float] | None = None) -> PixelPoint | None:
    """Intersection of two normal-form lines.

    Returns None for near-parallel pairs, or when ``bounds=(width, height)`` is
    given and the point falls outside ``[0, width) x [0, height)``.
    """
    ca, sa = math.cos(a.theta), math.sin(a.theta)
    cb, sb = math.cos(b.theta), math.sin(b.theta)
    det = ca * sb - sa * cb
    if abs(det) < PARALLEL_EPS:
        return None
    x = (a.rho * sb - b.rho * sa) / det
    y = (ca * b.rho - cb * a.rho) / det
    if bounds is not None:
        w, h = bounds
        if not (0 <= x < w and 0 <= y < h):
            return None
    return PixelPoint(x, y)


def center_cell(grid: GridSpec) -> CellIndex:
    return pixel_to_cell((grid.width / 2, grid.height / 2), grid)


def vote_grid(lines: Sequence[HoughLine], grid: GridSpec, offset: float = 0.5) -> VoteGrid:
    """Accumulate ``min(votes_a, votes_b)`` for every in-frame pair intersection."""
    weights = np.zeros(grid.class_count, dtype=np.int64)
    pairs = np.zeros(grid.class_count, dtype=np.int64)
    for a, b in combinations(lines, 2):
        pt = intersect(a, b)
        if pt is None:
            continue
        x, y = pt.x + offset, pt.y + offset
        if not (0 <= x < grid.width and 0 <= y < grid.height):
            continue
        idx = linearize(pixel_to_cell((x, y), grid), grid)
        weights[idx] += min(a.votes, b.votes)
        pairs[idx] += 1
    return VoteGrid(grid, weights, pairs)


def vote_vp(lines: Sequence[HoughLine], grid: GridSpec, top_k: int = 5, offset: float = 0.5) -> RankedPrediction:
    """Rank grid cells by intersection support; center cell if there is none."""
    if top_k < 1:
        raise DomainError("top_k must be >= 1")
    votes = vote_grid(lines, grid, offset)
    if not votes.weights.any():
        return RankedPrediction(((center_cell(grid), 0.0),), grid)
    ranked = RankedPrediction.from_scores(votes.weights.astype(np.float64), grid, top_k)
    return RankedPrediction(tuple(e for e in ranked.entries if e[1] > 0), grid)


def detect_lines(img: np.ndarray, params: HoughParams = HoughParams()) -> list[HoughLine]:
    edges = sobel_edges(img, params.edge_threshold)
    acc = hough_transform(edges, params.theta_bins, params.rho_resolution)
    h, w = np.shape(img)
    lines = extract_peaks(acc, params.max_lines, params.resolve_min_votes(w, h), params.nms_radius, params.refine)
    if params.fit_band:
        lines = [fit_line(line, edges, params.fit_band) for line in lines]
        lines = dedupe_lines(lines, params.dedupe_angle, params.dedupe_offset)
    return lines


def detect_hough(img: np.ndarray, grid: GridSpec, params: HoughParams = HoughParams(), top_k: int = 5) -> RankedPrediction:
    """Full classical chain on one image."""
    h, w = np.shape(img)
    if (w, h) != (grid.width, grid.height):
        raise DomainError(f"image {w}x{h} does not match grid frame {grid.width}x{grid.height}")
    return vote_vp(detect_lines(img, params), grid, top_k)


_PLUS_OFFSETS = ((0, 0), (0, -1), (-1, 0), (0, 1), (1, 0))


def center_baseline(train_labels: Sequence, grid: GridSpec, mode: str = "top1") -> RankedPrediction:
    """Most frequent training cell, optionally with its four neighbors.

    ``top5`` lists the mode, then left, up, right, down (off-grid neighbors
    dropped).  Scores fall by rank so the listed order is kept.
    """
    if len(train_labels) == 0:
        raise DomainError("center baseline needs at least one training label")
    if mode not in ("top1", "top5"):
        raise DomainError(f"mode must be 'top1' or 'top5', got {mode!r}")
    counts = Counter(linearize(c, grid) for c in train_labels)
    best = max(counts.values())
    mode_idx = min(i for i, c in counts.items() if c == best)
    row, col = divmod(mode_idx, grid.n)
    offsets = _PLUS_OFFSETS if mode == "top5" else _PLUS_OFFSETS[:1]
    cells = [(row + dr, col + dc) for dr, dc in offsets]
    cells = [c for c in cells if grid.contains(c)]
    return RankedPrediction.from_cells(
        [CellIndex(*c) for c in cells], [(5 - i) / 5 for i in range(len(cells))], grid
    )
