"""Synthetic perspective scenes with exact vanishing-point ground truth.

Positive scenes are bundles of rays leaving a common point and running to the
image border.  Negative scenes hold gratings parallel to the image plane,
soft blobs, and random segments that never meet three at a time inside the
frame.  Every function is a pure function of its parameters and seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import DomainError
from .geometry import PixelPoint

Segment = tuple[tuple[float, float], tuple[float, float]]

SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class SceneParams:
    """Scene content and rendering settings.

    ``vp_prior_sigma=None`` means 10% of the image width.
    """

    width: int = 64
    height: int = 64
    n_converging: int = 8
    n_distractor: int = 0
    vp_prior_sigma: float | None = None
    noise_sigma: float = 0.0
    line_intensity: float = 0.8
    background_intensity: float = 0.2
    line_thickness: float = 1.0
    n_grating: tuple[int, int] = (3, 5)
    n_blobs: tuple[int, int] = (1, 3)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DomainError(f"zero-area image {self.width}x{self.height}")
        if self.n_converging < 0 or self.n_distractor < 0:
            raise DomainError("line counts must be non-negative")
        if (self.vp_prior_sigma or 0) < 0 or self.noise_sigma < 0:
            raise DomainError("sigmas must be non-negative")
        for name in ("line_intensity", "background_intensity"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1]")
        if self.line_thickness <= 0:
            raise DomainError("line_thickness must be positive")

    @property
    def sigma(self) -> float:
        return 0.1 * self.width if self.vp_prior_sigma is None else float(self.vp_prior_sigma)


@dataclass
class Scene:
    image: np.ndarray
    vp: PixelPoint | None
    segments: list[Segment] = field(default_factory=list)
    converging: int = 0


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) & SEED_MASK)


def _pixel_centers(height: int, width: int):
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    return xs + 0.5, ys + 0.5


def segment_distance(seg: Segment, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Euclidean distance from each ``(xs, ys)`` point to a closed segment."""
    (x0, y0), (x1, y1) = seg
    dx, dy = x1 - x0, y1 - y0
    length2 = dx * dx + dy * dy
    if length2 == 0.0:
        return np.hypot(xs - x0, ys - y0)
    t = np.clip(((xs - x0) * dx + (ys - y0) * dy) / length2, 0.0, 1.0)
    return np.hypot(xs - (x0 + t * dx), ys - (y0 + t * dy))


def segment_coverage(seg: Segment, height: int, width: int, thickness: float = 1.0) -> np.ndarray:
    """Anti-aliased coverage in ``[0, 1]`` of a segment over the pixel grid."""
    xs, ys = _pixel_centers(height, width)
    d = segment_distance(seg, xs, ys)
    return np.clip(thickness / 2.0 + 0.5 - d, 0.0, 1.0)


def segment_pixels(seg: Segment, height: int, width: int, thickness: float = 1.0):
    """Pixels touched by a segment as ``(x_centers, y_centers, weights)``."""
    cov = segment_coverage(seg, height, width, thickness)
    rows, cols = np.nonzero(cov)
    return cols + 0.5, rows + 0.5, cov[rows, cols]


def render_segments(segments: Sequence[Segment], params: SceneParams) -> np.ndarray:
    h, w = params.height, params.width
    cover = np.zeros((h, w))
    for seg in segments:
        np.maximum(cover, segment_coverage(seg, h, w, params.line_thickness), out=cover)
    bg, ink = params.background_intensity, params.line_intensity
    return bg + (ink - bg) * cover


def ray_to_border(origin, angle: float, width: float, height: float) -> tuple[float, float]:
    """Point where the ray from ``origin`` at ``angle`` leaves the frame."""
    x, y = origin
    c, s = math.cos(angle), math.sin(angle)
    ts = []
    if c > 1e-12:
        ts.append((width - x) / c)
    elif c < -1e-12:
        ts.append(-x / c)
    if s > 1e-12:
        ts.append((height - y) / s)
    elif s < -1e-12:
        ts.append(-y / s)
    t = min(ts)
    return (x + t * c, y + t * s)


def sample_vp(params: SceneParams, rng: np.random.Generator) -> PixelPoint:
    """Center-concentrated VP prior, clamped to the central 80% of the frame."""
    w, h = params.width, params.height
    x = w / 2 + params.sigma * rng.standard_normal()
    y = h / 2 + params.sigma * rng.standard_normal()
    return PixelPoint(float(np.clip(x, 0.1 * w, 0.9 * w)), float(np.clip(y, 0.1 * h, 0.9 * h)))


def _random_chord(params: SceneParams, rng: np.random.Generator) -> Segment:
    w, h = params.width, params.height
    cx, cy = rng.uniform(0, w), rng.uniform(0, h)
    length = rng.uniform(0.25, 0.6) * min(w, h)
    a = rng.uniform(0, math.pi)
    dx, dy = 0.5 * length * math.cos(a), 0.5 * length * math.sin(a)
    x0, x1 = np.clip([cx - dx, cx + dx], 0, w)
    y0, y1 = np.clip([cy - dy, cy + dy], 0, h)
    return ((float(x0), float(y0)), (float(x1), float(y1)))


def _add_noise(img: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    if sigma > 0:
        img = img + sigma * rng.standard_normal(img.shape)
    return np.clip(img, 0.0, 1.0)


def render_positive(params: SceneParams, seed: int) -> Scene:
    """Draw a scene with one vanishing point; see :func:`generate_positive`."""
    if params.n_converging < 2:
        raise DomainError("a positive scene needs at least two converging lines")
    rng = _rng(seed)
    vp = sample_vp(params, rng)
    k = params.n_converging
    # orientations spread over [0, pi) so no two rays share a carrier line;
    # every other ray is flipped to fan out on both sides of the VP
    step = math.pi / k
    base = rng.uniform(0, 2 * math.pi)
    jitter = rng.uniform(-0.2, 0.2, size=k) * step
    segments: list[Segment] = []
    for i in range(k):
        angle = base + i * step + jitter[i] + math.pi * (i % 2)
        end = ray_to_border(vp, angle, params.width, params.height)
        segments.append(((vp.x, vp.y), end))
    for _ in range(params.n_distractor):
        segments.append(_random_chord(params, rng))
    img = _add_noise(render_segments(segments, params), params.noise_sigma, rng)
    return Scene(img, vp, segments, converging=k)


def generate_positive(params: SceneParams, seed: int) -> tuple[np.ndarray, PixelPoint]:
    """Render rays converging at a sampled VP; returns ``(image, vp)``."""
    scene = render_positive(params, seed)
    return scene.image, scene.vp


def _line_of(seg: Segment):
    """Normal form ``(a, b, c)`` with ``a x + b y = c`` and unit normal."""
    (x0, y0), (x1, y1) = seg
    a, b = y1 - y0, x0 - x1
    norm = math.hypot(a, b)
    if norm == 0:
        return None
    a, b = a / norm, b / norm
    return a, b, a * x0 + b * y0


def has_concurrent_triple(segments: Sequence[Segment], width: float, height: float, tol: float = 2.0) -> bool:
    """True if three of the (infinite) lines meet within ``tol`` px inside the frame."""
    lines = [ln for ln in (_line_of(s) for s in segments) if ln is not None]
    for i, j in combinations(range(len(lines)), 2):
        a1, b1, c1 = lines[i]
        a2, b2, c2 = lines[j]
        det = a1 * b2 - a2 * b1
        if abs(det) < 1e-9:
            continue
        x = (c1 * b2 - c2 * b1) / det
        y = (a1 * c2 - a2 * c1) / det
        if not (0 <= x < width and 0 <= y < height):
            continue
        for m, (a3, b3, c3) in enumerate(lines):
            if m in (i, j):
                continue
            if abs(a3 * x + b3 * y - c3) < tol:
                return True
    return False


def _grating(params: SceneParams, rng: np.random.Generator) -> list[Segment]:
    w, h = params.width, params.height
    lo, hi = params.n_grating
    count = int(rng.integers(lo, hi + 1))
    if count == 0:
        return []
    horizontal = bool(rng.integers(0, 2))
    extent = h if horizontal else w
    spacing = extent / (count + 1)
    offset = rng.uniform(-0.3, 0.3) * spacing
    lines = []
    for i in range(count):
        pos = float(np.clip((i + 1) * spacing + offset, 0.5, extent - 0.5))
        lines.append(((0.0, pos), (float(w), pos)) if horizontal else ((pos, 0.0), (pos, float(h))))
    return lines


def _blobs(params: SceneParams, rng: np.random.Generator) -> np.ndarray:
    h, w = params.height, params.width
    xs, ys = _pixel_centers(h, w)
    lo, hi = params.n_blobs
    field_ = np.zeros((h, w))
    for _ in range(int(rng.integers(lo, hi + 1))):
        cx, cy = rng.uniform(0, w), rng.uniform(0, h)
        r = rng.uniform(0.04, 0.1) * min(w, h)
        amp = rng.uniform(0.3, 0.6)
        field_ = np.maximum(field_, amp * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * r * r)))
    return field_


def render_negative(params: SceneParams, seed: int, max_tries: int = 1000) -> Scene:
    """Draw a VP-free scene; see :func:`generate_negative`."""
    rng = _rng(seed)
    segments = _grating(params, rng)
    for _ in range(params.n_distractor):
        for _ in range(max_tries):
            cand = _random_chord(params, rng)
            if not has_concurrent_triple(segments + [cand], params.width, params.height):
                segments.append(cand)
                break
    img = render_segments(segments, params)
    bg, ink = params.background_intensity, params.line_intensity
    img = np.maximum(img, bg + (ink - bg) * _blobs(params, rng))
    img = _add_noise(img, params.noise_sigma, rng)
    return Scene(img, None, segments)


def generate_negative(params: SceneParams, seed: int) -> np.ndarray:
    """Render gratings, blobs and non-concurrent distractors with no VP."""
    return render_negative(params, seed).image


# -- augmentation -----------------------------------------------------------

@dataclass(frozen=True)
class LabelTransform:
    """Affine map ``p' = A p + t`` carrying VP labels into the augmented frame."""

    matrix: tuple[tuple[float, float, float], tuple[float, float, float]] = (
        (1.0, 0.0, 0.0),
        (0.0, 1.0, 0.0),
    )

    @classmethod
    def translation(cls, tx: float, ty: float) -> "LabelTransform":
        return cls(((1.0, 0.0, float(tx)), (0.0, 1.0, float(ty))))

    @property
    def is_identity(self) -> bool:
        return self == LabelTransform()

    def apply(self, point) -> PixelPoint:
        (a, b, tx), (c, d, ty) = self.matrix
        x, y = point
        return PixelPoint(a * x + b * y + tx, c * x + d * y + ty)


def jitter(img: np.ndarray, dx: int, dy: int, fill: float | None = None):
    """Move the viewport by ``(dx, dy)`` pixels: ``out[y, x] = img[y + dy, x + dx]``.

    Exposed pixels take ``fill`` (the image median by default).
    """
    h, w = img.shape
    fill = float(np.median(img)) if fill is None else fill
    out = np.full_like(img, fill)
    ys0, ys1 = max(0, -dy), min(h, h - dy)
    xs0, xs1 = max(0, -dx), min(w, w - dx)
    if ys0 < ys1 and xs0 < xs1:
        out[ys0:ys1, xs0:xs1] = img[ys0 + dy:ys1 + dy, xs0 + dx:xs1 + dx]
    return out, LabelTransform.translation(-dx, -dy)


def crop(img: np.ndarray, x0: int, y0: int, crop_w: int, crop_h: int):
    """Crop a window and rescale it bilinearly to the original size."""
    h, w = img.shape
    if crop_w < 1 or crop_h < 1 or x0 < 0 or y0 < 0 or x0 + crop_w > w or y0 + crop_h > h:
        raise DomainError(f"crop window {crop_w}x{crop_h}+{x0}+{y0} larger than image {w}x{h}")
    sx, sy = crop_w / w, crop_h / h
    rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)
    src_y = y0 + (rows + 0.5) * sy - 0.5
    src_x = x0 + (cols + 0.5) * sx - 0.5
    out = ndimage.map_coordinates(img, [src_y, src_x], order=1, mode="nearest")
    transform = LabelTransform(((1 / sx, 0.0, -x0 / sx), (0.0, 1 / sy, -y0 / sy)))
    return np.clip(out, 0.0, 1.0), transform


def box_blur(img: np.ndarray, radius: int) -> np.ndarray:
    if radius <= 0:
        return img.copy()
    return np.clip(ndimage.uniform_filter(img, size=2 * radius + 1, mode="nearest"), 0.0, 1.0)


def augment(img: np.ndarray, kind: str, magnitude: float, seed: int):
    """Return an augmented copy of ``img`` and the matching label transform.

    ``magnitude`` means: max shift in pixels (jitter), fraction of each side
    removed (crop), noise std-dev (noise), box radius in pixels (blur).
    """
    if magnitude < 0:
        raise DomainError(f"magnitude must be >= 0, got {magnitude}")
    img = np.asarray(img, dtype=np.float64)
    rng = _rng(seed)
    h, w = img.shape
    if magnitude == 0:
        return img.copy(), LabelTransform()
    if kind == "jitter":
        m = int(round(magnitude))
        dx, dy = (int(v) for v in rng.integers(-m, m + 1, size=2))
        return jitter(img, dx, dy)
    if kind == "crop":
        if magnitude >= 1:
            raise DomainError(f"crop magnitude {magnitude} removes the whole image")
        cw = max(1, int(round(w * (1 - magnitude))))
        ch = max(1, int(round(h * (1 - magnitude))))
        x0 = int(rng.integers(0, w - cw + 1))
        y0 = int(rng.integers(0, h - ch + 1))
        return crop(img, x0, y0, cw, ch)
    if kind == "noise":
        return _add_noise(img, magnitude, rng), LabelTransform()
    if kind == "blur":
        return box_blur(img, int(round(magnitude))), LabelTransform()
    raise DomainError(f"unknown augmentation {kind!r}")


def sample_seed(dataset_seed: int, index: int) -> int:
    return (int(dataset_seed) ^ int(index)) & SEED_MASK


def with_size(params: SceneParams, size: int) -> SceneParams:
    return replace(params, width=size, height=size)
