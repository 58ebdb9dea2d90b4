"""Dataset manifests and on-disk dataset generation."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError
from .geometry import GridSpec, PixelPoint, pixel_to_cell
from .pgm import read_pgm, write_pgm
from .scenegen import SceneParams, generate_negative, generate_positive, sample_seed

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.txt"
_COLUMNS = ("path", "split", "has_vp", "vp_x", "vp_y", "seed")


def _fixed6(v: float) -> float:
    return float(f"{v:.6f}")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    split: str
    has_vp: bool
    vp: PixelPoint | None
    seed: int

    def __post_init__(self):
        if self.split not in ("train", "test"):
            raise DomainError(f"split must be 'train' or 'test', got {self.split!r}")
        if self.has_vp != (self.vp is not None):
            raise DomainError(f"{self.path}: has_vp={self.has_vp} disagrees with vp={self.vp}")


@dataclass
class DatasetManifest:
    """Index of generated samples.

    Paths are relative to ``root`` (the manifest's directory once written).
    """

    width: int
    height: int
    grids: tuple[int, ...]
    entries: list[ManifestEntry] = field(default_factory=list)
    root: Path | None = None

    def __post_init__(self):
        paths = [e.path for e in self.entries]
        if len(set(paths)) != len(paths):
            raise DomainError("manifest paths must be unique")

    def __eq__(self, other):
        if not isinstance(other, DatasetManifest):
            return NotImplemented
        return (self.width, self.height, tuple(self.grids), self.entries) == (
            other.width, other.height, tuple(other.grids), other.entries
        )

    def select(self, split: str | None = None, has_vp: bool | None = None) -> list[ManifestEntry]:
        return [
            e for e in self.entries
            if (split is None or e.split == split) and (has_vp is None or e.has_vp == has_vp)
        ]

    def grid(self, n: int) -> GridSpec:
        return GridSpec(self.width, self.height, n)

    def resolve(self, entry: ManifestEntry) -> Path:
        return (self.root or Path(".")) / entry.path

    def load_image(self, entry: ManifestEntry) -> np.ndarray:
        return read_pgm(self.resolve(entry))

    def load_images(self, entries) -> np.ndarray:
        return np.stack([self.load_image(e) for e in entries]) if entries else np.zeros(
            (0, self.height, self.width)
        )

    def cells(self, entries, grid: GridSpec):
        return [pixel_to_cell(e.vp, grid) for e in entries]

    def dumps(self) -> str:
        lines = [
            f"vpgrid-manifest {MANIFEST_VERSION}",
            f"width {self.width}",
            f"height {self.height}",
            "grids " + ",".join(str(n) for n in self.grids),
            f"entries {len(self.entries)}",
            "\t".join(_COLUMNS),
        ]
        for e in self.entries:
            x = f"{e.vp.x:.6f}" if e.vp else "-"
            y = f"{e.vp.y:.6f}" if e.vp else "-"
            lines.append("\t".join([e.path, e.split, "1" if e.has_vp else "0", x, y, str(e.seed)]))
        return "\n".join(lines) + "\n"

    def write(self, path: str | os.PathLike) -> Path:
        path = Path(path)
        path.write_text(self.dumps(), encoding="utf-8")
        self.root = path.parent
        return path

    @classmethod
    def loads(cls, text: str, root: Path | None = None) -> "DatasetManifest":
        lines = text.splitlines()

        def header(lineno: int, key: str) -> str:
            if lineno >= len(lines):
                raise ParseError(f"missing '{key}' line", lineno + 1)
            parts = lines[lineno].split(" ", 1)
            if parts[0] != key or len(parts) != 2:
                raise ParseError(f"expected '{key} ...', got {lines[lineno]!r}", lineno + 1)
            return parts[1]

        try:
            version = int(header(0, "vpgrid-manifest"))
            if version != MANIFEST_VERSION:
                raise ParseError(f"unsupported manifest version {version}", 1)
            width = int(header(1, "width"))
            height = int(header(2, "height"))
            grids = tuple(int(v) for v in header(3, "grids").split(",") if v)
            count = int(header(4, "entries"))
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"malformed header: {exc}", 1) from None
        if len(lines) < 6 or tuple(lines[5].split("\t")) != _COLUMNS:
            raise ParseError("missing or wrong column header", 6)
        entries = []
        for lineno, line in enumerate(lines[6:], start=7):
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != len(_COLUMNS):
                raise ParseError(f"expected {len(_COLUMNS)} fields, got {len(parts)}", lineno)
            path, split, has_vp, x, y, seed = parts
            try:
                vp = None if has_vp == "0" else PixelPoint(float(x), float(y))
                entries.append(ManifestEntry(path, split, has_vp == "1", vp, int(seed)))
            except (ValueError, DomainError) as exc:
                raise ParseError(str(exc), lineno) from None
        if len(entries) != count:
            raise ParseError(f"header declares {count} entries, found {len(entries)}", 5)
        return cls(width, height, grids, entries, root)

    @classmethod
    def read(cls, path: str | os.PathLike) -> "DatasetManifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        return cls.loads(path.read_text(encoding="utf-8"), root=path.parent)


def split_counts(n: int, train_fraction: float) -> int:
    return math.floor(n * train_fraction)


def build_dataset(
    n_pos: int,
    n_neg: int,
    train_fraction: float,
    params: SceneParams,
    seed: int,
    out_dir: str | os.PathLike,
    grids: tuple[int, ...] = (8,),
) -> DatasetManifest:
    """Generate ``n_pos`` positive and ``n_neg`` negative scenes into ``out_dir``.

    Each class contributes ``floor(count * train_fraction)`` training samples,
    picked by a permutation drawn from ``seed``; the rest are test samples.
    Sample ``i`` (positives first) is rendered from ``seed XOR i``.
    """
    if not 0 < train_fraction < 1:
        raise DomainError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    if n_pos < 0 or n_neg < 0:
        raise DomainError("sample counts must be non-negative")
    for n in grids:
        GridSpec(params.width, params.height, n)
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)

    split_rng = np.random.default_rng(int(seed))
    splits = {}
    for label, count in (("pos", n_pos), ("neg", n_neg)):
        order = split_rng.permutation(count)
        train = set(order[: split_counts(count, train_fraction)].tolist())
        splits[label] = ["train" if i in train else "test" for i in range(count)]

    entries = []
    for i in range(n_pos):
        s = sample_seed(seed, i)
        img, vp = generate_positive(params, s)
        rel = f"images/pos_{i:05d}.pgm"
        write_pgm(img, out / rel)
        vp = PixelPoint(_fixed6(vp.x), _fixed6(vp.y))
        entries.append(ManifestEntry(rel, splits["pos"][i], True, vp, s))
    for i in range(n_neg):
        s = sample_seed(seed, n_pos + i)
        rel = f"images/neg_{i:05d}.pgm"
        write_pgm(generate_negative(params, s), out / rel)
        entries.append(ManifestEntry(rel, splits["neg"][i], False, None, s))

    manifest = DatasetManifest(params.width, params.height, tuple(grids), entries)
    manifest.write(out / MANIFEST_NAME)
    return manifest
