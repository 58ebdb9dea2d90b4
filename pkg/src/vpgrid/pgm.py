"""Binary PGM (P5, maxval 255) reading and writing for ``[0, 1]`` rasters."""

from __future__ import annotations

import os

import numpy as np

from .errors import DomainError, ParseError

_WHITESPACE = b" \t\n\r\v\f"


def quantize(img: np.ndarray) -> np.ndarray:
    """Map ``[0, 1]`` intensities to bytes with round-half-up."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise DomainError(f"expected a 2-D raster, got shape {img.shape}")
    if not np.all(np.isfinite(img)) or img.min(initial=0.0) < 0.0 or img.max(initial=0.0) > 1.0:
        raise DomainError("raster values must lie in [0, 1]")
    return np.floor(img * 255.0 + 0.5).astype(np.uint8)


def encode_pgm(img: np.ndarray) -> bytes:
    data = quantize(img)
    h, w = data.shape
    return b"P5\n%d %d\n255\n" % (w, h) + data.tobytes()


def write_pgm(img: np.ndarray, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pgm(img))


def _next_token(buf: bytes, pos: int) -> tuple[bytes, int, int]:
    n = len(buf)
    while pos < n:
        if buf[pos] in _WHITESPACE:
            pos += 1
        elif buf[pos] == ord("#"):
            while pos < n and buf[pos] not in b"\r\n":
                pos += 1
        else:
            break
    start = pos
    while pos < n and buf[pos] not in _WHITESPACE and buf[pos] != ord("#"):
        pos += 1
    if start == pos:
        raise ParseError("unexpected end of header", start)
    return buf[start:pos], start, pos


def decode_pgm(buf: bytes) -> np.ndarray:
    magic, _, pos = _next_token(buf, 0)
    if magic != b"P5":
        raise ParseError(f"bad magic {magic!r}, expected b'P5'", 0)
    fields = []
    for name in ("width", "height", "maxval"):
        tok, start, pos = _next_token(buf, pos)
        if not tok.isdigit() or int(tok) < 1:
            raise ParseError(f"invalid {name} {tok!r}", start)
        fields.append(int(tok))
    width, height, maxval = fields
    if maxval != 255:
        raise ParseError(f"unsupported maxval {maxval}, only 255 is accepted", start)
    if pos >= len(buf) or buf[pos] not in _WHITESPACE:
        raise ParseError("missing whitespace after maxval", pos)
    pos += 1
    need = width * height
    if len(buf) - pos < need:
        raise ParseError(
            f"truncated payload: need {need} bytes, have {len(buf) - pos}", len(buf)
        )
    data = np.frombuffer(buf, dtype=np.uint8, count=need, offset=pos)
    return data.reshape(height, width).astype(np.float64) / 255.0


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_pgm(fh.read())
