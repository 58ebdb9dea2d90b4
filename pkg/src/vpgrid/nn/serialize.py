"""Binary model files.

Layout (all integers little-endian int32, all floats little-endian float32)::

    b"VPG1" | layer_count | in_c in_h in_w
    per layer: type_tag, hyperparameters...
    per parametric layer, in order: weight then bias, each as
        ndim, dims..., values
"""

from __future__ import annotations

import os
import struct

import numpy as np

from ..errors import DomainError, ParseError
from .layers import Conv, Dense, Flatten, MaxPool, ReLU
from .network import Network

MAGIC = b"VPG1"
_TAGS = {Conv: 1, ReLU: 2, MaxPool: 3, Flatten: 4, Dense: 5}
_HYPER = {
    Conv: ("out_channels", "kernel", "stride", "padding"),
    ReLU: (),
    MaxPool: ("window", "stride"),
    Flatten: (),
    Dense: ("out_features",),
}
_BY_TAG = {tag: cls for cls, tag in _TAGS.items()}


def _ints(*values) -> bytes:
    return struct.pack(f"<{len(values)}i", *values)


def encode_model(net: Network) -> bytes:
    params = net.parameters()
    if not all(np.all(np.isfinite(p)) for p in params):
        raise DomainError("cannot save a model with non-finite parameters")
    out = [MAGIC, _ints(len(net.specs), *net.input_shape)]
    for spec in net.specs:
        cls = type(spec)
        out.append(_ints(_TAGS[cls], *(getattr(spec, f) for f in _HYPER[cls])))
    for p in params:
        out.append(_ints(p.ndim, *p.shape))
        out.append(np.ascontiguousarray(p, dtype="<f4").tobytes())
    return b"".join(out)


def save_model(net: Network, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_model(net))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise ParseError(f"truncated model file while reading {what}", self.pos)
        chunk = self.buf[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def ints(self, count: int, what: str) -> tuple[int, ...]:
        return struct.unpack(f"<{count}i", self.take(4 * count, what))


def decode_model(buf: bytes) -> Network:
    r = _Reader(buf)
    if r.take(4, "magic") != MAGIC:
        raise ParseError("bad magic, expected b'VPG1'", 0)
    count, c, h, w = r.ints(4, "header")
    if count < 1 or count > 10_000:
        raise ParseError(f"implausible layer count {count}", 4)
    specs = []
    for i in range(count):
        at = r.pos
        (tag,) = r.ints(1, f"layer {i} tag")
        cls = _BY_TAG.get(tag)
        if cls is None:
            raise ParseError(f"unknown layer tag {tag}", at)
        specs.append(cls(*r.ints(len(_HYPER[cls]), f"layer {i} hyperparameters")))
    try:
        net = Network(specs, (c, h, w), np.float32)
    except DomainError as exc:
        raise ParseError(f"inconsistent architecture: {exc}", r.pos) from None
    for p in net.parameters():
        at = r.pos
        (ndim,) = r.ints(1, "tensor rank")
        shape = r.ints(ndim, "tensor shape") if ndim else ()
        if tuple(shape) != p.shape:
            raise ParseError(f"tensor shape {shape} does not match architecture {p.shape}", at)
        p[...] = np.frombuffer(r.take(4 * p.size, "tensor data"), dtype="<f4").reshape(p.shape)
    if r.pos != len(buf):
        raise ParseError("trailing bytes after last tensor", r.pos)
    return net


def load_model(path: str | os.PathLike) -> Network:
    with open(path, "rb") as fh:
        return decode_model(fh.read())
