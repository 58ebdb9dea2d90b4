"""Layer descriptors and their forward/backward implementations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import DomainError


@dataclass(frozen=True)
class Conv:
    out_channels: int
    kernel: int = 3
    stride: int = 1
    padding: int = 0


@dataclass(frozen=True)
class ReLU:
    pass


@dataclass(frozen=True)
class MaxPool:
    window: int = 2
    stride: int = 2


@dataclass(frozen=True)
class Flatten:
    pass


@dataclass(frozen=True)
class Dense:
    out_features: int


LayerSpec = Conv | ReLU | MaxPool | Flatten | Dense


def output_shape(spec: LayerSpec, shape: tuple[int, ...], position: int = 0) -> tuple[int, ...]:
    """Shape after ``spec`` for a per-sample input ``shape`` (no batch axis)."""
    name = f"layer {position} ({type(spec).__name__})"
    if isinstance(spec, (Conv, MaxPool)):
        if len(shape) != 3:
            raise DomainError(f"{name} expects a (C, H, W) input, got {shape}")
        c, h, w = shape
        if isinstance(spec, Conv):
            k, s, p = spec.kernel, spec.stride, spec.padding
            if spec.out_channels < 1 or k < 1 or s < 1 or p < 0:
                raise DomainError(f"{name}: invalid hyperparameters {spec}")
            c = spec.out_channels
        else:
            k, s, p = spec.window, spec.stride, 0
            if k < 1 or s < 1:
                raise DomainError(f"{name}: invalid hyperparameters {spec}")
        ho = (h + 2 * p - k) // s + 1
        wo = (w + 2 * p - k) // s + 1
        if h + 2 * p < k or w + 2 * p < k or ho < 1 or wo < 1:
            raise DomainError(f"{name}: input {shape} too small for window {k}")
        return (c, ho, wo)
    if isinstance(spec, ReLU):
        return shape
    if isinstance(spec, Flatten):
        return (int(np.prod(shape)),)
    if isinstance(spec, Dense):
        if len(shape) != 1:
            raise DomainError(f"{name} must follow Flatten, got input {shape}")
        if spec.out_features < 1:
            raise DomainError(f"{name}: out_features must be >= 1")
        return (spec.out_features,)
    raise DomainError(f"unknown layer spec {spec!r}")


def infer_shapes(specs, input_shape) -> list[tuple[int, ...]]:
    """Per-sample shapes: ``[input, after layer 0, after layer 1, ...]``."""
    shapes = [tuple(input_shape)]
    for i, spec in enumerate(specs):
        shapes.append(output_shape(spec, shapes[-1], i))
    return shapes


class Layer:
    """Runtime layer: parameters plus the cache of its last forward pass."""

    spec: LayerSpec
    params: list[np.ndarray] = []

    def forward(self, x):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError

    def kink_signature(self):
        """Non-smooth decisions of the last forward pass (None if smooth)."""
        return None


class ConvLayer(Layer):
    def __init__(self, spec: Conv, in_channels: int, weight=None, bias=None, dtype=np.float32):
        self.spec = spec
        k = spec.kernel
        shape = (spec.out_channels, in_channels, k, k)
        self.weight = np.zeros(shape, dtype) if weight is None else np.asarray(weight, dtype).reshape(shape)
        self.bias = np.zeros(spec.out_channels, dtype) if bias is None else np.asarray(bias, dtype)
        self.params = [self.weight, self.bias]

    @property
    def fan_in(self):
        return int(np.prod(self.weight.shape[1:]))

    def forward(self, x):
        p, k, s = self.spec.padding, self.spec.kernel, self.spec.stride
        if p:
            x = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        x = np.ascontiguousarray(x)
        b, _, h, w = x.shape
        ho, wo = (h - k) // s + 1, (w - k) // s + 1
        cols = kernels.im2col(x, k, s)
        wm = self.weight.reshape(self.weight.shape[0], -1)
        out = cols @ wm.T + self.bias
        self._cache = (cols, x.shape)
        return np.ascontiguousarray(out.reshape(b, ho, wo, -1).transpose(0, 3, 1, 2))

    def backward(self, dout):
        cols, padded_shape = self._cache
        o = self.weight.shape[0]
        dflat = dout.transpose(0, 2, 3, 1).reshape(-1, o)
        grad_w = (dflat.T @ cols).reshape(self.weight.shape)
        grad_b = dflat.sum(axis=0)
        dcols = np.ascontiguousarray(dflat @ self.weight.reshape(o, -1))
        dx = kernels.col2im(dcols, padded_shape, self.spec.kernel, self.spec.stride)
        p = self.spec.padding
        if p:
            dx = dx[:, :, p:-p, p:-p]
        return np.ascontiguousarray(dx), [grad_w, grad_b]


class ReLULayer(Layer):
    def __init__(self, spec: ReLU = ReLU()):
        self.spec = spec
        self.params = []

    def forward(self, x):
        self._mask = x > 0
        return np.where(self._mask, x, 0).astype(x.dtype, copy=False)

    def backward(self, dout):
        return dout * self._mask, []

    def kink_signature(self):
        return self._mask


class MaxPoolLayer(Layer):
    def __init__(self, spec: MaxPool):
        self.spec = spec
        self.params = []

    def forward(self, x):
        x = np.ascontiguousarray(x)
        out, arg = kernels.maxpool_forward(x, self.spec.window, self.spec.stride)
        self._cache = (arg, x.shape)
        return out

    def backward(self, dout):
        arg, shape = self._cache
        dx = kernels.maxpool_backward(np.ascontiguousarray(dout), arg, shape, self.spec.window, self.spec.stride)
        return dx, []

    def kink_signature(self):
        return self._cache[0]


class FlattenLayer(Layer):
    def __init__(self, spec: Flatten = Flatten()):
        self.spec = spec
        self.params = []

    def forward(self, x):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._shape), []


class DenseLayer(Layer):
    def __init__(self, spec: Dense, in_features: int, weight=None, bias=None, dtype=np.float32):
        self.spec = spec
        shape = (spec.out_features, in_features)
        self.weight = np.zeros(shape, dtype) if weight is None else np.asarray(weight, dtype).reshape(shape)
        self.bias = np.zeros(spec.out_features, dtype) if bias is None else np.asarray(bias, dtype)
        self.params = [self.weight, self.bias]

    @property
    def fan_in(self):
        return self.weight.shape[1]

    def forward(self, x):
        self._x = x
        return x @ self.weight.T + self.bias

    def backward(self, dout):
        return dout @ self.weight, [dout.T @ self._x, dout.sum(axis=0)]
