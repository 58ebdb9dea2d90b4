"""The trainable network: an ordered layer stack with a softmax head."""

from __future__ import annotations

import numpy as np

from ..errors import DomainError
from .layers import (
    Conv,
    ConvLayer,
    Dense,
    DenseLayer,
    Flatten,
    FlattenLayer,
    MaxPool,
    MaxPoolLayer,
    ReLU,
    ReLULayer,
    infer_shapes,
)


# std of the head layer's initial weights; keeps starting logits near zero
HEAD_INIT_STD = 0.001


def reference_specs(head_classes: int) -> list:
    """Desk-scale architecture for 64x64 single-channel input."""
    return [
        Conv(8, 3, 1, 1), ReLU(), MaxPool(2, 2),
        Conv(16, 3, 1, 1), ReLU(), MaxPool(2, 2),
        Conv(32, 3, 1, 1), ReLU(), MaxPool(2, 2),
        Flatten(), Dense(128), ReLU(), Dense(head_classes),
    ]


class Network:
    """Layer stack mapping ``(B, C, H, W)`` batches to ``(B, head_classes)`` logits."""

    def __init__(self, specs, input_shape, dtype=np.float32):
        self.specs = list(specs)
        self.input_shape = tuple(int(v) for v in input_shape)
        self.dtype = np.dtype(dtype)
        self.shapes = infer_shapes(self.specs, self.input_shape)
        if not self.specs or not isinstance(self.specs[-1], Dense):
            raise DomainError("the last layer must be Dense (the classification head)")
        self.layers = []
        for spec, shape in zip(self.specs, self.shapes):
            if isinstance(spec, Conv):
                self.layers.append(ConvLayer(spec, shape[0], dtype=self.dtype))
            elif isinstance(spec, Dense):
                self.layers.append(DenseLayer(spec, shape[0], dtype=self.dtype))
            elif isinstance(spec, ReLU):
                self.layers.append(ReLULayer(spec))
            elif isinstance(spec, MaxPool):
                self.layers.append(MaxPoolLayer(spec))
            elif isinstance(spec, Flatten):
                self.layers.append(FlattenLayer(spec))

    @property
    def head_classes(self) -> int:
        return self.specs[-1].out_features

    def parameters(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params]

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def init(self, seed: int, head_std: float | None = HEAD_INIT_STD) -> "Network":
        """He-normal weights (std ``sqrt(2 / fan_in)``), zero biases.

        The head gets std ``head_std`` instead (None: He like the rest), so a
        fresh net is close to uniform and its starting loss is about
        ``ln(head_classes)``.
        """
        rng = np.random.default_rng(seed)
        head = self.layers[-1]
        for layer in self.layers:
            if layer.params:
                he = np.sqrt(2.0 / layer.fan_in)
                std = head_std if layer is head and head_std is not None else he
                layer.weight[...] = rng.standard_normal(layer.weight.shape) * std
                layer.bias[...] = 0
        return self

    def astype(self, dtype) -> "Network":
        """Copy with parameters cast to ``dtype``."""
        out = Network(self.specs, self.input_shape, dtype)
        for dst, src in zip(out.parameters(), self.parameters()):
            dst[...] = src
        return out

    def copy(self) -> "Network":
        return self.astype(self.dtype)

    def forward(self, batch) -> np.ndarray:
        x = np.asarray(batch)
        if x.ndim != 4 or x.shape[1:] != self.input_shape:
            raise DomainError(
                f"layer 0 ({type(self.specs[0]).__name__}) expects input (B, {', '.join(map(str, self.input_shape))}), "
                f"got {x.shape}"
            )
        x = np.ascontiguousarray(x, dtype=self.dtype)
        for layer in self.layers:
            x = layer.forward(x)
        return x

    __call__ = forward

    def backward(self, dlogits) -> list[np.ndarray]:
        """Gradients for :meth:`parameters`, given d(loss)/d(logits)."""
        grads: list[list[np.ndarray]] = []
        d = np.asarray(dlogits, dtype=self.dtype)
        for layer in reversed(self.layers):
            d, g = layer.backward(d)
            grads.append(g)
        return [g for layer_grads in reversed(grads) for g in layer_grads]

    def kink_signature(self) -> list:
        return [sig.copy() for sig in (layer.kink_signature() for layer in self.layers) if sig is not None]


def build_network(
    specs, input_shape=(1, 64, 64), seed: int = 0, dtype=np.float32, head_std: float | None = HEAD_INIT_STD
) -> Network:
    return Network(specs, input_shape, dtype).init(seed, head_std)


def reference_network(head_classes: int, size: int = 64, seed: int = 0, dtype=np.float32) -> Network:
    return build_network(reference_specs(head_classes), (1, size, size), seed, dtype)
