"""Finite-difference verification of :meth:`Network.backward`."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .loss import softmax_cross_entropy
from .network import Network


@dataclass
class GradCheckResult:
    max_relative_error: float
    checked: int
    excluded: int

    def __float__(self):
        return self.max_relative_error


def relative_error(a: float, n: float) -> float:
    return abs(a - n) / max(abs(a), abs(n), 1e-8)


def _same(sig_a, sig_b) -> bool:
    return all(np.array_equal(a, b) for a, b in zip(sig_a, sig_b))


def grad_check(
    net: Network,
    batch,
    labels,
    eps: float = 1e-4,
    max_params: int | None = 2000,
    sample: int = 256,
    seed: int = 0,
) -> GradCheckResult:
    """Compare analytic gradients with central differences.

    The check runs on a float64 copy of ``net``.  Nets with more than
    ``max_params`` parameters are checked on a random subset of ``sample``
    entries.  A parameter whose +eps or -eps evaluation flips a ReLU or changes
    a max-pool winner sits on a kink; it is counted in ``excluded`` and left out
    of the maximum.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    net = net.astype(np.float64)
    x = np.asarray(batch, dtype=np.float64)
    _, dlogits = softmax_cross_entropy(net.forward(x), labels)
    base_sig = net.kink_signature()
    grads = net.backward(dlogits)
    params = net.parameters()

    index = [(pi, j) for pi, p in enumerate(params) for j in range(p.size)]
    if max_params is not None and len(index) > max_params:
        rng = np.random.default_rng(seed)
        pick = rng.choice(len(index), size=min(sample, len(index)), replace=False)
        index = [index[i] for i in sorted(pick)]

    def evaluate():
        loss, _ = softmax_cross_entropy(net.forward(x), labels)
        return loss, net.kink_signature()

    worst, checked, excluded = 0.0, 0, 0
    for pi, j in index:
        flat = params[pi].reshape(-1)
        original = flat[j]
        flat[j] = original + eps
        plus, sig_plus = evaluate()
        flat[j] = original - eps
        minus, sig_minus = evaluate()
        flat[j] = original
        if not (_same(sig_plus, base_sig) and _same(sig_minus, base_sig)):
            excluded += 1
            continue
        numeric = (plus - minus) / (2 * eps)
        analytic = float(grads[pi].reshape(-1)[j])
        worst = max(worst, relative_error(analytic, numeric))
        checked += 1
    return GradCheckResult(worst, checked, excluded)
