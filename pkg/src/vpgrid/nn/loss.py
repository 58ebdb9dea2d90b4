import numpy as np

from ..errors import DomainError


def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, labels) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient ``(softmax - onehot) / B``.

    Accumulates in float64 regardless of the logits' dtype.
    """
    z = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    b, k = z.shape
    if labels.shape != (b,) or labels.min(initial=0) < 0 or labels.max(initial=0) >= k:
        raise DomainError(f"labels must be {b} class indices in [0, {k})")
    z = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(b)
    loss = float(np.mean(log_norm - z[rows, labels]))
    grad = np.exp(z - log_norm[:, None])
    grad[rows, labels] -= 1.0
    return loss, grad / b
