"""Pure numpy implementations of the hot kernels.

Each function here has a compiled twin in ``_kernels.pyx`` with the same
signature.  Both must produce bit-identical output; summation orders are
matched on purpose.
"""

import numpy as np


def hough_accumulate(xs, ys, cos_t, sin_t, rho_max, rho_resolution, rho_bins):
    """Vote every (x, y) into every theta row of a (theta, rho) accumulator."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    votes = np.zeros((cos_t.size, rho_bins), dtype=np.int64)
    if xs.size == 0:
        return votes
    rho = xs[None, :] * cos_t[:, None] + ys[None, :] * sin_t[:, None]
    bins = np.floor((rho + rho_max) / rho_resolution + 0.5).astype(np.int64)
    np.clip(bins, 0, rho_bins - 1, out=bins)
    flat = bins + (np.arange(cos_t.size, dtype=np.int64) * rho_bins)[:, None]
    votes += np.bincount(flat.ravel(), minlength=votes.size).reshape(votes.shape)
    return votes


def im2col(x, k, stride):
    """(B, C, H, W) padded input -> (B*Ho*Wo, C*k*k) patch matrix."""
    b, c, h, w = x.shape
    ho = (h - k) // stride + 1
    wo = (w - k) // stride + 1
    sb, sc, sh, sw = x.strides
    patches = np.lib.stride_tricks.as_strided(
        x,
        shape=(b, ho, wo, c, k, k),
        strides=(sb, sh * stride, sw * stride, sc, sh, sw),
        writeable=False,
    )
    return np.ascontiguousarray(patches).reshape(b * ho * wo, c * k * k)


def col2im(cols, shape, k, stride):
    """Adjoint of :func:`im2col`: scatter-add patch rows back into (B, C, H, W)."""
    b, c, h, w = shape
    ho = (h - k) // stride + 1
    wo = (w - k) // stride + 1
    patches = cols.reshape(b, ho, wo, c, k, k)
    out = np.zeros(shape, dtype=cols.dtype)
    for ki in range(k):
        for kj in range(k):
            out[:, :, ki:ki + stride * ho:stride, kj:kj + stride * wo:stride] += (
                patches[:, :, :, :, ki, kj].transpose(0, 3, 1, 2)
            )
    return out


def maxpool_forward(x, window, stride):
    """Max over windows; also returns the flat in-window argmax (first wins)."""
    b, c, h, w = x.shape
    ho = (h - window) // stride + 1
    wo = (w - window) // stride + 1
    sb, sc, sh, sw = x.strides
    win = np.lib.stride_tricks.as_strided(
        x,
        shape=(b, c, ho, wo, window, window),
        strides=(sb, sc, sh * stride, sw * stride, sh, sw),
        writeable=False,
    ).reshape(b, c, ho, wo, window * window)
    arg = win.argmax(axis=-1)
    out = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
    return np.ascontiguousarray(out), arg.astype(np.int64)


def maxpool_backward(dout, arg, shape, window, stride):
    b, c, h, w = shape
    _, _, ho, wo = dout.shape
    dx = np.zeros(shape, dtype=dout.dtype)
    rows = (np.arange(ho)[None, None, :, None] * stride) + arg // window
    cols = (np.arange(wo)[None, None, None, :] * stride) + arg % window
    bi = np.broadcast_to(np.arange(b)[:, None, None, None], arg.shape)
    ci = np.broadcast_to(np.arange(c)[None, :, None, None], arg.shape)
    np.add.at(dx, (bi.ravel(), ci.ravel(), rows.ravel(), cols.ravel()), dout.ravel())
    return dx
