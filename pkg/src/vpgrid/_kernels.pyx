# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_fallback.py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from cython cimport floating
from libc.math cimport floor

cnp.import_array()


def hough_accumulate(xs, ys, cos_t, sin_t, double rho_max, double rho_resolution, Py_ssize_t rho_bins):
    cdef const double[::1] vx = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[::1] vy = np.ascontiguousarray(ys, dtype=np.float64)
    cdef const double[::1] vc = np.ascontiguousarray(cos_t, dtype=np.float64)
    cdef const double[::1] vs = np.ascontiguousarray(sin_t, dtype=np.float64)
    cdef Py_ssize_t n_theta = vc.shape[0], n_pts = vx.shape[0], t, i, b
    votes = np.zeros((n_theta, rho_bins), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] acc = votes
    cdef double rho, c, s
    with nogil:
        for t in range(n_theta):
            c = vc[t]
            s = vs[t]
            for i in range(n_pts):
                rho = vx[i] * c + vy[i] * s
                b = <Py_ssize_t> floor((rho + rho_max) / rho_resolution + 0.5)
                if b < 0:
                    b = 0
                elif b >= rho_bins:
                    b = rho_bins - 1
                acc[t, b] += 1
    return votes


def im2col(floating[:, :, :, ::1] x, Py_ssize_t k, Py_ssize_t stride):
    cdef Py_ssize_t B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3]
    cdef Py_ssize_t Ho = (H - k) // stride + 1, Wo = (W - k) // stride + 1
    dtype = np.float64 if floating is double else np.float32
    out = np.empty((B * Ho * Wo, C * k * k), dtype=dtype)
    cdef floating[:, ::1] o = out
    cdef Py_ssize_t b, oh, ow, c, ki, kj, r, col
    with nogil:
        for b in range(B):
            for oh in range(Ho):
                for ow in range(Wo):
                    r = (b * Ho + oh) * Wo + ow
                    col = 0
                    for c in range(C):
                        for ki in range(k):
                            for kj in range(k):
                                o[r, col] = x[b, c, oh * stride + ki, ow * stride + kj]
                                col = col + 1
    return out


def col2im(floating[:, ::1] cols, shape, Py_ssize_t k, Py_ssize_t stride):
    cdef Py_ssize_t B = shape[0], C = shape[1], H = shape[2], W = shape[3]
    cdef Py_ssize_t Ho = (H - k) // stride + 1, Wo = (W - k) // stride + 1
    dtype = np.float64 if floating is double else np.float32
    out = np.zeros((B, C, H, W), dtype=dtype)
    cdef floating[:, :, :, ::1] d = out
    cdef Py_ssize_t b, oh, ow, c, ki, kj, r
    # (ki, kj) outermost per element so the add order matches the numpy path
    with nogil:
        for b in range(B):
            for c in range(C):
                for ki in range(k):
                    for kj in range(k):
                        for oh in range(Ho):
                            for ow in range(Wo):
                                r = (b * Ho + oh) * Wo + ow
                                d[b, c, oh * stride + ki, ow * stride + kj] += cols[r, (c * k + ki) * k + kj]
    return out


def maxpool_forward(floating[:, :, :, ::1] x, Py_ssize_t window, Py_ssize_t stride):
    cdef Py_ssize_t B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3]
    cdef Py_ssize_t Ho = (H - window) // stride + 1, Wo = (W - window) // stride + 1
    dtype = np.float64 if floating is double else np.float32
    out = np.empty((B, C, Ho, Wo), dtype=dtype)
    arg = np.empty((B, C, Ho, Wo), dtype=np.int64)
    cdef floating[:, :, :, ::1] o = out
    cdef cnp.int64_t[:, :, :, ::1] a = arg
    cdef Py_ssize_t b, c, oh, ow, i, j, best
    cdef floating m, v
    with nogil:
        for b in range(B):
            for c in range(C):
                for oh in range(Ho):
                    for ow in range(Wo):
                        m = x[b, c, oh * stride, ow * stride]
                        best = 0
                        for i in range(window):
                            for j in range(window):
                                v = x[b, c, oh * stride + i, ow * stride + j]
                                if v > m:
                                    m = v
                                    best = i * window + j
                        o[b, c, oh, ow] = m
                        a[b, c, oh, ow] = best
    return out, arg


def maxpool_backward(floating[:, :, :, ::1] dout, cnp.int64_t[:, :, :, ::1] arg, shape,
                     Py_ssize_t window, Py_ssize_t stride):
    cdef Py_ssize_t B = shape[0], C = shape[1], H = shape[2], W = shape[3]
    cdef Py_ssize_t Ho = dout.shape[2], Wo = dout.shape[3]
    dtype = np.float64 if floating is double else np.float32
    dx = np.zeros((B, C, H, W), dtype=dtype)
    cdef floating[:, :, :, ::1] d = dx
    cdef Py_ssize_t b, c, oh, ow, idx
    with nogil:
        for b in range(B):
            for c in range(C):
                for oh in range(Ho):
                    for ow in range(Wo):
                        idx = arg[b, c, oh, ow]
                        d[b, c, oh * stride + idx // window, ow * stride + idx % window] += dout[b, c, oh, ow]
    return dx
