"""Numpy forward/backward primitives for the 2D segmentation network.

All tensors are (N, C, H, W).  Convolutions are same-padded, implemented via
im2col + matmul; col2im in the backward pass is vectorized over the k*k
kernel offsets instead of per-pixel scatter.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv2d_forward(x, w, b):
    """Same-padded 2D convolution (cross-correlation).

    x: (N, C, H, W); w: (F, C, k, k); b: (F,).  Returns (y, cache).
    """
    n, c, h, width = x.shape
    f, _, k, _ = w.shape
    pad = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    windows = sliding_window_view(xp, (k, k), axis=(2, 3))  # (N, C, H, W, k, k)
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * h * width, c * k * k)
    cols = np.ascontiguousarray(cols)
    y = cols @ w.reshape(f, -1).T + b
    y = y.reshape(n, h, width, f).transpose(0, 3, 1, 2)
    return np.ascontiguousarray(y), (cols, x.shape, w.shape)


def conv2d_backward(dy, w, cache):
    """Gradients for conv2d_forward. Returns (dx, dw, db)."""
    cols, x_shape, w_shape = cache
    n, c, h, width = x_shape
    f, _, k, _ = w_shape
    pad = k // 2

    dy_mat = dy.transpose(0, 2, 3, 1).reshape(n * h * width, f)
    dw = (dy_mat.T @ cols).reshape(w_shape)
    db = dy_mat.sum(axis=0)

    dcols = dy_mat @ w.reshape(f, -1)  # (N*H*W, C*k*k)
    dcols = dcols.reshape(n, h, width, c, k, k)
    dxp = np.zeros((n, c, h + 2 * pad, width + 2 * pad), dtype=dy.dtype)
    for i in range(k):
        for j in range(k):
            dxp[:, :, i : i + h, j : j + width] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    dx = dxp[:, :, pad : pad + h, pad : pad + width]
    return dx, dw, db


def relu_forward(x):
    return np.maximum(x, 0), x > 0


def relu_backward(dy, cache):
    return dy * cache


def maxpool2x2_forward(x):
    """2x2 max pooling, stride 2. Ties route the gradient to the first max."""
    n, c, h, w = x.shape
    windows = x.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
    flat = windows.reshape(n, c, h // 2, w // 2, 4)
    idx = flat.argmax(axis=-1)
    y = np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]
    return y, (idx, x.shape)


def maxpool2x2_backward(dy, cache):
    idx, x_shape = cache
    n, c, h, w = x_shape
    dflat = np.zeros((n, c, h // 2, w // 2, 4), dtype=dy.dtype)
    np.put_along_axis(dflat, idx[..., None], dy[..., None], axis=-1)
    dx = dflat.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    return dx.reshape(n, c, h, w)


def upsample2x_forward(x):
    """Parameter-free nearest-neighbor 2x upsampling."""
    return np.repeat(np.repeat(x, 2, axis=2), 2, axis=3)


def upsample2x_backward(dy):
    n, c, h, w = dy.shape
    return dy.reshape(n, c, h // 2, 2, w // 2, 2).sum(axis=(3, 5))


def concat_forward(a, b):
    """Channel concatenation (skip connections)."""
    return np.concatenate([a, b], axis=1), a.shape[1]


def concat_backward(dy, split):
    return dy[:, :split], dy[:, split:]


def sigmoid_forward(x):
    y = np.empty_like(x)
    pos = x >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    y[~pos] = ex / (1.0 + ex)
    return y, y


def sigmoid_backward(dy, cache):
    return dy * cache * (1.0 - cache)
