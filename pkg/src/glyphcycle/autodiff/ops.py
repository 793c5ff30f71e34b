"""Differentiable kernels for the generator, discriminator and classifier.

Feature maps are NCHW. Convolutions use strided window views with
``tensordot``; the adjoint scatters kernel taps back one offset at a time.
Padding is always zero padding.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

from ..errors import ConfigError, DimensionError
from .tensor import Tensor, record

LOG_EPS = 1e-7
LEAKY_SLOPE = 0.2


def _check_4d(x, what):
    if x.ndim != 4:
        raise DimensionError(f"{what} must be 4-D (N, C, H, W)", x.shape)


def _out_extent(size, k, stride, pad):
    return (size + 2 * pad - k) // stride + 1


def _windows(xp, k, stride, out_h, out_w):
    """View of shape (N, C, k, k, out_h, out_w) over a padded input."""
    n, c, _, _ = xp.shape
    sn, sc, sh, sw = xp.strides
    return as_strided(
        xp,
        shape=(n, c, k, k, out_h, out_w),
        strides=(sn, sc, sh, sw, sh * stride, sw * stride),
        writeable=False,
    )


def _scatter_taps(cols, canvas, stride, in_h, in_w):
    """Add tap columns (C, k, k, N, in_h, in_w) into ``canvas`` on the stride grid."""
    _, k, _, _, _, _ = cols.shape
    span_h = stride * (in_h - 1) + 1
    span_w = stride * (in_w - 1) + 1
    for i in range(k):
        for j in range(k):
            canvas[:, :, i : i + span_h : stride, j : j + span_w : stride] += cols[:, i, j].transpose(1, 0, 2, 3)
    return canvas


def _pad(x, pad):
    if pad == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))


def _bias_data(bias, channels, dtype):
    if bias is None:
        return None
    if bias.shape != (channels,):
        raise DimensionError("bias length must equal output channels", bias.shape, (channels,))
    return bias.data.astype(dtype, copy=False)


def conv2d(x, weight, bias=None, stride=1, pad=0):
    _check_4d(x, "conv2d input")
    _check_4d(weight, "conv2d weight")
    c_out, c_in, k, k2 = weight.shape
    if k != k2:
        raise DimensionError("conv2d kernels must be square", weight.shape)
    if x.shape[1] != c_in:
        raise DimensionError("conv2d input channels differ from weight C_in", x.shape, weight.shape)
    n, _, h, w = x.shape
    out_h, out_w = _out_extent(h, k, stride, pad), _out_extent(w, k, stride, pad)
    if out_h <= 0 or out_w <= 0 or stride < 1:
        raise ConfigError(f"conv2d output extent non-positive for input {x.shape}, k={k}, stride={stride}, pad={pad}")
    b = _bias_data(bias, c_out, x.dtype)

    xp = _pad(x.data, pad)
    win = _windows(xp, k, stride, out_h, out_w)
    out = np.tensordot(win, weight.data, axes=([1, 2, 3], [1, 2, 3])).transpose(0, 3, 1, 2)
    if b is not None:
        out = out + b[None, :, None, None]
    out = np.ascontiguousarray(out)

    def backward(g):
        gw = np.tensordot(g, win, axes=([0, 2, 3], [0, 4, 5])) if weight.requires_grad else None
        gb = g.sum(axis=(0, 2, 3)) if bias is not None and bias.requires_grad else None
        gx = None
        if x.requires_grad:
            cols = np.tensordot(weight.data, g, axes=([0], [1]))
            canvas = np.zeros(xp.shape, dtype=g.dtype)
            _scatter_taps(cols, canvas, stride, out_h, out_w)
            gx = canvas[:, :, pad : pad + h, pad : pad + w] if pad else canvas
        return (gx, gw, gb)

    inputs = (x, weight) if bias is None else (x, weight, bias)
    return record("conv2d", out, inputs, backward)


def conv_transpose_extent(size, k, stride, pad, output_padding=0):
    return (size - 1) * stride - 2 * pad + k + output_padding


def conv_transpose2d(x, weight, bias=None, stride=1, pad=0, output_padding=0):
    """Fractionally-strided convolution; ``weight`` is (C_in, C_out, k, k)."""
    _check_4d(x, "conv_transpose2d input")
    _check_4d(weight, "conv_transpose2d weight")
    c_in, c_out, k, k2 = weight.shape
    if k != k2:
        raise DimensionError("conv_transpose2d kernels must be square", weight.shape)
    if x.shape[1] != c_in:
        raise DimensionError("conv_transpose2d input channels differ from weight C_in", x.shape, weight.shape)
    if stride < 1 or not 0 <= output_padding < stride:
        raise ConfigError(f"invalid stride/output_padding {stride}/{output_padding}")
    n, _, h, w = x.shape
    out_h = conv_transpose_extent(h, k, stride, pad, output_padding)
    out_w = conv_transpose_extent(w, k, stride, pad, output_padding)
    if out_h <= 0 or out_w <= 0:
        raise ConfigError(f"conv_transpose2d output extent non-positive for input {x.shape}")
    b = _bias_data(bias, c_out, x.dtype)

    full_h = (h - 1) * stride + k + output_padding
    full_w = (w - 1) * stride + k + output_padding
    cols = np.tensordot(weight.data, x.data, axes=([0], [1]))
    canvas = np.zeros((n, c_out, full_h, full_w), dtype=cols.dtype)
    _scatter_taps(cols, canvas, stride, h, w)
    out = canvas[:, :, pad : pad + out_h, pad : pad + out_w]
    if b is not None:
        out = out + b[None, :, None, None]
    out = np.ascontiguousarray(out)

    def backward(g):
        gfull = np.zeros((n, c_out, full_h, full_w), dtype=g.dtype)
        gfull[:, :, pad : pad + out_h, pad : pad + out_w] = g
        win = _windows(gfull, k, stride, h, w)
        gx = None
        if x.requires_grad:
            gx = np.ascontiguousarray(np.tensordot(win, weight.data, axes=([1, 2, 3], [1, 2, 3])).transpose(0, 3, 1, 2))
        gw = np.tensordot(x.data, win, axes=([0, 2, 3], [0, 4, 5])) if weight.requires_grad else None
        gb = g.sum(axis=(0, 2, 3)) if bias is not None and bias.requires_grad else None
        return (gx, gw, gb)

    inputs = (x, weight) if bias is None else (x, weight, bias)
    return record("conv_transpose2d", out, inputs, backward)


def instance_norm(x, gain, shift, eps=1e-5):
    _check_4d(x, "instance_norm input")
    c = x.shape[1]
    if gain.shape != (c,) or shift.shape != (c,):
        raise DimensionError("instance_norm gain/shift must match channel count", x.shape, gain.shape, shift.shape)
    if eps <= 0:
        raise ConfigError("instance_norm eps must be positive")
    xd = x.data
    m = xd.shape[2] * xd.shape[3]
    mean = xd.mean(axis=(2, 3), keepdims=True)
    centered = xd - mean
    var = (centered * centered).mean(axis=(2, 3), keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std
    gd = gain.data[None, :, None, None]
    out = xhat * gd + shift.data[None, :, None, None]

    def backward(g):
        ggain = (g * xhat).sum(axis=(0, 2, 3)) if gain.requires_grad else None
        gshift = g.sum(axis=(0, 2, 3)) if shift.requires_grad else None
        gx = None
        if x.requires_grad:
            gxhat = g * gd
            s1 = gxhat.sum(axis=(2, 3), keepdims=True)
            s2 = (gxhat * xhat).sum(axis=(2, 3), keepdims=True)
            gx = (inv_std / m) * (m * gxhat - s1 - xhat * s2)
        return (gx, ggain, gshift)

    return record("instance_norm", out, (x, gain, shift), backward)


def _sigmoid(v):
    return 0.5 * (1.0 + np.tanh(0.5 * v))


def pointwise(x, kind):
    xd = x.data
    if kind == "relu":
        mask = xd > 0
        out = np.where(mask, xd, 0).astype(xd.dtype)
        dydx = mask.astype(xd.dtype)
    elif kind == "leaky_relu":
        mask = xd > 0
        out = np.where(mask, xd, LEAKY_SLOPE * xd).astype(xd.dtype)
        dydx = np.where(mask, 1.0, LEAKY_SLOPE).astype(xd.dtype)
    elif kind == "tanh":
        out = np.tanh(xd)
        dydx = 1.0 - out * out
    elif kind == "sigmoid":
        out = _sigmoid(xd)
        dydx = out * (1.0 - out)
    else:
        raise ConfigError(f"unknown pointwise kind {kind!r}")

    return record(kind, out, (x,), lambda g: (g * dydx,))


def relu(x):
    return pointwise(x, "relu")


def leaky_relu(x):
    return pointwise(x, "leaky_relu")


def tanh(x):
    return pointwise(x, "tanh")


def sigmoid(x):
    return pointwise(x, "sigmoid")


def concat_channels(inputs):
    inputs = list(inputs)
    if not inputs:
        raise DimensionError("concat_channels needs at least one input")
    for t in inputs:
        _check_4d(t, "concat_channels input")
    ref = inputs[0].shape
    for t in inputs[1:]:
        if t.shape[0] != ref[0] or t.shape[2:] != ref[2:]:
            raise DimensionError("concat_channels inputs must share N, H, W", ref, t.shape)
    out = np.concatenate([t.data for t in inputs], axis=1)
    bounds = np.cumsum([t.shape[1] for t in inputs])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=1))

    return record("concat_channels", out, inputs, backward)


def add(a, b):
    if a.shape != b.shape:
        raise DimensionError("add operands must have identical shapes", a.shape, b.shape)
    return record("add", a.data + b.data, (a, b), lambda g: (g, g))


residual_add = add


def sub(a, b):
    if a.shape != b.shape:
        raise DimensionError("sub operands must have identical shapes", a.shape, b.shape)
    return record("sub", a.data - b.data, (a, b), lambda g: (g, -g))


def scale(a, c):
    c = float(c)
    return record("scale", (a.data * c).astype(a.dtype), (a,), lambda g: (g * c,))


def add_constant(a, c):
    return record("add_constant", (a.data + c).astype(a.dtype), (a,), lambda g: (g,))


def _mean(values, dtype):
    return np.asarray(values.mean(dtype=np.float64), dtype=dtype)


def reduce_loss(x, kind, target=None):
    """Mean over all elements of |x - target|, -log x or -log(1 - x).

    Log kinds clamp to [LOG_EPS, 1 - LOG_EPS]; the clamp passes no gradient.
    """
    xd = x.data
    m = xd.size
    if kind == "mean_abs":
        if target is None:
            diff = xd
            inputs = (x,)
        else:
            if target.shape != x.shape:
                raise DimensionError("mean_abs operands must have identical shapes", x.shape, target.shape)
            diff = xd - target.data
            inputs = (x, target)
        out = _mean(np.abs(diff), xd.dtype)
        sign = np.sign(diff).astype(xd.dtype)

        def backward(g):
            gx = sign * (g / m)
            return (gx, -gx) if target is not None else (gx,)

        return record("mean_abs", out, inputs, backward)

    inside = (xd >= LOG_EPS) & (xd <= 1 - LOG_EPS)
    p = np.clip(xd, LOG_EPS, 1 - LOG_EPS)
    if kind == "mean_neg_log":
        out = _mean(-np.log(p), xd.dtype)
        local = np.where(inside, -1.0 / p, 0.0).astype(xd.dtype)
    elif kind == "mean_neg_log1m":
        out = _mean(-np.log1p(-p), xd.dtype)
        local = np.where(inside, 1.0 / (1.0 - p), 0.0).astype(xd.dtype)
    else:
        raise ConfigError(f"unknown loss kind {kind!r}")
    return record(kind, out, (x,), lambda g: (local * (g / m),))


def spatial_mean(x):
    _check_4d(x, "spatial_mean input")
    hw = x.shape[2] * x.shape[3]
    out = x.data.mean(axis=(2, 3))

    def backward(g):
        return (np.broadcast_to(g[:, :, None, None] / hw, x.shape).astype(x.dtype),)

    return record("spatial_mean", out, (x,), backward)


def linear(x, weight, bias=None):
    """Dense layer: x (N, F), weight (K, F), bias (K,)."""
    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[1]:
        raise DimensionError("linear expects x (N, F) and weight (K, F)", x.shape, weight.shape)
    out = x.data @ weight.data.T
    if bias is not None:
        if bias.shape != (weight.shape[0],):
            raise DimensionError("linear bias length must equal K", bias.shape, (weight.shape[0],))
        out = out + bias.data

    def backward(g):
        gx = g @ weight.data if x.requires_grad else None
        gw = g.T @ x.data if weight.requires_grad else None
        gb = g.sum(axis=0) if bias is not None and bias.requires_grad else None
        return (gx, gw, gb)

    inputs = (x, weight) if bias is None else (x, weight, bias)
    return record("linear", out, inputs, backward)


def log_softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(z):
    """Row probabilities as a plain float64 array (not recorded on the tape)."""
    z = z.data if isinstance(z, Tensor) else z
    return np.exp(log_softmax(np.asarray(z, dtype=np.float64)))


def softmax_cross_entropy(logits, labels):
    """Mean negative log-likelihood of integer ``labels`` under softmax(logits)."""
    if logits.ndim != 2:
        raise DimensionError("logits must be (N, K)", logits.shape)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (logits.shape[0],):
        raise DimensionError("one label per logit row", labels.shape, logits.shape)
    n = logits.shape[0]
    lsm = log_softmax(logits.data)
    out = np.asarray(-lsm[np.arange(n), labels].mean(dtype=np.float64), dtype=logits.dtype)

    def backward(g):
        p = np.exp(lsm)
        p[np.arange(n), labels] -= 1.0
        return (p * (g / n),)

    return record("softmax_cross_entropy", out, (logits,), backward)
