"""Stateless forward/backward kernels for the layer kinds the network uses.

Arrays are NCHW numpy arrays. Every kernel works in the dtype of its input, so
training runs in float32 while gradient checks run the same code in float64.
"""

import math

import numpy as np
from numpy.lib.stride_tricks import as_strided

from ..errors import InvalidInputError, NumericError

ACTIVATIONS = ("relu", "leakyrelu", "prelu")
LEAKY_SLOPE = 0.01


def _pair(v):
    if isinstance(v, (tuple, list)):
        return int(v[0]), int(v[1])
    return int(v), int(v)


def same_padding(size, kernel, stride, dilation=1):
    """Return ``(out, pad_before, pad_after)`` for 'same' padding along one axis.

    The output extent is ``ceil(size / stride)``. Odd totals put the extra
    row/column after the data (bottom/right).
    """
    if size < 1 or kernel < 1 or stride < 1 or dilation < 1:
        raise InvalidInputError(
            f"invalid geometry size={size} kernel={kernel} stride={stride} dilation={dilation}")
    out = math.ceil(size / stride)
    extent = (kernel - 1) * dilation + 1
    total = max((out - 1) * stride + extent - size, 0)
    return out, total // 2, total - total // 2


def _windows(xp, out_hw, kernel, stride, dilation):
    """Strided view of shape (N, C, Ho, Wo, kh, kw) over a padded input."""
    n, c = xp.shape[:2]
    s0, s1, s2, s3 = xp.strides
    ho, wo = out_hw
    kh, kw = kernel
    sh, sw = stride
    dh, dw = dilation
    return as_strided(
        xp,
        shape=(n, c, ho, wo, kh, kw),
        strides=(s0, s1, s2 * sh, s3 * sw, s2 * dh, s3 * dw),
        writeable=False,
    )


def _pad_geometry(x, kernel, stride, dilation):
    h, w = x.shape[2:]
    ho, pt, pb = same_padding(h, kernel[0], stride[0], dilation[0])
    wo, pl, pr = same_padding(w, kernel[1], stride[1], dilation[1])
    return (ho, wo), ((pt, pb), (pl, pr))


# -- convolution -----------------------------------------------------------


def conv2d_forward(x, weight, bias, stride=1, dilation=1):
    """Dilated, strided cross-correlation with 'same' zero padding."""
    if x.ndim != 4 or weight.ndim != 4:
        raise InvalidInputError(f"conv2d expects 4-D input and weight, got {x.shape}, {weight.shape}")
    f, c, kh, kw = weight.shape
    if x.shape[1] != c:
        raise InvalidInputError(f"input has {x.shape[1]} channels, weight expects {c}")
    if bias is not None and bias.shape != (f,):
        raise InvalidInputError(f"bias shape {bias.shape} does not match {f} filters")
    stride, dilation = _pair(stride), _pair(dilation)
    out_hw, ((pt, pb), (pl, pr)) = _pad_geometry(x, (kh, kw), stride, dilation)
    xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
    win = _windows(xp, out_hw, (kh, kw), stride, dilation)
    out = np.tensordot(win, weight, axes=([1, 4, 5], [1, 2, 3]))  # N, Ho, Wo, F
    if bias is not None:
        out += bias
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2))


def conv2d_backward(x, weight, grad_out, stride=1, dilation=1, input_grad=True):
    """Gradients ``(grad_x, grad_w, grad_b)`` of :func:`conv2d_forward`.

    ``grad_x`` is ``None`` when ``input_grad`` is false (first layer).
    """
    f, c, kh, kw = weight.shape
    stride, dilation = _pair(stride), _pair(dilation)
    out_hw, ((pt, pb), (pl, pr)) = _pad_geometry(x, (kh, kw), stride, dilation)
    if grad_out.shape != (x.shape[0], f) + out_hw:
        raise InvalidInputError(
            f"grad_out shape {grad_out.shape} does not match forward output {(x.shape[0], f) + out_hw}")
    xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
    win = _windows(xp, out_hw, (kh, kw), stride, dilation)
    grad_w = np.tensordot(grad_out, win, axes=([0, 2, 3], [0, 2, 3]))
    grad_b = grad_out.sum(axis=(0, 2, 3))
    if not input_grad:
        return None, grad_w, grad_b

    ho, wo = out_hw
    sh, sw = stride
    dh, dw = dilation
    cols = np.tensordot(grad_out, weight, axes=([1], [0]))  # N, Ho, Wo, C, kh, kw
    cols = cols.transpose(0, 3, 1, 2, 4, 5)
    gxp = np.zeros_like(xp)
    for ky in range(kh):
        r0 = ky * dh
        for kx in range(kw):
            c0 = kx * dw
            gxp[:, :, r0:r0 + sh * (ho - 1) + 1:sh, c0:c0 + sw * (wo - 1) + 1:sw] += cols[:, :, :, :, ky, kx]
    h, w = x.shape[2:]
    return gxp[:, :, pt:pt + h, pl:pl + w], grad_w, grad_b


# -- max pooling -------------------------------------------------------------


def maxpool_forward(x, kernel, stride):
    """'same'-padded max pooling. Returns ``(out, argmax)``.

    ``argmax`` holds flat indices into ``x`` for routing gradients back.
    """
    kernel, stride = _pair(kernel), _pair(stride)
    n, c, h, w = x.shape
    (ho, wo), ((pt, pb), (pl, pr)) = _pad_geometry(x, kernel, stride, (1, 1))
    xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)), constant_values=-np.inf)
    win = _windows(xp, (ho, wo), kernel, stride, (1, 1)).reshape(n, c, ho, wo, -1)
    pos = win.argmax(axis=-1)
    out = np.take_along_axis(win, pos[..., None], axis=-1)[..., 0]
    if np.isneginf(out).any():
        raise NumericError("max-pool window covers only padding")
    ky, kx = np.divmod(pos, kernel[1])
    rows = np.arange(ho)[:, None] * stride[0] + ky - pt
    cols = np.arange(wo)[None, :] * stride[1] + kx - pl
    base = (np.arange(n)[:, None] * c + np.arange(c)[None, :]) * (h * w)
    argmax = base[:, :, None, None] + rows * w + cols
    return out, argmax


def maxpool_backward(grad_out, argmax, x_shape):
    size = int(np.prod(x_shape))
    gx = np.bincount(argmax.ravel(), weights=grad_out.ravel(), minlength=size)
    return gx.astype(grad_out.dtype, copy=False).reshape(x_shape)


# -- batch normalization -----------------------------------------------------


def batchnorm_forward(x, gamma, beta, running_mean, running_var, train=True,
                      eps=1e-5, momentum=0.1):
    """Per-channel batch normalization over (N, H, W).

    In train mode the running statistics are updated in place and a cache for
    :func:`batchnorm_backward` is returned; in infer mode the cache is ``None``.
    """
    if x.shape[0] == 0:
        raise InvalidInputError("batch normalization needs a non-empty batch")
    if x.shape[1] != gamma.shape[0]:
        raise InvalidInputError(f"input has {x.shape[1]} channels, parameters have {gamma.shape[0]}")
    shape = (1, -1, 1, 1)
    if not train:
        inv_std = 1.0 / np.sqrt(running_var + eps)
        scale = (gamma * inv_std).reshape(shape)
        shift = (beta - running_mean * gamma * inv_std).reshape(shape)
        return (x * scale + shift).astype(x.dtype, copy=False), None

    count = x.shape[0] * x.shape[2] * x.shape[3]
    mean = x.mean(axis=(0, 2, 3))
    centered = x - mean.reshape(shape)
    var = (centered * centered).mean(axis=(0, 2, 3))
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std.reshape(shape)
    out = xhat * gamma.reshape(shape) + beta.reshape(shape)

    unbiased = var * (count / (count - 1)) if count > 1 else var
    running_mean *= 1.0 - momentum
    running_mean += momentum * mean.astype(running_mean.dtype)
    running_var *= 1.0 - momentum
    running_var += momentum * unbiased.astype(running_var.dtype)
    return out, (xhat, inv_std, gamma)


def batchnorm_backward(grad_out, cache):
    xhat, inv_std, gamma = cache
    shape = (1, -1, 1, 1)
    count = grad_out.shape[0] * grad_out.shape[2] * grad_out.shape[3]
    grad_beta = grad_out.sum(axis=(0, 2, 3))
    grad_gamma = (grad_out * xhat).sum(axis=(0, 2, 3))
    grad_x = (gamma * inv_std).reshape(shape) * (
        grad_out - (grad_beta.reshape(shape) + xhat * grad_gamma.reshape(shape)) / count)
    return grad_x, grad_gamma, grad_beta


# -- activations ---------------------------------------------------------------


def _slope(x, kind, slopes):
    if kind == "relu":
        return None
    if kind == "leakyrelu":
        return LEAKY_SLOPE
    if kind == "prelu":
        slopes = np.asarray(slopes, dtype=x.dtype)
        if slopes.shape != (x.shape[1],):
            raise InvalidInputError(f"PReLU needs {x.shape[1]} slopes, got shape {slopes.shape}")
        return slopes.reshape((1, -1) + (1,) * (x.ndim - 2))
    raise InvalidInputError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}")


def activation_forward(x, kind, slopes=None):
    """ReLU, leaky ReLU (fixed slope 0.01) or per-channel PReLU.

    The negative branch applies for ``x <= 0``.
    """
    slope = _slope(x, kind, slopes)
    if slope is None:
        return np.where(x > 0, x, np.zeros((), dtype=x.dtype))
    return np.where(x > 0, x, slope * x)


def activation_backward(x, grad_out, kind, slopes=None):
    """Return ``(grad_x, grad_slopes)``; ``grad_slopes`` is ``None`` unless PReLU."""
    slope = _slope(x, kind, slopes)
    positive = x > 0
    if slope is None:
        return np.where(positive, grad_out, np.zeros((), dtype=grad_out.dtype)), None
    grad_x = np.where(positive, grad_out, slope * grad_out)
    if kind != "prelu":
        return grad_x, None
    axes = (0,) + tuple(range(2, x.ndim))
    grad_a = np.where(positive, 0, grad_out * x).sum(axis=axes)
    return grad_x, grad_a


# -- dense + loss ------------------------------------------------------------------


def fc_forward(x, weight, bias):
    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[0]:
        raise InvalidInputError(f"cannot multiply input {x.shape} by weight {weight.shape}")
    if bias.shape != (weight.shape[1],):
        raise InvalidInputError(f"bias shape {bias.shape} does not match weight {weight.shape}")
    return x @ weight + bias


def fc_backward(x, weight, grad_out):
    return grad_out @ weight.T, x.T @ grad_out, grad_out.sum(axis=0)


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_crossentropy(logits, labels):
    """Mean cross-entropy of ``labels`` under ``softmax(logits)``.

    Returns ``(loss, probs, grad_logits)``.
    """
    logits = np.asarray(logits)
    labels = np.asarray(labels)
    n, k = logits.shape
    if labels.shape != (n,):
        raise InvalidInputError(f"expected {n} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise InvalidInputError(f"labels must lie in [0, {k})")
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    rows = np.arange(n)
    loss = -logp[rows, labels].mean()
    probs = np.exp(logp)
    grad = probs.copy()
    grad[rows, labels] -= 1
    grad /= n
    return float(loss), probs, grad
