"""Finite-difference checks of every layer kernel, shared by unit and acceptance tests.

Each ``check_*`` builds one random float64 instance from ``rng`` and returns
the worst relative error over the input and every learnable parameter.
"""

import numpy as np

from bwvnet import nn as F
from oracles import numeric_grad, rel_error

H = 1e-3

# (kernel, dilation, stride) for every convolution row of the network
CONV_CONFIGS = [(5, 2, 2), (3, 3, 3), (5, 2, 2), (3, 1, 1), (5, 2, 2), (3, 1, 1), (5, 3, 3)]


def _away_from_zero(rng, shape, margin=0.05):
    x = rng.uniform(margin, 1.0, size=shape)
    return x * rng.choice([-1.0, 1.0], size=shape)


def check_conv(rng, kernel, dilation, stride):
    n, c, f = 1, 2, 3
    size = int(rng.integers(5, 9))
    x = rng.standard_normal((n, c, size, size))
    w = rng.standard_normal((f, c, kernel, kernel))
    b = rng.standard_normal(f)
    out = F.conv2d_forward(x, w, b, stride, dilation)
    r = rng.standard_normal(out.shape)

    def loss():
        return float((F.conv2d_forward(x, w, b, stride, dilation) * r).sum())

    gx, gw, gb = F.conv2d_backward(x, w, r, stride, dilation)
    return max(rel_error(gx, numeric_grad(loss, x, H)),
               rel_error(gw, numeric_grad(loss, w, H)),
               rel_error(gb, numeric_grad(loss, b, H)))


def check_batchnorm(rng):
    x = rng.standard_normal((2, 3, 4, 4)) * 2 + 0.5
    gamma = rng.uniform(0.5, 1.5, 3)
    beta = rng.standard_normal(3)
    r = rng.standard_normal(x.shape)

    def loss():
        out, _ = F.batchnorm_forward(x, gamma, beta, np.zeros(3), np.ones(3), train=True)
        return float((out * r).sum())

    _, cache = F.batchnorm_forward(x, gamma, beta, np.zeros(3), np.ones(3), train=True)
    gx, gg, gb = F.batchnorm_backward(r, cache)
    return max(rel_error(gx, numeric_grad(loss, x, H)),
               rel_error(gg, numeric_grad(loss, gamma, H)),
               rel_error(gb, numeric_grad(loss, beta, H)))


def check_maxpool(rng, kernel=3, stride=2):
    size = int(rng.integers(4, 8))
    # distinct values spaced 0.05 apart: a 1e-3 nudge never changes a window's argmax
    x = (rng.permutation(2 * 2 * size * size) * 0.05).reshape(2, 2, size, size)
    out, arg = F.maxpool_forward(x, kernel, stride)
    r = rng.standard_normal(out.shape)

    def loss():
        return float((F.maxpool_forward(x, kernel, stride)[0] * r).sum())

    gx = F.maxpool_backward(r, arg, x.shape)
    return rel_error(gx, numeric_grad(loss, x, H))


def check_activation(rng, kind):
    x = _away_from_zero(rng, (2, 3, 3, 3))
    slopes = rng.uniform(0.05, 0.5, 3) if kind == "prelu" else None
    r = rng.standard_normal(x.shape)

    def loss():
        return float((F.activation_forward(x, kind, slopes) * r).sum())

    gx, ga = F.activation_backward(x, r, kind, slopes)
    err = rel_error(gx, numeric_grad(loss, x, H))
    if kind == "prelu":
        err = max(err, rel_error(ga, numeric_grad(loss, slopes, H)))
    return err


def check_fc(rng):
    x = rng.standard_normal((3, 5))
    w = rng.standard_normal((5, 2))
    b = rng.standard_normal(2)
    r = rng.standard_normal((3, 2))

    def loss():
        return float((F.fc_forward(x, w, b) * r).sum())

    gx, gw, gb = F.fc_backward(x, w, r)
    return max(rel_error(gx, numeric_grad(loss, x, H)),
               rel_error(gw, numeric_grad(loss, w, H)),
               rel_error(gb, numeric_grad(loss, b, H)))


def check_softmax_ce(rng):
    logits = rng.standard_normal((4, 2)) * 2
    labels = rng.integers(0, 2, 4)

    def loss():
        return F.softmax_crossentropy(logits, labels)[0]

    _, _, grad = F.softmax_crossentropy(logits, labels)
    return rel_error(grad, numeric_grad(loss, logits, H))
