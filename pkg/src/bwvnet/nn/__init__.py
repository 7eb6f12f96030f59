"""Minimal numpy layer engine: forward kernels with hand-written gradients."""

from .functional import (
    ACTIVATIONS,
    LEAKY_SLOPE,
    activation_backward,
    activation_forward,
    batchnorm_backward,
    batchnorm_forward,
    conv2d_backward,
    conv2d_forward,
    fc_backward,
    fc_forward,
    maxpool_backward,
    maxpool_forward,
    same_padding,
    softmax,
    softmax_crossentropy,
)
from .layers import Activation, BatchNorm, Conv2D, Dense, Layer, MaxPool

__all__ = [
    "ACTIVATIONS", "LEAKY_SLOPE", "Activation", "BatchNorm", "Conv2D", "Dense", "Layer",
    "MaxPool", "activation_backward", "activation_forward", "batchnorm_backward",
    "batchnorm_forward", "conv2d_backward", "conv2d_forward", "fc_backward", "fc_forward",
    "maxpool_backward", "maxpool_forward", "same_padding", "softmax", "softmax_crossentropy",
]
