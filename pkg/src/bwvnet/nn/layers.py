"""Layer objects binding the functional kernels to named parameters.

A layer owns no arrays itself. It reads and writes entries of the parameter
dictionary handed to ``forward``/``backward``, so an optimizer updating that
dictionary in place is seen by the next forward pass.
"""

import numpy as np

from . import functional as F


class Layer:
    kind = "layer"
    learnable = ()
    buffers = ()

    def __init__(self, name):
        self.name = name
        self._cache = None

    def param_shapes(self):
        return {}

    def output_shape(self, shape):
        return shape

    def init_params(self, rng):
        return {}

    def pname(self, key):
        return f"{self.name}.{key}"

    def clear(self):
        self._cache = None


class Conv2D(Layer):
    kind = "conv"
    learnable = ("weight", "bias")

    def __init__(self, name, in_channels, filters, kernel, dilation, stride, first=False):
        super().__init__(name)
        self.in_channels = in_channels
        self.filters = filters
        self.kernel = tuple(kernel)
        self.dilation = tuple(dilation)
        self.stride = tuple(stride)
        self.first = first

    def param_shapes(self):
        return {"weight": (self.filters, self.in_channels) + self.kernel, "bias": (self.filters,)}

    def output_shape(self, shape):
        c, h, w = shape
        ho = F.same_padding(h, self.kernel[0], self.stride[0], self.dilation[0])[0]
        wo = F.same_padding(w, self.kernel[1], self.stride[1], self.dilation[1])[0]
        return self.filters, ho, wo

    def init_params(self, rng):
        fan_in = self.in_channels * self.kernel[0] * self.kernel[1]
        w = rng.standard_normal(self.param_shapes()["weight"]) * np.sqrt(2.0 / fan_in)
        return {"weight": w, "bias": np.zeros(self.filters)}

    def forward(self, x, params, train):
        w, b = params[self.pname("weight")], params[self.pname("bias")]
        if train:
            self._cache = x
        return F.conv2d_forward(x, w, b, self.stride, self.dilation)

    def backward(self, grad, params, grads):
        x = self._cache
        gx, gw, gb = F.conv2d_backward(x, params[self.pname("weight")], grad,
                                       self.stride, self.dilation, input_grad=not self.first)
        grads[self.pname("weight")] = gw
        grads[self.pname("bias")] = gb
        return gx


class BatchNorm(Layer):
    kind = "norm"
    learnable = ("gamma", "beta")
    buffers = ("running_mean", "running_var")

    def __init__(self, name, channels, eps=1e-5, momentum=0.1):
        super().__init__(name)
        self.channels = channels
        self.eps = eps
        self.momentum = momentum

    def param_shapes(self):
        return {k: (self.channels,) for k in self.learnable + self.buffers}

    def init_params(self, rng):
        c = self.channels
        return {"gamma": np.ones(c), "beta": np.zeros(c),
                "running_mean": np.zeros(c), "running_var": np.ones(c)}

    def forward(self, x, params, train):
        out, cache = F.batchnorm_forward(
            x, params[self.pname("gamma")], params[self.pname("beta")],
            params[self.pname("running_mean")], params[self.pname("running_var")],
            train=train, eps=self.eps, momentum=self.momentum)
        self._cache = cache
        return out

    def backward(self, grad, params, grads):
        gx, gg, gb = F.batchnorm_backward(grad, self._cache)
        grads[self.pname("gamma")] = gg
        grads[self.pname("beta")] = gb
        return gx


class Activation(Layer):
    kind = "custom"

    def __init__(self, name, channels, activation, slope_init=0.25):
        super().__init__(name)
        if activation not in F.ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.channels = channels
        self.activation = activation
        self.slope_init = slope_init
        self.learnable = ("slope",) if activation == "prelu" else ()

    def param_shapes(self):
        return {"slope": (self.channels,)} if self.learnable else {}

    def init_params(self, rng):
        return {"slope": np.full(self.channels, self.slope_init)} if self.learnable else {}

    def _slopes(self, params):
        return params[self.pname("slope")] if self.learnable else None

    def forward(self, x, params, train):
        if train:
            self._cache = x
        return F.activation_forward(x, self.activation, self._slopes(params))

    def backward(self, grad, params, grads):
        gx, ga = F.activation_backward(self._cache, grad, self.activation, self._slopes(params))
        if ga is not None:
            grads[self.pname("slope")] = ga
        return gx


class MaxPool(Layer):
    kind = "maxpool"

    def __init__(self, name, kernel, stride):
        super().__init__(name)
        self.kernel = tuple(kernel)
        self.stride = tuple(stride)

    def output_shape(self, shape):
        c, h, w = shape
        return (c, F.same_padding(h, self.kernel[0], self.stride[0])[0],
                F.same_padding(w, self.kernel[1], self.stride[1])[0])

    def forward(self, x, params, train):
        out, argmax = F.maxpool_forward(x, self.kernel, self.stride)
        if train:
            self._cache = (argmax, x.shape)
        return out

    def backward(self, grad, params, grads):
        argmax, shape = self._cache
        return F.maxpool_backward(grad, argmax, shape)


class Dense(Layer):
    """Fully connected layer; flattens its NCHW input first."""

    kind = "fc"
    learnable = ("weight", "bias")

    def __init__(self, name, in_features, units):
        super().__init__(name)
        self.in_features = in_features
        self.units = units

    def param_shapes(self):
        return {"weight": (self.in_features, self.units), "bias": (self.units,)}

    def output_shape(self, shape):
        return (self.units,)

    def init_params(self, rng):
        w = rng.standard_normal((self.in_features, self.units)) * np.sqrt(2.0 / self.in_features)
        return {"weight": w, "bias": np.zeros(self.units)}

    def forward(self, x, params, train):
        shape = x.shape
        flat = x.reshape(shape[0], -1)
        if train:
            self._cache = (flat, shape)
        return F.fc_forward(flat, params[self.pname("weight")], params[self.pname("bias")])

    def backward(self, grad, params, grads):
        flat, shape = self._cache
        gx, gw, gb = F.fc_backward(flat, params[self.pname("weight")], grad)
        grads[self.pname("weight")] = gw
        grads[self.pname("bias")] = gb
        return gx.reshape(shape)
