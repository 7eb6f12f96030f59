"""The 31-layer BWV classification network: layout, construction and execution."""

import copy
from dataclasses import dataclass

import numpy as np

from ._validation import LABELS, check_batch
from .errors import InvalidInputError, NumericError
from .nn import ACTIVATIONS, Activation, BatchNorm, Conv2D, Dense, MaxPool, softmax

INPUT_SIZE = 256
DTYPE = np.float32

# (conv kernel, filters, dilation, stride, pool kernel, pool stride); the last
# block has no pooling layer.
_BLOCKS = (
    (5, 8, 2, 2, 5, 2),
    (3, 16, 3, 3, 3, 3),
    (5, 32, 2, 2, 5, 2),
    (3, 64, 1, 1, 3, 1),
    (5, 128, 2, 2, 5, 2),
    (3, 256, 1, 1, 3, 1),
    (5, 512, 3, 3, None, None),
)


def layer_table(activation="prelu", input_size=INPUT_SIZE):
    """Row-by-row layer descriptors, numbered 1..31 from input to output."""
    rows = [{"index": 1, "type": "input", "shape": [input_size, input_size, 3]}]
    for k, filters, d, s, pk, ps in _BLOCKS:
        i = len(rows) + 1
        rows.append({"index": i, "type": "conv", "kernel": [k, k], "filters": filters,
                     "dilation": [d, d], "padding": "same", "stride": [s, s]})
        rows.append({"index": i + 1, "type": "norm"})
        rows.append({"index": i + 2, "type": "custom", "channels": filters, "activation": activation})
        if pk is not None:
            rows.append({"index": i + 3, "type": "maxpool", "kernel": [pk, pk],
                         "padding": "same", "stride": [ps, ps]})
    n = len(rows)
    rows.append({"index": n + 1, "type": "fc", "units": len(LABELS)})
    rows.append({"index": n + 2, "type": "softmax"})
    rows.append({"index": n + 3, "type": "output", "classes": list(LABELS)})
    return rows


@dataclass
class NetworkSpec:
    activation: str = "prelu"
    input_size: int = INPUT_SIZE
    slope_init: float = 0.25
    layers: list = None

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise InvalidInputError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if self.layers is None:
            self.layers = layer_table(self.activation, self.input_size)

    def to_dict(self):
        return {"activation": self.activation, "input_size": self.input_size,
                "slope_init": self.slope_init, "layers": self.layers}

    @classmethod
    def from_dict(cls, d):
        return cls(activation=d["activation"], input_size=int(d["input_size"]),
                   slope_init=float(d["slope_init"]), layers=d["layers"])


def _make_layers(spec):
    layers = []
    shape = (3, spec.input_size, spec.input_size)
    shapes = [("input", shape)]
    for row in spec.layers:
        t, i = row["type"], row["index"]
        if t == "conv":
            layer = Conv2D(f"conv{i:02d}", shape[0], row["filters"], row["kernel"],
                           row["dilation"], row["stride"], first=not layers)
        elif t == "norm":
            layer = BatchNorm(f"norm{i:02d}", shape[0])
        elif t == "custom":
            if row["channels"] != shape[0]:
                raise InvalidInputError(f"row {i}: {row['channels']} channels, incoming {shape[0]}")
            layer = Activation(f"custom{i:02d}", shape[0], row["activation"], spec.slope_init)
        elif t == "maxpool":
            layer = MaxPool(f"pool{i:02d}", row["kernel"], row["stride"])
        elif t == "fc":
            layer = Dense(f"fc{i:02d}", int(np.prod(shape)), row["units"])
        else:
            continue
        shape = layer.output_shape(shape)
        layers.append(layer)
        shapes.append((layer.name, shape))
    return layers, shapes


class Network:
    """A bound network: spec, layer objects and a flat parameter dictionary."""

    def __init__(self, spec, params=None, mode="infer"):
        self.spec = spec
        self.layers, self._shapes = _make_layers(spec)
        self.params = {} if params is None else params
        self.mode = mode

    @property
    def mode(self):
        return self._mode

    @mode.setter
    def mode(self, value):
        if value not in ("train", "infer"):
            raise InvalidInputError(f"mode must be 'train' or 'infer', got {value!r}")
        self._mode = value

    @property
    def activation(self):
        return self.spec.activation

    def shape_trace(self):
        """Per-layer output shapes (C, H, W) for one input image."""
        return list(self._shapes)

    def learnable_names(self):
        return [layer.pname(k) for layer in self.layers for k in layer.learnable]

    def n_learnable(self):
        return int(sum(self.params[n].size for n in self.learnable_names()))

    def _check_input(self, batch):
        s = self.spec.input_size
        batch = check_batch(batch, channels=3, name="batch")
        if batch.shape[2:] != (s, s):
            raise InvalidInputError(f"batch must be (N, 3, {s}, {s}), got {batch.shape}")
        return batch

    def logits(self, batch, train=None):
        train = self.mode == "train" if train is None else train
        x = self._check_input(batch)
        dtype = next(iter(self.params.values())).dtype
        x = x.astype(dtype, copy=False)
        for layer in self.layers:
            x = layer.forward(x, self.params, train)
            if not np.isfinite(x).all():
                raise NumericError(f"non-finite activations after {layer.name}", parameter=layer.name)
        return x

    def forward(self, batch):
        """Class probabilities, shape (N, 2); column 0 is BWV."""
        return softmax(self.logits(batch))

    def backward(self, grad_logits):
        """Back-propagate through the cached train-mode pass. Returns a grads dict."""
        grads = {}
        g = grad_logits
        for layer in reversed(self.layers):
            g = layer.backward(g, self.params, grads)
        for layer in self.layers:
            layer.clear()
        return grads

    def copy(self):
        return Network(copy.deepcopy(self.spec), {k: v.copy() for k, v in self.params.items()}, self.mode)

    def astype(self, dtype):
        return Network(copy.deepcopy(self.spec),
                       {k: v.astype(dtype) for k, v in self.params.items()}, self.mode)


def build(activation="prelu", seed=0, input_size=INPUT_SIZE, slope_init=0.25):
    """Construct the network with seeded He-style initialization."""
    spec = NetworkSpec(activation=activation, input_size=input_size, slope_init=slope_init)
    net = Network(spec)
    rng = np.random.default_rng(seed)
    for layer in net.layers:
        for key, value in layer.init_params(rng).items():
            net.params[layer.pname(key)] = np.asarray(value, dtype=DTYPE)
    return net
