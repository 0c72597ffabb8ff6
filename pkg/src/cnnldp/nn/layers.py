"""Layer implementations with explicit forward/backward passes.

All tensors are float64 in NHWC order (samples, rows, cols, channels).
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeError

__all__ = ["Layer", "Conv2D", "MaxPool2D", "Flatten", "Dense", "SoftmaxOutput", "layer_from_spec"]


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    """Base layer.  ``params``/``grads`` share keys; weight arrays are penalized by L1."""

    kind = "layer"
    weight_keys: tuple[str, ...] = ()

    def __init__(self) -> None:
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.input_shape: tuple[int, ...] = ()
        self.output_shape: tuple[int, ...] = ()

    def build(self, input_shape: tuple[int, ...], rng: np.random.Generator | None) -> tuple[int, ...]:
        raise NotImplementedError

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def spec(self) -> dict:
        return {"kind": self.kind}


class Conv2D(Layer):
    """3x3 'same' convolution followed by ReLU."""

    kind = "conv"
    weight_keys = ("W",)

    def __init__(self, filters: int, kernel: int = 3, activation: str = "relu") -> None:
        super().__init__()
        if kernel % 2 != 1:
            raise ValueError("only odd kernels support 'same' padding")
        self.filters = filters
        self.kernel = kernel
        self.activation = activation

    def build(self, input_shape, rng):
        if len(input_shape) != 3:
            raise ShapeError(f"Conv2D expects (rows, cols, channels), got {input_shape}")
        h, w, c = input_shape
        k = self.kernel
        if rng is not None:
            self.params["W"] = glorot_uniform(rng, (k, k, c, self.filters), k * k * c, k * k * self.filters)
            self.params["b"] = np.zeros(self.filters)
        self.input_shape = tuple(input_shape)
        self.output_shape = (h, w, self.filters)
        return self.output_shape

    def forward(self, x):
        k, p = self.kernel, self.kernel // 2
        n, h, w, c = x.shape
        xp = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0)))
        win = sliding_window_view(xp, (k, k), axis=(1, 2))  # n, h, w, c, k, k
        cols = win.transpose(0, 1, 2, 4, 5, 3).reshape(n * h * w, k * k * c)
        z = cols @ self.params["W"].reshape(k * k * c, self.filters) + self.params["b"]
        z = z.reshape(n, h, w, self.filters)
        self._cache = (cols, z, x.shape)
        return np.maximum(z, 0.0) if self.activation == "relu" else z

    def backward(self, dout):
        cols, z, xshape = self._cache
        n, h, w, c = xshape
        k, p = self.kernel, self.kernel // 2
        dz = dout * (z > 0) if self.activation == "relu" else dout
        dz2 = dz.reshape(n * h * w, self.filters)
        self.grads["W"] = (cols.T @ dz2).reshape(k, k, c, self.filters)
        self.grads["b"] = dz2.sum(axis=0)
        dcols = (dz2 @ self.params["W"].reshape(k * k * c, self.filters).T).reshape(n, h, w, k, k, c)
        dxp = np.zeros((n, h + 2 * p, w + 2 * p, c))
        for i in range(k):
            for j in range(k):
                dxp[:, i : i + h, j : j + w, :] += dcols[:, :, :, i, j, :]
        return dxp[:, p : p + h, p : p + w, :]

    def spec(self):
        return {"kind": self.kind, "filters": self.filters, "kernel": self.kernel, "activation": self.activation}


class MaxPool2D(Layer):
    """2x2 max pooling with unit stride and no padding: (r, c) -> (r-1, c-1)."""

    kind = "maxpool"
    _OFFSETS = ((0, 0), (0, 1), (1, 0), (1, 1))

    def build(self, input_shape, rng):
        h, w, c = input_shape
        if h < 2 or w < 2:
            raise ShapeError(f"MaxPool2D needs at least 2x2 input, got {input_shape}")
        self.input_shape = tuple(input_shape)
        self.output_shape = (h - 1, w - 1, c)
        return self.output_shape

    def forward(self, x):
        h, w = x.shape[1] - 1, x.shape[2] - 1
        stack = np.stack([x[:, di : di + h, dj : dj + w, :] for di, dj in self._OFFSETS])
        arg = stack.argmax(axis=0)
        self._cache = (arg, x.shape)
        return np.take_along_axis(stack, arg[None], axis=0)[0]

    def backward(self, dout):
        arg, xshape = self._cache
        h, w = xshape[1] - 1, xshape[2] - 1
        dx = np.zeros(xshape)
        for k, (di, dj) in enumerate(self._OFFSETS):
            dx[:, di : di + h, dj : dj + w, :] += dout * (arg == k)
        return dx


class Flatten(Layer):
    kind = "flatten"

    def build(self, input_shape, rng):
        self.input_shape = tuple(input_shape)
        self.output_shape = (int(np.prod(input_shape)),)
        return self.output_shape

    def forward(self, x):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._shape)


class Dense(Layer):
    kind = "dense"
    weight_keys = ("W",)

    def __init__(self, units: int, activation: str = "relu") -> None:
        super().__init__()
        if activation not in ("relu", "linear"):
            raise ValueError(f"unsupported activation {activation!r}")
        self.units = units
        self.activation = activation

    def build(self, input_shape, rng):
        if len(input_shape) != 1:
            raise ShapeError(f"Dense expects a flat input, got {input_shape}")
        (d,) = input_shape
        if rng is not None:
            self.params["W"] = glorot_uniform(rng, (d, self.units), d, self.units)
            self.params["b"] = np.zeros(self.units)
        self.input_shape = tuple(input_shape)
        self.output_shape = (self.units,)
        return self.output_shape

    def forward(self, x):
        z = x @ self.params["W"] + self.params["b"]
        self._cache = (x, z)
        return np.maximum(z, 0.0) if self.activation == "relu" else z

    def backward(self, dout):
        x, z = self._cache
        dz = dout * (z > 0) if self.activation == "relu" else dout
        self.grads["W"] = x.T @ dz
        self.grads["b"] = dz.sum(axis=0)
        return dz @ self.params["W"].T

    def spec(self):
        return {"kind": self.kind, "units": self.units, "activation": self.activation}


class SoftmaxOutput(Layer):
    """Dense projection reshaped to ``(rows, categories)`` with a softmax per row.

    ``backward`` takes the gradient with respect to the probabilities.
    """

    kind = "softmax"
    weight_keys = ("W",)

    def __init__(self, rows: int, categories: int) -> None:
        super().__init__()
        self.rows = rows
        self.categories = categories

    def build(self, input_shape, rng):
        if len(input_shape) != 1:
            raise ShapeError(f"SoftmaxOutput expects a flat input, got {input_shape}")
        (d,) = input_shape
        units = self.rows * self.categories
        if rng is not None:
            self.params["W"] = glorot_uniform(rng, (d, units), d, units)
            self.params["b"] = np.zeros(units)
        self.input_shape = tuple(input_shape)
        self.output_shape = (self.rows, self.categories)
        return self.output_shape

    def forward(self, x):
        z = (x @ self.params["W"] + self.params["b"]).reshape(-1, self.rows, self.categories)
        z = z - z.max(axis=-1, keepdims=True)
        e = np.exp(z)
        p = e / e.sum(axis=-1, keepdims=True)
        self._cache = (x, p)
        return p

    def backward(self, dout):
        x, p = self._cache
        dz = p * (dout - (dout * p).sum(axis=-1, keepdims=True))
        dz = dz.reshape(x.shape[0], -1)
        self.grads["W"] = x.T @ dz
        self.grads["b"] = dz.sum(axis=0)
        return dz @ self.params["W"].T

    def spec(self):
        return {"kind": self.kind, "rows": self.rows, "categories": self.categories}


def layer_from_spec(spec: dict) -> Layer:
    kind = spec["kind"]
    if kind == "conv":
        return Conv2D(spec["filters"], spec.get("kernel", 3), spec.get("activation", "relu"))
    if kind == "maxpool":
        return MaxPool2D()
    if kind == "flatten":
        return Flatten()
    if kind == "dense":
        return Dense(spec["units"], spec.get("activation", "relu"))
    if kind == "softmax":
        return SoftmaxOutput(spec["rows"], spec["categories"])
    raise ValueError(f"unknown layer kind {kind!r}")
