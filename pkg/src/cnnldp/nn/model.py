from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from ..errors import ShapeError
from .layers import Conv2D, Dense, Flatten, Layer, MaxPool2D, SoftmaxOutput, layer_from_spec

__all__ = ["CnnModel", "build_cnn", "forward", "REFERENCE_CONV_FILTERS", "REFERENCE_DENSE_UNITS"]

REFERENCE_CONV_FILTERS = (32, 64)
REFERENCE_DENSE_UNITS = (256, 128)


@dataclass
class CnnModel:
    input_shape: tuple[int, int, int]
    layers: list[Layer]
    metadata: dict = field(default_factory=dict)

    @property
    def output_shape(self) -> tuple[int, int]:
        return self.layers[-1].output_shape

    @property
    def categories(self) -> int:
        return self.output_shape[-1]

    def specs(self) -> list[dict]:
        return [layer.spec() for layer in self.layers]

    def parameters(self) -> Iterator[tuple[str, np.ndarray]]:
        """``(name, array)`` pairs in declaration order."""
        for k, layer in enumerate(self.layers):
            for key in sorted(layer.params):
                yield f"{k}.{layer.kind}.{key}", layer.params[key]

    def weight_arrays(self) -> list[np.ndarray]:
        """Arrays subject to the L1 penalty (kernels, not biases)."""
        return [layer.params[k] for layer in self.layers for k in layer.weight_keys]

    def n_parameters(self) -> int:
        return sum(a.size for _, a in self.parameters())

    def copy(self) -> "CnnModel":
        clone = CnnModel.from_specs(self.input_shape, self.specs(), dict(self.metadata))
        for (_, dst), (_, src) in zip(clone.parameters(), self.parameters()):
            dst[...] = src
        return clone

    @classmethod
    def from_specs(cls, input_shape, specs: Sequence[dict], metadata: dict | None = None, seed: int = 0) -> "CnnModel":
        rng = np.random.default_rng(seed)
        layers = [layer_from_spec(s) for s in specs]
        shape = tuple(input_shape)
        for layer in layers:
            shape = layer.build(shape, rng)
        return cls(tuple(input_shape), layers, metadata or {})


def build_cnn(
    rows: int,
    cols: int,
    categories: int,
    conv_filters: Sequence[int] = (8, 16),
    dense_units: Sequence[int] = (64, 32),
    seed: int = 0,
    channels: int = 1,
) -> CnnModel:
    """Conv/pool blocks, flatten, ReLU dense stack, per-row softmax output.

    ``conv_filters=REFERENCE_CONV_FILTERS, dense_units=REFERENCE_DENSE_UNITS`` gives
    the full-size network; the defaults are a desk-scale reduction.
    """
    specs: list[dict] = []
    for f in conv_filters:
        specs.append(Conv2D(f).spec())
        specs.append(MaxPool2D().spec())
    specs.append(Flatten().spec())
    for u in dense_units:
        specs.append(Dense(u).spec())
    specs.append(SoftmaxOutput(rows, categories).spec())
    return CnnModel.from_specs((rows, cols, channels), specs, seed=seed)


def forward(model: CnnModel, x: np.ndarray) -> np.ndarray:
    """Class probabilities with shape ``(samples, rows, categories)``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4 or tuple(x.shape[1:]) != tuple(model.input_shape):
        raise ShapeError(f"model expects (n, {', '.join(map(str, model.input_shape))}), got {x.shape}")
    for layer in model.layers:
        x = layer.forward(x)
    return x


def backward(model: CnnModel, dprob: np.ndarray) -> None:
    """Backpropagate a gradient w.r.t. the output probabilities; fills ``layer.grads``."""
    g = dprob
    for layer in reversed(model.layers):
        g = layer.backward(g)
