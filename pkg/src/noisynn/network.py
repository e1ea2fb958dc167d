"""Feedforward network data model, noise-free inference, and weight files.

A network is an ordered list of dense layers; activations flow left to
right as row vectors, so a layer mapping ``a`` inputs to ``b`` outputs
stores an ``(a, b)`` weight matrix plus a length-``b`` bias vector. Hidden
layers squash through the logistic sigmoid, the final layer normalizes
through softmax, and classification reads the argmax of the output.

Networks are immutable once built: every transform returns a new object,
and the weight arrays are marked read-only.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .core import sigmoid, softmax


class Activation(enum.Enum):
    SIGMOID = "sigmoid"
    SOFTMAX = "softmax"


class WeightFileError(ValueError):
    """A weight file failed to parse or violated a shape invariant."""


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Layer:
    """One dense layer: (fan_in, fan_out) weights, fan_out biases, activation."""

    weights: np.ndarray
    biases: np.ndarray
    activation: Activation

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen_array(self.weights))
        object.__setattr__(self, "biases", _frozen_array(self.biases))
        if self.weights.ndim != 2:
            raise ValueError(f"layer weights must be 2-D, got shape {self.weights.shape}")
        if self.biases.shape != (self.weights.shape[1],):
            raise ValueError(
                f"biases length {self.biases.shape[0] if self.biases.ndim == 1 else self.biases.shape} "
                f"does not match weight columns {self.weights.shape[1]}"
            )
        if not np.isfinite(self.weights).all() or not np.isfinite(self.biases).all():
            raise ValueError("layer parameters must be finite")
        if not isinstance(self.activation, Activation):
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def fan_in(self) -> int:
        return self.weights.shape[0]

    @property
    def fan_out(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class Network:
    """Ordered dense layers; adjacent layers must be dimension-compatible."""

    layers: tuple[Layer, ...]
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValueError("network needs at least one layer")
        for i in range(len(self.layers) - 1):
            a, b = self.layers[i], self.layers[i + 1]
            if a.fan_out != b.fan_in:
                raise ValueError(
                    f"layer {i} fan-out {a.fan_out} does not match layer {i + 1} fan-in {b.fan_in}"
                )

    @property
    def input_size(self) -> int:
        return self.layers[0].fan_in

    @property
    def output_size(self) -> int:
        return self.layers[-1].fan_out


@dataclass(frozen=True)
class ForwardTrace:
    """Per-layer preactivations and activations of one forward pass.

    ``preactivations[n]`` is the weighted-sum input of layer n,
    ``activations[n]`` its post-activation output; ``activations[-1]`` is
    the network output.
    """

    preactivations: tuple[np.ndarray, ...]
    activations: tuple[np.ndarray, ...]

    @property
    def output(self) -> np.ndarray:
        return self.activations[-1]


def _activate(layer: Layer, pre: np.ndarray) -> np.ndarray:
    if layer.activation is Activation.SIGMOID:
        return sigmoid(pre)
    return softmax(pre)


def forward_batch(net: Network, inputs: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Noise-free forward pass over a (n_samples, input_size) batch.

    Returns per-layer preactivation and activation matrices. The
    single-sample entry points all route through here so batched and
    per-sample evaluation share one numerical path.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != net.input_size:
        raise ValueError(
            f"input batch shape {inputs.shape} does not match network input size {net.input_size}"
        )
    pres, acts = [], []
    y = inputs
    for layer in net.layers:
        x = y @ layer.weights + layer.biases
        y = _activate(layer, x)
        pres.append(x)
        acts.append(y)
    return pres, acts


def forward(net: Network, input_vec: np.ndarray) -> ForwardTrace:
    """Noise-free forward pass of a single input vector."""
    input_vec = np.asarray(input_vec, dtype=np.float64)
    if input_vec.shape != (net.input_size,):
        raise ValueError(
            f"input shape {input_vec.shape} does not match network input size {net.input_size}"
        )
    pres, acts = forward_batch(net, input_vec[None, :])
    return ForwardTrace(
        preactivations=tuple(p[0] for p in pres),
        activations=tuple(a[0] for a in acts),
    )


def predict(net: Network, input_vec: np.ndarray) -> int:
    """Class index with the maximum output activation (ties: lowest index)."""
    return int(np.argmax(forward(net, input_vec).output))


def accuracy(net: Network, data) -> float:
    """Fraction of samples whose argmax output matches the label."""
    if len(data) == 0:
        raise ValueError("cannot score an empty dataset")
    _, acts = forward_batch(net, data.inputs)
    return float(np.mean(np.argmax(acts[-1], axis=1) == data.labels))


def save(net: Network, path) -> None:
    """Write the network as a self-describing JSON weight file.

    Floats are printed in shortest-round-trip form, so a load of the file
    reproduces every parameter bit-exactly.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(to_json(net))


def to_json(net: Network) -> str:
    doc = {
        "layers": [
            {
                "rows": layer.fan_in,
                "cols": layer.fan_out,
                "weights": layer.weights.reshape(-1).tolist(),
                "biases": layer.biases.tolist(),
                "activation": layer.activation.value,
            }
            for layer in net.layers
        ],
        "meta": dict(net.meta),
    }
    return json.dumps(doc, allow_nan=False) + "\n"


def load(path) -> Network:
    """Read a JSON weight file, validating shapes before any Network exists."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return from_json(text, where=str(path))


def from_json(text: str, where: str = "weight file") -> Network:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise WeightFileError(f"{where}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict) or "layers" not in doc:
        raise WeightFileError(f"{where}: missing top-level 'layers' list")
    layers = []
    for i, spec in enumerate(doc["layers"]):
        for key in ("rows", "cols", "weights", "biases", "activation"):
            if key not in spec:
                raise WeightFileError(f"{where}: layer {i}: missing field '{key}'")
        rows, cols = spec["rows"], spec["cols"]
        if not isinstance(rows, int) or not isinstance(cols, int):
            raise WeightFileError(f"{where}: layer {i}: rows/cols must be integers")
        if not isinstance(spec["weights"], list) or not isinstance(spec["biases"], list):
            raise WeightFileError(f"{where}: layer {i}: weights/biases must be arrays")
        try:
            act = Activation(spec["activation"])
        except ValueError:
            raise WeightFileError(
                f"{where}: layer {i}: unknown activation '{spec['activation']}'"
            ) from None
        if len(spec["weights"]) != rows * cols:
            raise WeightFileError(
                f"{where}: layer {i}: {len(spec['weights'])} weights, expected rows*cols = {rows * cols}"
            )
        if len(spec["biases"]) != cols:
            raise WeightFileError(
                f"{where}: layer {i}: biases length {len(spec['biases'])} != cols {cols}"
            )
        try:
            layer = Layer(
                weights=np.array(spec["weights"], dtype=np.float64).reshape(rows, cols),
                biases=np.array(spec["biases"], dtype=np.float64),
                activation=act,
            )
        except (TypeError, ValueError) as exc:
            raise WeightFileError(f"{where}: layer {i}: {exc}") from None
        layers.append(layer)
    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise WeightFileError(f"{where}: 'meta' must be an object")
    try:
        return Network(layers=tuple(layers), meta=meta)
    except ValueError as exc:
        raise WeightFileError(f"{where}: {exc}") from None
