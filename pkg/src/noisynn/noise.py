"""Injection of white Gaussian noise into layer activations at inference.

Four noise types act on a layer's post-activation outputs y = f(x):

* additive:        y + sqrt(2*D) * xi
* multiplicative:  y * (1 + sqrt(2*D) * xi)

each either correlated (one xi draw shared by every neuron in the layer)
or uncorrelated (an independent xi per neuron). xi is standard normal, so
sqrt(2*D) is the perturbation amplitude and 2*D its variance. On the
output layer, noise applies after the softmax; noisy outputs are never
renormalized before the argmax readout.

Reproducibility: the draw for (source, sample, repeat) comes from a stream
seeded by folding (master_seed, layer, kind id, sample index, repeat), in
that order, so any cell of a sweep can be recomputed in isolation and
results are independent of batching or scheduling. A correlated source
consumes exactly one draw per injection, an uncorrelated source exactly
one per neuron, at zero intensity as much as at full intensity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import RandomStream, derive_seed, fold_seeds, gaussian_block
from .network import ForwardTrace, Network, _activate

ADDITIVE = "additive"
MULTIPLICATIVE = "multiplicative"
CORRELATED = "correlated"
UNCORRELATED = "uncorrelated"


@dataclass(frozen=True)
class NoiseKind:
    """One of the four noise types: a mode plus a correlation scope."""

    mode: str
    correlation: str

    def __post_init__(self):
        if self.mode not in (ADDITIVE, MULTIPLICATIVE):
            raise ValueError(f"unknown noise mode '{self.mode}'")
        if self.correlation not in (CORRELATED, UNCORRELATED):
            raise ValueError(f"unknown noise correlation '{self.correlation}'")

    @property
    def kind_id(self) -> int:
        """Stable integer used in stream-seed derivation."""
        return 2 * (self.mode == MULTIPLICATIVE) + (self.correlation == UNCORRELATED)

    @property
    def name(self) -> str:
        return f"{self.mode}-{self.correlation}"

    @classmethod
    def from_name(cls, name: str) -> "NoiseKind":
        parts = name.split("-")
        if len(parts) != 2:
            raise ValueError(f"noise kind must look like 'additive-uncorrelated', got '{name}'")
        return cls(mode=parts[0], correlation=parts[1])


ADDITIVE_CORRELATED = NoiseKind(ADDITIVE, CORRELATED)
ADDITIVE_UNCORRELATED = NoiseKind(ADDITIVE, UNCORRELATED)
MULTIPLICATIVE_CORRELATED = NoiseKind(MULTIPLICATIVE, CORRELATED)
MULTIPLICATIVE_UNCORRELATED = NoiseKind(MULTIPLICATIVE, UNCORRELATED)

# Injection order when several sources hit one layer: multiplicative scales
# the clean activation first, additive offsets are added afterwards, so each
# source's marginal effect stays exactly the single-source formula.
_APPLY_ORDER = {
    (MULTIPLICATIVE, CORRELATED): 0,
    (MULTIPLICATIVE, UNCORRELATED): 1,
    (ADDITIVE, CORRELATED): 2,
    (ADDITIVE, UNCORRELATED): 3,
}


@dataclass(frozen=True)
class NoiseSource:
    """One noise type bound to a layer with intensity D (variance 2*D).

    ``layer`` counts non-input layers from 1, so for the reference topology
    layer 1 is the hidden layer and layer 2 the output layer.
    """

    kind: NoiseKind
    layer: int
    intensity: float

    def __post_init__(self):
        if self.layer < 1:
            raise ValueError(f"layer index must be >= 1, got {self.layer}")
        if not (self.intensity >= 0.0) or not math.isfinite(self.intensity):
            raise ValueError(f"noise intensity D must be finite and >= 0, got {self.intensity}")

    @property
    def amplitude(self) -> float:
        """sqrt(2*D), the standard deviation of the injected perturbation."""
        return math.sqrt(2.0 * self.intensity)


@dataclass(frozen=True)
class NoiseConfig:
    """A set of noise sources plus the master seed that fixes all draws."""

    sources: tuple[NoiseSource, ...]
    master_seed: int

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        seen = set()
        for src in self.sources:
            key = (src.kind, src.layer)
            if key in seen:
                raise ValueError(
                    f"duplicate noise source for kind {src.kind.name} at layer {src.layer}"
                )
            seen.add(key)

    def sources_at(self, layer: int) -> tuple[NoiseSource, ...]:
        """Sources bound to one layer, in the fixed application order."""
        hits = [s for s in self.sources if s.layer == layer]
        hits.sort(key=lambda s: _APPLY_ORDER[(s.kind.mode, s.kind.correlation)])
        return tuple(hits)

    def max_layer(self) -> int:
        return max((s.layer for s in self.sources), default=0)


def _inject(values: np.ndarray, source: NoiseSource, xi: np.ndarray) -> np.ndarray:
    """Fold one source's perturbation into activation rows."""
    amp = source.amplitude
    if source.kind.mode == MULTIPLICATIVE:
        return values * (1.0 + amp * xi)
    return values + amp * xi


def apply_noise(
    activations: np.ndarray,
    sources: list[NoiseSource] | tuple[NoiseSource, ...],
    stream: RandomStream,
) -> np.ndarray:
    """Apply noise sources to one layer's activation vector.

    Sources are applied in the fixed order (multiplicative before additive,
    correlated before uncorrelated within a mode), each consuming its draws
    from ``stream`` in turn: one draw if correlated, one per neuron if
    uncorrelated.
    """
    y = np.asarray(activations, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError(f"expected an activation vector, got shape {y.shape}")
    ordered = sorted(sources, key=lambda s: _APPLY_ORDER[(s.kind.mode, s.kind.correlation)])
    out = y
    for src in ordered:
        if src.kind.correlation == CORRELATED:
            xi = np.full(y.shape, stream.gaussian(1)[0])
        else:
            xi = stream.gaussian(y.shape[0])
        out = _inject(out, src, xi)
    return out


def _source_seeds(
    cfg: NoiseConfig, source: NoiseSource, sample_indices: np.ndarray, repeat: int
) -> np.ndarray:
    """Per-sample stream seeds for one source, one repeat."""
    base = derive_seed(cfg.master_seed, source.layer, source.kind.kind_id)
    seeds = fold_seeds(np.uint64(base), np.asarray(sample_indices, dtype=np.uint64))
    return fold_seeds(seeds, np.uint64(repeat))


def noisy_forward_batch(
    net: Network,
    inputs: np.ndarray,
    cfg: NoiseConfig,
    sample_indices: np.ndarray,
    repeat: int = 0,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Forward pass with configured noise, over a batch of samples.

    ``sample_indices[i]`` is the dataset index of row i; it selects the
    per-sample noise streams, so a batch evaluation injects exactly the
    same perturbations as one-at-a-time evaluation.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != net.input_size:
        raise ValueError(
            f"input batch shape {inputs.shape} does not match network input size {net.input_size}"
        )
    if cfg.max_layer() > len(net.layers):
        raise ValueError(
            f"noise layer {cfg.max_layer()} out of range for a {len(net.layers)}-layer network"
        )
    sample_indices = np.asarray(sample_indices)
    if sample_indices.shape != (inputs.shape[0],):
        raise ValueError("need one sample index per input row")

    pres, acts = [], []
    y = inputs
    for li, layer in enumerate(net.layers, start=1):
        x = y @ layer.weights + layer.biases
        y = _activate(layer, x)
        for src in cfg.sources_at(li):
            seeds = _source_seeds(cfg, src, sample_indices, repeat)
            n_draws = 1 if src.kind.correlation == CORRELATED else layer.fan_out
            xi = gaussian_block(seeds, n_draws)  # (n_samples, n_draws), broadcasts
            y = _inject(y, src, xi)
        pres.append(x)
        acts.append(y)
    return pres, acts


def noisy_forward(
    net: Network,
    input_vec: np.ndarray,
    cfg: NoiseConfig,
    sample_index: int,
    repeat: int = 0,
) -> ForwardTrace:
    """Forward pass of one sample with noise drawn for its sample index."""
    input_vec = np.asarray(input_vec, dtype=np.float64)
    if input_vec.shape != (net.input_size,):
        raise ValueError(
            f"input shape {input_vec.shape} does not match network input size {net.input_size}"
        )
    pres, acts = noisy_forward_batch(
        net, input_vec[None, :], cfg, np.array([sample_index]), repeat
    )
    return ForwardTrace(
        preactivations=tuple(p[0] for p in pres),
        activations=tuple(a[0] for a in acts),
    )


@dataclass(frozen=True)
class NoisyAccuracy:
    """Mean accuracy over noise realizations, with its standard error."""

    mean: float
    stderr: float
    per_repeat: tuple[float, ...] = field(default=(), compare=False)


def noisy_accuracy(net: Network, data, cfg: NoiseConfig, repeats: int = 10) -> NoisyAccuracy:
    """Accuracy under noise, averaged over independent full-dataset realizations.

    Realization r re-runs the whole dataset with repeat index r, so each
    sample sees a fresh draw per realization while everything stays
    reproducible from the master seed.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    if len(data) == 0:
        raise ValueError("cannot score an empty dataset")
    indices = np.arange(len(data))
    accs = np.empty(repeats, dtype=np.float64)
    for r in range(repeats):
        _, acts = noisy_forward_batch(net, data.inputs, cfg, indices, repeat=r)
        accs[r] = np.mean(np.argmax(acts[-1], axis=1) == data.labels)
    stderr = float(np.std(accs, ddof=1) / math.sqrt(repeats)) if repeats > 1 else 0.0
    return NoisyAccuracy(mean=float(np.mean(accs)), stderr=stderr, per_repeat=tuple(accs))
