"""Feed-forward ReLU networks: loading, simulation, truncation and patching.

Layers are numbered from 1 (the input layer) to ``k`` (the output layer) in the
public API; edge-layer ``s`` connects layer ``s`` to layer ``s + 1``.  Weight
matrices are stored row-per-target-neuron, so ``weights[s - 1][t, q]`` is the
weight of the edge from neuron ``q`` of layer ``s`` to neuron ``t`` of layer
``s + 1``.
"""
from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .numeric import Arithmetic, NonFiniteError, Number, array_mode, as_array, convert, to_jsonable


class NetworkFormatError(ValueError):
    """Malformed network file."""


class ShapeError(ValueError):
    """Dimension mismatch between a network, a vector or a patch."""


class Activation(str, enum.Enum):
    RELU = "relu"
    IDENTITY = "identity"


@dataclass(frozen=True, eq=False)
class Layer:
    width: int
    activation: Activation
    biases: np.ndarray  # zeros for the input layer

    def __post_init__(self):
        self.biases.flags.writeable = False


@dataclass(frozen=True, eq=False)
class Network:
    layers: tuple[Layer, ...]
    weights: tuple[np.ndarray, ...]
    name: str = "net"

    def __post_init__(self):
        if len(self.layers) < 2:
            raise ShapeError("a network needs at least two layers")
        if len(self.weights) != len(self.layers) - 1:
            raise ShapeError(
                f"{len(self.layers)} layers need {len(self.layers) - 1} edge-layers, got {len(self.weights)}")
        for i, layer in enumerate(self.layers):
            if layer.width < 1:
                raise ShapeError(f"layer {i + 1} has width {layer.width}")
            if layer.biases.shape != (layer.width,):
                raise ShapeError(f"layer {i + 1}: bias vector has shape {layer.biases.shape}, "
                                 f"expected ({layer.width},)")
        for s, w in enumerate(self.weights, start=1):
            expected = (self.layers[s].width, self.layers[s - 1].width)
            if w.shape != expected:
                raise ShapeError(f"edge-layer {s}: weight matrix has shape {w.shape}, expected {expected}")
            w.flags.writeable = False

    @property
    def depth(self) -> int:
        """Number of layers ``k``."""
        return len(self.layers)

    @property
    def n_edge_layers(self) -> int:
        return len(self.weights)

    @property
    def widths(self) -> list[int]:
        return [layer.width for layer in self.layers]

    @property
    def input_width(self) -> int:
        return self.layers[0].width

    @property
    def output_width(self) -> int:
        return self.layers[-1].width

    @property
    def mode(self) -> Arithmetic:
        return array_mode(self.weights[0])

    def weight(self, s: int) -> np.ndarray:
        return self.weights[s - 1]

    def bias(self, p: int) -> np.ndarray:
        return self.layers[p - 1].biases

    def to_mode(self, mode: Arithmetic) -> "Network":
        mode = Arithmetic(mode)
        if mode is self.mode:
            return self
        layers = tuple(Layer(l.width, l.activation, as_array(l.biases, mode)) for l in self.layers)
        return Network(layers, tuple(as_array(w, mode) for w in self.weights), self.name)


@dataclass(frozen=True, eq=False)
class LayerTrace:
    """Pre-activation sums and neuron values for every layer (index 0 is layer 1)."""

    pre_activations: tuple[np.ndarray, ...]
    values: tuple[np.ndarray, ...]

    @property
    def output(self) -> np.ndarray:
        return self.values[-1]

    def layer(self, p: int) -> np.ndarray:
        return self.values[p - 1]

    def pre(self, p: int) -> np.ndarray:
        return self.pre_activations[p - 1]


@dataclass(frozen=True, eq=False)
class Patch:
    """Weight deltas for a single edge-layer, shaped like that layer's matrix."""

    edge_layer: int
    deltas: np.ndarray
    bound: Number = field(default=0)

    @classmethod
    def zeros(cls, net: Network, s: int) -> "Patch":
        w = net.weight(s)
        return cls(s, w * 0, convert(0, net.mode))

    def negated(self) -> "Patch":
        return Patch(self.edge_layer, -self.deltas, self.bound)

    def max_abs(self) -> Number:
        return max((abs(v) for v in self.deltas.ravel()), default=0)


# -- construction and IO -----------------------------------------------------------------------

def build_network(weights: Sequence, biases: Sequence, name: str = "net",
                  mode: Arithmetic = Arithmetic.RATIONAL,
                  activations: Sequence[str] | None = None) -> Network:
    """Build a network from per-edge-layer matrices and per-non-input-layer biases.

    Hidden layers default to ReLU and the output layer to identity.
    """
    mats = [as_array(w, mode) for w in weights]
    for s, w in enumerate(mats, start=1):
        if w.ndim != 2:
            raise ShapeError(f"edge-layer {s}: weight block is not a matrix")
    if not mats:
        raise ShapeError("a network needs at least one edge-layer")
    widths = [mats[0].shape[1]] + [w.shape[0] for w in mats]
    if len(biases) != len(mats):
        raise ShapeError(f"expected {len(mats)} bias vectors, got {len(biases)}")
    if activations is None:
        activations = ["identity"] + ["relu"] * (len(widths) - 2) + ["identity"]
    acts = [Activation(a) for a in activations]
    if len(acts) != len(widths):
        raise ShapeError(f"expected {len(widths)} activations, got {len(acts)}")
    if acts[-1] is not Activation.IDENTITY:
        raise ShapeError("the output layer must have identity activation")
    if any(a is not Activation.RELU for a in acts[1:-1]):
        raise ShapeError("hidden layers must have ReLU activation")
    layers = [Layer(widths[0], acts[0], as_array([0] * widths[0], mode))]
    for p, b in enumerate(biases, start=2):
        layers.append(Layer(widths[p - 1], acts[p - 1], as_array(b, mode)))
    return Network(tuple(layers), tuple(mats), name)


def network_from_dict(doc: dict, mode: Arithmetic = Arithmetic.RATIONAL) -> Network:
    try:
        widths = [int(w) for w in doc["widths"]]
        activations = doc.get("activations")
        blocks = doc["edge_layers"]
        weights = [blk["weights"] for blk in blocks]
        biases = [blk.get("biases", [0] * len(blk["weights"])) for blk in blocks]
    except (KeyError, TypeError) as exc:
        raise NetworkFormatError(f"missing or malformed field: {exc}") from exc
    if len(widths) < 2:
        raise ShapeError("a network needs at least two layers")
    if len(blocks) != len(widths) - 1:
        raise ShapeError(f"{len(widths)} widths need {len(widths) - 1} edge-layer blocks, got {len(blocks)}")
    for s, (w, b) in enumerate(zip(weights, biases), start=1):
        rows, cols = widths[s], widths[s - 1]
        if not isinstance(w, list) or len(w) != rows or any(
                not isinstance(r, list) or len(r) != cols for r in w):
            raise ShapeError(f"edge-layer {s}: weight matrix must be {rows}x{cols}")
        if not isinstance(b, list) or len(b) != rows:
            raise ShapeError(f"edge-layer {s}: bias vector must have length {rows}")
    try:
        return build_network(weights, biases, str(doc.get("name", "net")), mode, activations)
    except ValueError as exc:
        if isinstance(exc, (ShapeError, NonFiniteError)):
            raise
        raise NetworkFormatError(str(exc)) from exc


def load_network(path: str | os.PathLike, mode: Arithmetic = Arithmetic.RATIONAL) -> Network:
    """Read a network file (JSON, see README for the schema)."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise NetworkFormatError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise NetworkFormatError(f"{path}: top level must be an object")
    return network_from_dict(doc, mode)


def network_to_dict(net: Network) -> dict:
    return {
        "name": net.name,
        "widths": net.widths,
        "activations": [l.activation.value for l in net.layers],
        "edge_layers": [
            {"weights": [[to_jsonable(v) for v in row] for row in w],
             "biases": [to_jsonable(v) for v in net.layers[s].biases]}
            for s, w in enumerate(net.weights, start=1)
        ],
    }


def save_network(net: Network, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(network_to_dict(net), fh, indent=1)
        fh.write("\n")


# -- semantics ---------------------------------------------------------------------------------

def relu(x: np.ndarray) -> np.ndarray:
    if x.dtype == object:
        zero = convert(0, Arithmetic.RATIONAL)
        out = np.empty(x.shape, dtype=object)
        out[:] = [v if v > 0 else zero for v in x]
        return out
    return np.maximum(x, 0.0)


def forward(net: Network, x: Sequence[Number] | np.ndarray) -> LayerTrace:
    """Simulate ``net`` on ``x`` recording every layer.

    Inputs are converted to the network's arithmetic mode.
    """
    x = as_array(x, net.mode)
    if x.shape != (net.input_width,):
        raise ShapeError(f"input has shape {x.shape}, network expects ({net.input_width},)")
    pres = [x]
    values = [x]
    for s, w in enumerate(net.weights, start=1):
        layer = net.layers[s]
        pre = w.dot(values[-1]) + layer.biases
        pres.append(pre)
        values.append(relu(pre) if layer.activation is Activation.RELU else pre)
    return LayerTrace(tuple(pres), tuple(values))


def truncate(net: Network, j: int) -> Network:
    """Keep layers ``1..j``.  Layer ``j`` keeps its activation (ReLU if it was hidden)."""
    if not 2 <= j <= net.depth:
        raise IndexError(f"truncation layer {j} outside 2..{net.depth}")
    if j == net.depth:
        return net
    return Network(net.layers[:j], net.weights[:j - 1], f"{net.name}[1..{j}]")


def apply_patch(net: Network, patch: Patch) -> Network:
    s = patch.edge_layer
    if not 1 <= s <= net.n_edge_layers:
        raise ShapeError(f"patch targets edge-layer {s}, network has {net.n_edge_layers}")
    w = net.weight(s)
    deltas = as_array(patch.deltas, net.mode)
    if deltas.shape != w.shape:
        raise ShapeError(f"patch has shape {deltas.shape}, edge-layer {s} has {w.shape}")
    weights = list(net.weights)
    weights[s - 1] = w + deltas
    return Network(net.layers, tuple(weights), net.name)


def with_prefix_weights(full: Network, prefix: Network) -> Network:
    """``full`` with its first edge-layers taken from ``prefix`` (a patched truncation)."""
    weights = list(full.weights)
    weights[:prefix.n_edge_layers] = prefix.weights
    return Network(full.layers, tuple(weights), full.name)
