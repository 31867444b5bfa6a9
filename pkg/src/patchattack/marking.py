"""Increment/decrement neuron marking and the weight-delta sign rules it induces."""
from __future__ import annotations

import enum
import math
from typing import Sequence

import numpy as np

from .network import Network, ShapeError
from .numeric import Number
from .properties import OutputProperty, PropertyError, Rel


class Tag(str, enum.Enum):
    INCREMENT = "inc"
    DECREMENT = "dec"
    FREE = "free"
    # the property does not depend on this neuron at all
    UNCONSTRAINED = "unconstrained"


class Sign(str, enum.Enum):
    NONNEGATIVE = "nonneg"
    NONPOSITIVE = "nonpos"
    ZERO = "zero"
    FREE = "free"


def _from_directions(dirs: set[int]) -> Tag:
    if dirs == {1}:
        return Tag.INCREMENT
    if dirs == {-1}:
        return Tag.DECREMENT
    return Tag.FREE


def mark_outputs(prop: OutputProperty, width: int, unmentioned: Tag = Tag.FREE) -> list[Tag]:
    """Tag each neuron by the direction in which moving it helps satisfy ``prop``.

    Equality conjuncts pull both ways, so their neurons end up ``FREE``.  Neurons
    the property never mentions get ``unmentioned``: ``FREE`` by default, or
    ``UNCONSTRAINED`` to let backward propagation ignore them.
    """
    if unmentioned not in (Tag.FREE, Tag.UNCONSTRAINED):
        raise ValueError("unmentioned neurons are tagged FREE or UNCONSTRAINED")
    if prop.max_index() >= width:
        raise PropertyError(f"property references neuron {prop.max_index() + 1}, layer has {width}")
    dirs: list[set[int]] = [set() for _ in range(width)]
    for con in prop.conjuncts:
        for q, a in con.coeffs:
            if a == 0:
                continue
            if con.rel is Rel.EQ:
                dirs[q].update((1, -1))
                continue
            up = con.rel in (Rel.GE, Rel.GT)
            dirs[q].add(1 if (a > 0) == up else -1)
    return [_from_directions(d) if d else unmentioned for d in dirs]


def propagate_tags(weights: np.ndarray, target_tags: Sequence[Tag]) -> list[Tag]:
    """Tags for the source side of one edge-layer (``weights`` is targets x sources).

    A source is ``INCREMENT`` when each nonzero outgoing edge is positive into an
    ``INCREMENT`` target or negative into a ``DECREMENT`` one, ``DECREMENT`` in the
    mirrored case, and ``FREE`` otherwise (including edges into ``FREE`` targets).
    Edges into ``UNCONSTRAINED`` targets impose nothing; a source whose nonzero
    edges all lead to such targets is itself ``UNCONSTRAINED``.
    """
    n_t, n_s = weights.shape
    if len(target_tags) != n_t:
        raise ShapeError(f"{len(target_tags)} target tags for a layer of width {n_t}")
    out = []
    for q in range(n_s):
        dirs: set[int] = set()
        ignored = False
        for t in range(n_t):
            w = weights[t, q]
            if w == 0:
                continue
            tag = target_tags[t]
            if tag is Tag.UNCONSTRAINED:
                ignored = True
                continue
            if tag is Tag.FREE:
                dirs.update((1, -1))
                break
            pos = w > 0
            dirs.add(1 if pos == (tag is Tag.INCREMENT) else -1)
        out.append(Tag.UNCONSTRAINED if ignored and not dirs else _from_directions(dirs))
    return out


def propagate_marking(net: Network, target_tags: Sequence[Tag], layer: int | None = None) -> list[list[Tag]]:
    """Marking of layers ``1..layer`` given tags on ``layer`` (default: the output layer).

    Element ``p - 1`` of the result holds the tags of layer ``p``.
    """
    layer = net.depth if layer is None else layer
    if not 1 <= layer <= net.depth:
        raise IndexError(f"layer {layer} outside 1..{net.depth}")
    if len(target_tags) != net.layers[layer - 1].width:
        raise ShapeError(f"{len(target_tags)} tags for layer {layer} of width {net.layers[layer - 1].width}")
    marking = [list(target_tags)]
    for s in range(layer - 1, 0, -1):
        marking.insert(0, propagate_tags(net.weight(s), marking[0]))
    return marking


def epsilon_sign(source_value: Number, target_tag: Tag) -> Sign:
    """Admissible sign of a weight change given the source value and target tag."""
    if isinstance(source_value, float) and not math.isfinite(source_value):
        raise ValueError(f"non-finite source value {source_value!r}")
    if source_value == 0:
        return Sign.ZERO
    if target_tag in (Tag.FREE, Tag.UNCONSTRAINED):
        return Sign.FREE
    grow = (source_value > 0) == (target_tag is Tag.INCREMENT)
    return Sign.NONNEGATIVE if grow else Sign.NONPOSITIVE


def edge_signs(source_values: Sequence[Number], target_tags: Sequence[Tag]) -> np.ndarray:
    """Sign constraint per edge, shaped like the edge-layer matrix (targets x sources)."""
    out = np.empty((len(target_tags), len(source_values)), dtype=object)
    for t, tag in enumerate(target_tags):
        for q, v in enumerate(source_values):
            out[t, q] = epsilon_sign(v, tag)
    return out


def edges_source_major(signs: np.ndarray) -> list[Sign]:
    """Flatten per-edge signs enumerating all edges of source 1 first, then source 2, ...

    This is the edge numbering used when the simplified constraints of a small
    example are listed edge by edge.
    """
    return [signs[t, q] for q in range(signs.shape[1]) for t in range(signs.shape[0])]
