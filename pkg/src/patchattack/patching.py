"""Single-edge-layer patching and the bisection down to a first-layer patch."""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from .lp import LinearProgram, Relation, Status, solve_lp
from .marking import Sign, Tag, edge_signs, mark_outputs, propagate_marking
from .network import (Activation, LayerTrace, Network, Patch, apply_patch, forward,
                      truncate)
from .numeric import Arithmetic, Number, as_array, convert, parse_number
from .properties import Conjunct, OutputProperty, Rel

log = logging.getLogger(__name__)

FLOAT_CHECK_TOL = 1e-6


class Objective(str, enum.Enum):
    MAX_NORM = "maxnorm"
    SUM_ABS = "sumabs"


class Sparsity(str, enum.Enum):
    DENSE = "dense"
    MINIMIZE_PIXELS = "pixels"


class PatchInfeasible(Exception):
    """No patch of the requested edge-layer satisfies the property under fixed phases."""

    def __init__(self, message: str, edge_layer: int | None = None, iteration: int | None = None):
        super().__init__(message)
        self.edge_layer = edge_layer
        self.iteration = iteration


@dataclass(frozen=True)
class PatchConfig:
    alpha: Number = 10
    delta_max: Number = 0.5
    margin: Number | None = None  # None: 1/10000 (rational) or 1e-4 (float)
    objective: Objective = Objective.MAX_NORM
    sparsity: Sparsity = Sparsity.MINIMIZE_PIXELS
    arithmetic: Arithmetic = Arithmetic.RATIONAL
    relax_property: bool = True
    relax_inactive: bool = True
    sign_constraints: bool = True
    ignore_unmentioned: bool = False
    input_bounds: tuple[Number, Number] | None = None
    backend: str = "auto"
    node_limit: int = 10_000
    time_limit: float | None = None

    def __post_init__(self):
        mode = Arithmetic(self.arithmetic)
        object.__setattr__(self, "arithmetic", mode)
        object.__setattr__(self, "objective", Objective(self.objective))
        object.__setattr__(self, "sparsity", Sparsity(self.sparsity))
        for name in ("alpha", "delta_max", "margin"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, parse_number(value, mode))
        if self.input_bounds is not None:
            lo, hi = (parse_number(b, mode) for b in self.input_bounds)
            if lo > hi:
                raise ValueError("input_bounds lower end exceeds upper end")
            object.__setattr__(self, "input_bounds", (lo, hi))
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.delta_max < 0:
            raise ValueError("delta_max must be non-negative")
        if self.margin is not None and not self.margin > 0:
            raise ValueError("margin must be positive")

    def num(self, value) -> Number:
        return convert(value, self.arithmetic)

    @property
    def gamma(self) -> Number:
        if self.margin is not None:
            return self.num(self.margin)
        return self.num(1) / 10000 if self.arithmetic is Arithmetic.RATIONAL else 1e-4

    @property
    def check_tol(self) -> Number:
        return self.num(0) if self.arithmetic is Arithmetic.RATIONAL else FLOAT_CHECK_TOL

    @property
    def unmentioned_tag(self) -> Tag:
        return Tag.UNCONSTRAINED if self.ignore_unmentioned else Tag.FREE

    def with_(self, **changes) -> "PatchConfig":
        return replace(self, **changes)


class FirstLayerMod(NamedTuple):
    network: Network
    trail: list[tuple[int, Patch]]
    properties: list[OutputProperty]


@dataclass
class _Affine:
    """Neuron values as affine maps of the LP variables: ``coef @ x + const`` per row."""

    coef: np.ndarray
    const: np.ndarray

    def row(self, t: int) -> dict[int, Number]:
        r = self.coef[t]
        return {int(j): r[j] for j in np.flatnonzero(r != 0)}


def derive_relaxed_property(tags: Sequence[Tag], values: Sequence[Number]) -> OutputProperty:
    """Per-neuron property ``v >= c`` (increment), ``v <= c`` (decrement) or ``v = c`` (free).

    Unconstrained neurons get no conjunct.  If every neuron is unconstrained the
    plain equalities are returned so the property stays nonempty.
    """
    if len(tags) != len(values):
        raise ValueError(f"{len(tags)} tags for {len(values)} values")
    rel = {Tag.INCREMENT: Rel.GE, Tag.DECREMENT: Rel.LE, Tag.FREE: Rel.EQ}
    conjuncts = tuple(Conjunct(((q, 1),), rel[tag], c)
                      for q, (tag, c) in enumerate(zip(tags, values)) if tag is not Tag.UNCONSTRAINED)
    if not conjuncts:
        conjuncts = tuple(Conjunct(((q, 1),), Rel.EQ, c) for q, c in enumerate(values))
    return OutputProperty(conjuncts)


def phases(trace: LayerTrace, p: int) -> np.ndarray:
    """Boolean activity mask of layer ``p`` on a trace (strictly positive pre-activation)."""
    return np.array([v > 0 for v in trace.pre(p)], dtype=bool)


def modify_edge_layer(net: Network, x, prop: OutputProperty, p: int, cfg: PatchConfig,
                      trace: LayerTrace | None = None) -> Patch:
    """Smallest change to the weights of edge-layer ``p`` making ``net(x)`` satisfy ``prop``.

    Hidden neurons downstream of the patched layer keep the phase they have on
    ``x`` in the unpatched network.  Raises :class:`PatchInfeasible` if the
    resulting LP has no solution.
    """
    net = net.to_mode(cfg.arithmetic)
    prop = prop.to_mode(cfg.arithmetic)
    k = net.depth
    if not 1 <= p <= net.n_edge_layers:
        raise IndexError(f"edge-layer {p} outside 1..{net.n_edge_layers}")
    prop.check_width(net.output_width)
    trace = trace or forward(net, x)
    zero = cfg.num(0)
    alpha = cfg.num(cfg.alpha)

    tags_out = mark_outputs(prop, net.output_width, cfg.unmentioned_tag)
    target_tags = propagate_marking(net, tags_out)[p]
    src = trace.layer(p)
    w = net.weight(p)
    n_t, n_s = w.shape
    if cfg.sign_constraints:
        signs = edge_signs(src, target_tags)
    else:
        signs = np.empty((n_t, n_s), dtype=object)
        signs.fill(Sign.FREE)  # np.full would coerce the str-enum to a numpy string

    lp = LinearProgram(cfg.arithmetic, name=f"patch_el{p}")
    # (t, q) -> [(column, +1 or -1)]; a free-signed delta under the sum-of-absolute-values
    # objective is split into two non-negative parts so no auxiliary rows are needed
    eps_cols: dict[tuple[int, int], list[tuple[int, int]]] = {}
    split = cfg.objective is Objective.SUM_ABS
    for t in range(n_t):
        for q in range(n_s):
            sign = signs[t, q]
            if sign is Sign.ZERO:
                continue
            name = f"eps_{p}_{t + 1}_{q + 1}"
            if split and sign is Sign.FREE:
                eps_cols[t, q] = [(lp.add_variable(name + "+", zero, alpha), 1),
                                  (lp.add_variable(name + "-", zero, alpha), -1)]
                continue
            lo = zero if sign is Sign.NONNEGATIVE else -alpha
            hi = zero if sign is Sign.NONPOSITIVE else alpha
            eps_cols[t, q] = [(lp.add_variable(name, lo, hi), 1)]
    n_var = len(lp.variables)

    dtype = object if cfg.arithmetic is Arithmetic.RATIONAL else np.float64
    coef = np.full((n_t, n_var), zero, dtype=dtype)
    for (t, q), cols in eps_cols.items():
        for j, d in cols:
            coef[t, j] = src[q] if d > 0 else -src[q]
    pre = _Affine(coef, w.dot(src) + net.bias(p + 1))

    for layer in range(p + 1, k + 1):
        act = net.layers[layer - 1].activation
        if layer == k:
            values = _encode_final_layer(lp, pre, act, prop, trace, k, cfg)
            break
        active = phases(trace, layer)
        for t in range(pre.coef.shape[0]):
            rel = Relation.GE if active[t] else Relation.LE
            lp.add_constraint(pre.row(t), rel, -pre.const[t], name=f"phase_{layer}_{t + 1}")
        mask = as_array([1 if a else 0 for a in active], cfg.arithmetic)
        val = _Affine(pre.coef * mask[:, None], pre.const * mask)
        wn = net.weight(layer)
        pre = _Affine(wn.dot(val.coef), wn.dot(val.const) + net.bias(layer + 1))

    if values is not None:
        _add_property(lp, values, prop, cfg.gamma)
    _set_objective(lp, eps_cols, signs, cfg)

    sol = solve_lp(lp, backend=cfg.backend)
    if sol.status is not Status.OPTIMAL:
        raise PatchInfeasible(f"edge-layer {p}: LP {sol.status.value}", edge_layer=p)

    deltas = np.full((n_t, n_s), zero, dtype=dtype)
    for (t, q), cols in eps_cols.items():
        v = zero
        for j, d in cols:
            x_j = sol.values[j]
            if cfg.arithmetic is Arithmetic.FLOAT:
                var = lp.variables[j]
                x_j = min(max(x_j, var.lower), var.upper)
            v = v + x_j if d > 0 else v - x_j
        deltas[t, q] = v
    patch = Patch(p, deltas, max((abs(v) for v in deltas.ravel()), default=zero))
    _check_patch(net, x, prop, patch, trace, cfg)
    return patch


def _encode_final_layer(lp, pre: _Affine, act: Activation, prop: OutputProperty,
                        trace: LayerTrace, k: int, cfg: PatchConfig):
    """Encode the last layer.  Returns the value map, or None if ``prop`` was fully encoded.

    An identity layer needs nothing.  For a ReLU last layer (a truncated net),
    single-neuron bounds are encoded exactly on the pre-activation; neurons in
    multi-neuron conjuncts fall back to phase fixing.
    """
    if act is Activation.IDENTITY:
        return pre
    multi = {q for c in prop.conjuncts if len(c.coeffs) > 1 for q in c.neurons()}
    if multi:
        active = phases(trace, k)
        mask = []
        for t in range(pre.coef.shape[0]):
            if t in multi:
                rel = Relation.GE if active[t] else Relation.LE
                lp.add_constraint(pre.row(t), rel, -pre.const[t], name=f"phase_{k}_{t + 1}")
            mask.append(1 if (t not in multi or active[t]) else 0)
        mask = as_array(mask, cfg.arithmetic)
        vals = _Affine(pre.coef * mask[:, None], pre.const * mask)
        multi_prop = OutputProperty(tuple(c for c in prop.conjuncts if len(c.coeffs) > 1))
        _add_property(lp, vals, multi_prop, cfg.gamma)
    gamma = cfg.gamma
    for con in prop.conjuncts:
        if len(con.coeffs) != 1:
            continue
        (q, a), = con.coeffs
        bound = con.rhs / a
        rel = con.rel
        if a < 0:
            rel = {Rel.GE: Rel.LE, Rel.GT: Rel.LT, Rel.LE: Rel.GE, Rel.LT: Rel.GT}.get(rel, rel)
        row = pre.row(q)
        const = pre.const[q]
        name = f"prop_{k}_{q + 1}"
        if rel in (Rel.GE, Rel.GT):
            if bound < 0 or (bound == 0 and rel is Rel.GE):
                continue  # relu(z) >= 0 always holds
            target = bound + gamma if rel is Rel.GT else bound
            lp.add_constraint(row, Relation.GE, target - const, name=name)
        elif rel in (Rel.LE, Rel.LT):
            if bound < 0 or (bound == 0 and rel is Rel.LT):
                raise PatchInfeasible(f"layer {k}: ReLU output cannot satisfy {con.rel.value} {con.rhs}")
            target = bound - gamma if rel is Rel.LT else bound
            lp.add_constraint(row, Relation.LE, target - const, name=name)
        else:
            if bound < 0:
                raise PatchInfeasible(f"layer {k}: ReLU output cannot equal {bound}")
            lp.add_constraint(row, Relation.EQ if bound > 0 else Relation.LE, bound - const, name=name)
    return None


def _add_property(lp, values: _Affine, prop: OutputProperty, gamma: Number) -> None:
    for i, con in enumerate(prop.conjuncts):
        row: dict[int, Number] = {}
        const = 0
        for q, a in con.coeffs:
            for j, c in values.row(q).items():
                row[j] = row.get(j, 0) + a * c
            const += a * values.const[q]
        rhs = con.rhs - const
        if con.rel is Rel.GT:
            lp.add_constraint(row, Relation.GE, rhs + gamma, name=f"prop_{i}")
        elif con.rel is Rel.LT:
            lp.add_constraint(row, Relation.LE, rhs - gamma, name=f"prop_{i}")
        else:
            rel = {Rel.GE: Relation.GE, Rel.LE: Relation.LE, Rel.EQ: Relation.EQ}[con.rel]
            lp.add_constraint(row, rel, rhs, name=f"prop_{i}")


def _set_objective(lp: LinearProgram, eps_cols: dict, signs: np.ndarray, cfg: PatchConfig) -> None:
    if cfg.objective is Objective.MAX_NORM:
        m = lp.add_variable("M", 0, cfg.num(cfg.alpha))
        for (t, q), ((j, _),) in eps_cols.items():
            sign = signs[t, q]
            if sign is not Sign.NONPOSITIVE:
                lp.add_constraint({j: 1, m: -1}, Relation.LE, 0, name=f"maxpos_{t + 1}_{q + 1}")
            if sign is not Sign.NONNEGATIVE:
                lp.add_constraint({j: -1, m: -1}, Relation.LE, 0, name=f"maxneg_{t + 1}_{q + 1}")
        lp.minimize({m: 1})
        return
    obj = {}
    for (t, q), cols in eps_cols.items():
        if len(cols) == 2:
            for j, _ in cols:
                obj[j] = 1
        else:
            (j, _), = cols
            obj[j] = -1 if signs[t, q] is Sign.NONPOSITIVE else 1
    lp.minimize(obj)


def _check_patch(net, x, prop, patch, trace, cfg) -> None:
    """Re-simulate the patched network; the LP model must agree with the simulation."""
    tol = cfg.check_tol
    patched = forward(apply_patch(net, patch), x)
    for layer in range(patch.edge_layer + 1, net.depth):
        before, after = trace.pre(layer), patched.pre(layer)
        for t in range(len(before)):
            if before[t] > 0 and after[t] < -tol:
                raise PatchInfeasible(f"layer {layer} neuron {t + 1} left its active phase",
                                      edge_layer=patch.edge_layer)
            if not before[t] > 0 and after[t] > tol:
                raise PatchInfeasible(f"layer {layer} neuron {t + 1} left its inactive phase",
                                      edge_layer=patch.edge_layer)
    if not prop.holds(patched.output, tol):
        raise PatchInfeasible(f"patched edge-layer {patch.edge_layer} fails the property on re-simulation",
                              edge_layer=patch.edge_layer)


def bisection_point(n_edge_layers: int) -> int:
    """Edge-layer patched first in a net with ``n_edge_layers`` edge-layers."""
    return math.ceil(n_edge_layers / 2)


def find_first_layer_mod(net: Network, x, prop: OutputProperty, cfg: PatchConfig) -> FirstLayerMod:
    """Patch a middle edge-layer, derive the hidden-layer property it implies, cut the net
    there and repeat until edge-layer 1 has been patched.

    Returns the full network with only edge-layer 1 changed, the per-iteration
    patches and the property used at each iteration.
    """
    net = net.to_mode(cfg.arithmetic)
    prop = prop.to_mode(cfg.arithmetic)
    x = as_array(x, cfg.arithmetic)
    trace = forward(net, x)
    current, cur_prop = net, prop
    trail: list[tuple[int, Patch]] = []
    props = [prop]
    iteration = 0
    while True:
        iteration += 1
        p = bisection_point(current.n_edge_layers)
        try:
            patch = modify_edge_layer(current, x, cur_prop, p, cfg, trace=_prefix(trace, current.depth))
        except PatchInfeasible as exc:
            exc.iteration = iteration
            exc.edge_layer = p
            raise
        trail.append((p, patch))
        log.debug("iteration %d: patched edge-layer %d, bound %s", iteration, p, patch.bound)
        if p == 1:
            net_mod = apply_patch(net, patch)
            out = forward(net_mod, x).output
            if not prop.holds(out, cfg.check_tol):
                raise PatchInfeasible("first-layer patch does not carry the property to the output",
                                      edge_layer=1, iteration=iteration)
            return FirstLayerMod(net_mod, trail, props)
        c = forward(apply_patch(current, patch), x).layer(p + 1)
        if cfg.relax_property:
            tags = propagate_marking(current, mark_outputs(cur_prop, current.output_width,
                                                           cfg.unmentioned_tag))[p]
        else:
            tags = [Tag.FREE] * len(c)
        cur_prop = derive_relaxed_property(tags, c)
        props.append(cur_prop)
        current = truncate(current, p + 1)


def _prefix(trace: LayerTrace, depth: int) -> LayerTrace:
    return LayerTrace(trace.pre_activations[:depth], trace.values[:depth])
