"""Turning a first-layer patch into an input perturbation, and the full attack."""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np

from .lp import LinearProgram, Relation, Status, VarKind, solve_lp, solve_milp
from .network import Activation, Network, Patch, forward
from .numeric import Arithmetic, Number, as_array
from .patching import PatchConfig, PatchInfeasible, Sparsity, find_first_layer_mod
from .properties import OutputProperty, Untargeted


class AttackStatus(str, enum.Enum):
    SUCCESS = "success"
    PATCH_INFEASIBLE = "patch_infeasible"
    TRANSLATION_INFEASIBLE = "translation_infeasible"


@dataclass
class AdversarialResult:
    status: AttackStatus
    deltas: np.ndarray | None = None
    adversarial_input: np.ndarray | None = None
    patch_trail: list[tuple[int, Patch]] = field(default_factory=list)
    message: str = ""
    prop: OutputProperty | None = None
    elapsed: float = 0.0

    @property
    def success(self) -> bool:
        return self.status is AttackStatus.SUCCESS


def translate_hidden(original: Network, x, hidden, cfg: PatchConfig) -> AdversarialResult:
    """Find ``delta`` with ``|delta_p| <= delta_max`` so that the first hidden layer of
    ``original`` on ``x + delta`` takes the values ``hidden``.

    Neurons with a positive target reproduce it exactly.  Zero targets ask for a
    non-positive pre-activation when ``cfg.relax_inactive`` is set, and for an
    exactly zero one otherwise.  With ``Sparsity.MINIMIZE_PIXELS`` each input gets
    a binary switch and the number of switched-on inputs is minimised; with
    ``Sparsity.DENSE`` the sum of absolute changes is minimised.
    """
    mode = cfg.arithmetic
    net = original.to_mode(mode)
    x = as_array(x, mode)
    hidden = as_array(hidden, mode)
    n = net.input_width
    zero = cfg.num(0)
    dmax = cfg.delta_max
    w = net.weight(1)
    b = net.bias(2)
    relu = net.layers[1].activation is Activation.RELU

    lp = LinearProgram(mode, name="mod2adv")
    delta = []
    for p in range(n):
        lo, hi = -dmax, dmax
        if cfg.input_bounds is not None:
            lo = max(lo, cfg.input_bounds[0] - x[p])
            hi = min(hi, cfg.input_bounds[1] - x[p])
        if lo > hi:
            return AdversarialResult(AttackStatus.TRANSLATION_INFEASIBLE,
                                     message=f"input {p + 1} lies outside the admissible box")
        delta.append(lp.add_variable(f"d{p + 1}", lo, hi))

    base = w.dot(x) + b
    for q in range(w.shape[0]):
        row = {delta[p]: w[q, p] for p in range(n) if w[q, p] != 0}
        rhs = hidden[q] - base[q]
        if relu and hidden[q] <= 0:
            if hidden[q] < 0:
                raise ValueError("hidden target of a ReLU layer cannot be negative")
            rel = Relation.LE if cfg.relax_inactive else Relation.EQ
        else:
            rel = Relation.EQ
        lp.add_constraint(row, rel, rhs, name=f"h{q + 1}")

    if cfg.sparsity is Sparsity.MINIMIZE_PIXELS:
        gates = []
        for p in range(n):
            var = lp.variables[delta[p]]
            g = lp.add_variable(f"m{p + 1}", kind=VarKind.BINARY)
            gates.append(g)
            # delta_p in [lo * m_p, hi * m_p]
            lp.add_constraint({delta[p]: 1, g: -var.upper}, Relation.LE, 0, name=f"gate_hi{p + 1}")
            lp.add_constraint({delta[p]: 1, g: -var.lower}, Relation.GE, 0, name=f"gate_lo{p + 1}")
        lp.minimize({g: 1 for g in gates})
        sol = solve_milp(lp, backend=cfg.backend, node_limit=cfg.node_limit, time_limit=cfg.time_limit)
    else:
        abs_vars = []
        for p in range(n):
            a = lp.add_variable(f"a{p + 1}", 0, None)
            lp.add_constraint({delta[p]: 1, a: -1}, Relation.LE, 0)
            lp.add_constraint({delta[p]: -1, a: -1}, Relation.LE, 0)
            abs_vars.append(a)
        lp.minimize({a: 1 for a in abs_vars})
        sol = solve_lp(lp, backend=cfg.backend)

    usable = sol.status is Status.OPTIMAL or (
        sol.status is Status.ITERATION_LIMIT and sol.has_assignment)
    if not usable:
        return AdversarialResult(AttackStatus.TRANSLATION_INFEASIBLE,
                                 message=f"input translation LP {sol.status.value}")

    d = np.full(n, zero, dtype=object if mode is Arithmetic.RATIONAL else np.float64)
    for p in range(n):
        v = sol.values[delta[p]]
        if mode is Arithmetic.FLOAT:
            var = lp.variables[delta[p]]
            v = min(max(v, var.lower), var.upper)
            if cfg.sparsity is Sparsity.MINIMIZE_PIXELS and sol.values[gates[p]] < 0.5:
                v = 0.0
        d[p] = v
    adv = x + d

    got = forward(net, adv).layer(2)
    tol = cfg.check_tol
    for q in range(len(hidden)):
        if abs(got[q] - hidden[q]) > tol * max(1, abs(hidden[q])):
            return AdversarialResult(AttackStatus.TRANSLATION_INFEASIBLE, d, adv,
                                     message=f"hidden neuron {q + 1} not reproduced on re-simulation")
    msg = "" if sol.status is Status.OPTIMAL else "MILP stopped at its node or time limit; best incumbent used"
    return AdversarialResult(AttackStatus.SUCCESS, d, adv, message=msg)


def mod2adv(net_mod: Network, original: Network, x, cfg: PatchConfig) -> AdversarialResult:
    """Translate the first-edge-layer patch in ``net_mod`` into an input change for ``original``."""
    mode = cfg.arithmetic
    net_mod = net_mod.to_mode(mode)
    original = original.to_mode(mode)
    if net_mod.widths != original.widths:
        raise ValueError("patched and original networks have different shapes")
    for s in range(2, original.depth):
        if not np.array_equal(net_mod.weight(s), original.weight(s)):
            raise ValueError(f"patched network differs from the original in edge-layer {s}")
    hidden = forward(net_mod, x).layer(2)
    return translate_hidden(original, x, hidden, cfg)


def attack(net: Network, x, prop: OutputProperty, cfg: PatchConfig) -> AdversarialResult:
    """Search for ``x + delta`` with ``||delta||_inf <= delta_max`` whose output satisfies ``prop``."""
    start = time.perf_counter()
    mode = cfg.arithmetic
    net = net.to_mode(mode)
    prop = prop.to_mode(mode)
    x = as_array(x, mode)
    tol = cfg.check_tol
    out = forward(net, x).output
    if prop.holds(out, tol):
        zero = x * 0
        return AdversarialResult(AttackStatus.SUCCESS, zero, x.copy(), prop=prop,
                                 message="property already holds", elapsed=time.perf_counter() - start)
    try:
        first = find_first_layer_mod(net, x, prop, cfg)
    except PatchInfeasible as exc:
        where = f" (iteration {exc.iteration}, edge-layer {exc.edge_layer})" if exc.iteration else ""
        return AdversarialResult(AttackStatus.PATCH_INFEASIBLE, message=f"{exc}{where}",
                                 prop=prop, elapsed=time.perf_counter() - start)
    result = mod2adv(first.network, net, x, cfg)
    result.patch_trail = first.trail
    result.prop = prop
    _verify(net, prop, result, cfg)
    result.elapsed = time.perf_counter() - start
    return result


def attack_from_hidden(net: Network, x, prop: OutputProperty, hidden, cfg: PatchConfig) -> AdversarialResult:
    """Skip the patch search: translate a given first-hidden-layer target and verify ``prop``.

    Useful for replaying a known first-layer patch (its hidden values) through the
    input translation.
    """
    start = time.perf_counter()
    net = net.to_mode(cfg.arithmetic)
    prop = prop.to_mode(cfg.arithmetic)
    result = translate_hidden(net, x, hidden, cfg)
    result.prop = prop
    _verify(net, prop, result, cfg)
    result.elapsed = time.perf_counter() - start
    return result


def _verify(net: Network, prop: OutputProperty, result: AdversarialResult, cfg: PatchConfig) -> None:
    if not result.success:
        return
    tol = cfg.check_tol
    out = forward(net, result.adversarial_input).output
    linf = max((abs(v) for v in result.deltas), default=0)
    if not prop.holds(out, tol) or linf > cfg.delta_max + tol:
        result.status = AttackStatus.TRANSLATION_INFEASIBLE
        result.message = "adversarial input failed end-to-end verification"


def attack_untargeted(net: Network, x, label: int, cfg: PatchConfig) -> AdversarialResult:
    """Try ``o_t > o_label`` for each other class ``t``, highest original output first."""
    start = time.perf_counter()
    net = net.to_mode(cfg.arithmetic)
    out = forward(net, x).output
    last = None
    for prop in Untargeted(label).targets(out, label):
        last = attack(net, x, prop, cfg)
        if last.success:
            break
    last.elapsed = time.perf_counter() - start
    return last


def predicted_class(net: Network, x) -> int:
    out = forward(net, x).output
    return max(range(len(out)), key=lambda t: (out[t], -t))
