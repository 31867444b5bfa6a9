from fractions import Fraction as F

import numpy as np
import pytest

from patchattack.marking import Tag
from patchattack.network import Patch, apply_patch, build_network, forward, truncate
from patchattack.patching import (Objective, PatchConfig, PatchInfeasible, bisection_point,
                                  derive_relaxed_property, find_first_layer_mod, modify_edge_layer)
from patchattack.properties import Rel, parse_property

from .conftest import random_rational_net, random_rational_vector

HALF = [F(1, 2), F(1, 2)]
O2_GT_O1 = parse_property("o[2] > o[1]")
# a known valid middle-layer patch for the toy net, as a targets x sources matrix
REFERENCE_EL2 = np.array([[F(-9, 8), F(-17, 4)], [F(-5, 4), F(-1, 4)]], dtype=object)


def test_derive_relaxed_property():
    p = derive_relaxed_property([Tag.INCREMENT, Tag.DECREMENT], [F(1, 4), F(1, 8)])
    assert [(c.rel, c.rhs) for c in p.conjuncts] == [(Rel.GE, F(1, 4)), (Rel.LE, F(1, 8))]
    p = derive_relaxed_property([Tag.FREE, Tag.FREE], [1, 2])
    assert all(c.rel is Rel.EQ for c in p.conjuncts)
    p = derive_relaxed_property([Tag.UNCONSTRAINED, Tag.INCREMENT], [1, 2])
    assert len(p.conjuncts) == 1
    with pytest.raises(ValueError):
        derive_relaxed_property([Tag.FREE], [1, 2])


def test_bisection_point():
    assert [bisection_point(e) for e in (1, 2, 3, 4, 5)] == [1, 1, 2, 2, 3]


def test_reference_patch_is_valid_but_not_sign_consistent(toy):
    out = forward(apply_patch(toy, Patch(2, REFERENCE_EL2, F(17, 4))), HALF).output
    assert list(out) == [F(-1, 2), F(-3, 8)]
    # weights into x4 (tagged Increment) were decreased, so the sign rules exclude it
    with_signs = modify_edge_layer(toy, HALF, O2_GT_O1, 2, PatchConfig())
    assert with_signs.deltas[1, 0] >= 0 and with_signs.deltas[1, 1] >= 0


@pytest.mark.parametrize("objective,reference_value", [
    (Objective.MAX_NORM, F(17, 4)),
    (Objective.SUM_ABS, F(9, 8) + F(17, 4) + F(5, 4) + F(1, 4)),
])
@pytest.mark.parametrize("signs", [True, False])
def test_toy_middle_patch_no_worse_than_reference(toy, objective, reference_value, signs):
    cfg = PatchConfig(objective=objective, sign_constraints=signs)
    patch = modify_edge_layer(toy, HALF, O2_GT_O1, 2, cfg)
    flat = list(patch.deltas.ravel())
    value = max(abs(v) for v in flat) if objective is Objective.MAX_NORM else sum(abs(v) for v in flat)
    assert value <= reference_value
    tr = forward(apply_patch(toy, patch), HALF)
    assert tr.output[1] > tr.output[0]
    assert all(v > 0 for v in tr.pre(3))      # both x3, x4 stay active


def test_sign_zero_tagged_edges(sign):
    patch = modify_edge_layer(sign, [3, 4], parse_property("v[1] >= v[2]"), 2, PatchConfig())
    assert patch.deltas[0, 0] == 0 and patch.deltas[1, 0] == 0
    assert patch.deltas[0, 1] >= 0 and patch.deltas[1, 1] <= 0
    assert patch.bound == 1


def test_property_already_holds_gives_zero_patch(toy):
    patch = modify_edge_layer(toy, HALF, parse_property("o[1] > o[2]"), 2, PatchConfig())
    assert patch.bound == 0 and all(v == 0 for v in patch.deltas.ravel())
    first = find_first_layer_mod(toy, HALF, parse_property("o[1] > o[2]"), PatchConfig())
    assert all(p.bound == 0 for _, p in first.trail)


def test_infeasible_raises():
    # single ReLU-free edge from a zero input cannot change anything
    net = build_network([[[1]]], [[0]])
    with pytest.raises(PatchInfeasible):
        modify_edge_layer(net, [0], parse_property("o[1] > 1"), 1, PatchConfig())


def test_alpha_box_limits(sign):
    with pytest.raises(PatchInfeasible):
        modify_edge_layer(sign, [3, 4], parse_property("v[1] >= v[2]"), 2, PatchConfig(alpha=F(1, 2)))


def test_find_first_layer_mod_toy(toy):
    first = find_first_layer_mod(toy, HALF, O2_GT_O1, PatchConfig())
    assert [p for p, _ in first.trail] == [2, 1]
    net_mod = first.network
    for s in (2, 3):
        assert np.array_equal(net_mod.weight(s), toy.weight(s))
    assert not np.array_equal(net_mod.weight(1), toy.weight(1))
    assert O2_GT_O1.holds(forward(net_mod, HALF).output)
    # chain consistency: the middle patch's layer-3 values satisfy the derived property
    mid = forward(apply_patch(toy, first.trail[0][1]), HALF).layer(3)
    assert first.properties[1].holds(mid)
    assert first.properties[1].holds(forward(truncate(net_mod, 3), HALF).output)


def test_equality_mode_chain(toy):
    first = find_first_layer_mod(toy, HALF, O2_GT_O1, PatchConfig(relax_property=False))
    assert all(c.rel is Rel.EQ for c in first.properties[1].conjuncts)
    assert O2_GT_O1.holds(forward(first.network, HALF).output)


def test_single_edge_layer_net():
    net = build_network([[[1, 2], [3, -1]]], [[0, 0]])
    first = find_first_layer_mod(net, [1, 1], parse_property("o[2] > o[1]"), PatchConfig())
    assert len(first.trail) == 1 and first.trail[0][0] == 1


def test_float_mode_toy(toy):
    cfg = PatchConfig(arithmetic="float")
    first = find_first_layer_mod(toy, [0.5, 0.5], O2_GT_O1, cfg)
    out = forward(first.network, [0.5, 0.5]).output
    assert out[1] > out[0]


def test_config_validation():
    with pytest.raises(ValueError):
        PatchConfig(alpha=0)
    with pytest.raises(ValueError):
        PatchConfig(delta_max=-1)
    with pytest.raises(ValueError):
        PatchConfig(margin=0)
    with pytest.raises(ValueError):
        PatchConfig(input_bounds=(1, 0))
    cfg = PatchConfig(delta_max="11/24", alpha="3")
    assert cfg.delta_max == F(11, 24) and cfg.alpha == 3
    assert PatchConfig().gamma == F(1, 10000)
    assert PatchConfig(arithmetic="float").gamma == 1e-4


def test_phase_fixing_soundness_random():
    """Every patch returned keeps every downstream neuron in its original phase."""
    rng = np.random.default_rng(21)
    checked = 0
    for _ in range(40):
        net = random_rational_net(rng, int(rng.integers(3, 5)))
        x = random_rational_vector(rng, net.input_width)
        tr = forward(net, x)
        t, s = (int(v) for v in rng.choice(net.output_width, 2, replace=False))
        prop = parse_property(f"o[{t + 1}] > o[{s + 1}]")
        p = int(rng.integers(1, net.n_edge_layers + 1))
        try:
            patch = modify_edge_layer(net, x, prop, p, PatchConfig())
        except PatchInfeasible:
            continue
        checked += 1
        after = forward(apply_patch(net, patch), x)
        assert prop.holds(after.output)
        for layer in range(p + 1, net.depth):
            for a, b in zip(tr.pre(layer), after.pre(layer)):
                assert (a > 0 and b >= 0) or (a <= 0 and b <= 0)
        assert all(abs(v) <= 10 for v in patch.deltas.ravel())
    assert checked >= 10
