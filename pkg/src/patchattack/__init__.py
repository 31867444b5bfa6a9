"""Sparse adversarial inputs for ReLU networks via minimal weight patches.

A violated output property is first repaired by patching a single edge-layer,
the patch is pushed back to the first edge-layer by bisection, and the
first-layer patch is then translated into an input perturbation.
"""
from .attack import (AdversarialResult, AttackStatus, attack, attack_from_hidden, attack_untargeted, mod2adv,
                     predicted_class, translate_hidden)
from .marking import Sign, Tag, edge_signs, epsilon_sign, mark_outputs, propagate_marking, propagate_tags
from .metrics import AttackRecord, AttackReport, defect_detection, l2, linf, pielou, pixels_modified
from .network import (Activation, LayerTrace, Network, Patch, apply_patch, build_network, forward,
                      load_network, save_network, truncate)
from .numeric import Arithmetic
from .patching import (Objective, PatchConfig, PatchInfeasible, Sparsity, find_first_layer_mod,
                       modify_edge_layer)
from .properties import Conjunct, OutputProperty, Rel, parse_property

__version__ = "0.1.0"

__all__ = [
    "Activation", "AdversarialResult", "Arithmetic", "AttackRecord", "AttackReport", "AttackStatus",
    "Conjunct", "LayerTrace", "Network", "Objective", "OutputProperty", "Patch", "PatchConfig",
    "PatchInfeasible", "Rel", "Sign", "Sparsity", "Tag", "apply_patch", "attack", "attack_from_hidden", "attack_untargeted",
    "build_network", "defect_detection", "edge_signs", "epsilon_sign", "find_first_layer_mod", "forward",
    "l2", "linf", "load_network", "mark_outputs", "mod2adv", "modify_edge_layer", "parse_property",
    "pielou", "pixels_modified", "predicted_class", "propagate_marking", "propagate_tags",
    "save_network", "translate_hidden", "truncate",
]
