"""Acceptance criteria 1-7.  Each test prints one PASS/FAIL line with its runtime; the lines are
also repeated in the terminal summary by ``conftest.pytest_terminal_summary``."""
import math
import time
from contextlib import contextmanager
from fractions import Fraction as F

import numpy as np
import pytest

from patchattack.attack import attack, attack_from_hidden
from patchattack.datasets import ingest, read_vector
from patchattack.harness import RunConfig, run_batch
from patchattack.lp import solve_milp, solve_simplex
from patchattack.marking import Sign, Tag, edge_signs, edges_source_major, mark_outputs, propagate_marking
from patchattack.metrics import AttackReport, defect_detection, l2, linf, pielou
from patchattack.network import forward, load_network
from patchattack.patching import PatchConfig, Sparsity
from patchattack.properties import parse_property

from .conftest import toy_net, sign_net, random_rational_net, random_rational_vector
from .oracles import binary_enum_optimum, random_lp, vertex_optimum
from .test_lp import pixel_milp

RESULTS: list[str] = []


@contextmanager
def criterion(number: int, title: str, budget_s: float):
    start = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        within = elapsed < budget_s
        verdict = "PASS" if ok and within else "FAIL"
        why = "" if ok else " (assertion failed)"
        if ok and not within:
            why = f" (over the {budget_s:g} s budget)"
        line = f"criterion {number} {title}: {verdict} in {elapsed:.2f} s{why}"
        RESULTS.append(line)
        print(line)
    assert within, line


def test_criterion_1_toy_exactness():
    with criterion(1, "toy-example exactness", 1.0):
        net = toy_net()
        x = [F(1, 2), F(1, 2)]
        prop = parse_property("o[2] > o[1]")
        cfg = PatchConfig(sparsity=Sparsity.DENSE, relax_property=False, relax_inactive=False)
        res = attack(net, x, prop, cfg)
        assert res.success
        assert prop.holds(forward(net, res.adversarial_input).output)
        pinned = attack_from_hidden(net, x, prop, [F(1, 8), 0], cfg)
        assert pinned.success
        assert list(pinned.deltas) == [F(-5, 12), F(-11, 24)]
        assert list(pinned.adversarial_input) == [F(1, 12), F(1, 24)]
        assert list(forward(net, pinned.adversarial_input).output) == [F(-1, 2), F(-3, 8)]


def test_criterion_2_sign_simplification():
    with criterion(2, "sign simplification", 1.0):
        net = sign_net()
        tags = propagate_marking(net, mark_outputs(parse_property("v[1] >= v[2]"), 2))
        assert tags[2] == [Tag.INCREMENT, Tag.DECREMENT]
        assert tags[1] == [Tag.INCREMENT, Tag.DECREMENT]
        hidden = forward(net, [3, 4]).layer(2)
        signs = edges_source_major(edge_signs(hidden, tags[2]))
        assert signs == [Sign.ZERO, Sign.ZERO, Sign.NONNEGATIVE, Sign.NONPOSITIVE]


def test_criterion_3_end_to_end_soundness():
    with criterion(3, "end-to-end soundness", 120.0):
        rng = np.random.default_rng(2024)
        delta_max = F(1, 2)
        cfg = PatchConfig(delta_max=delta_max)
        successes = violations = 0
        for _ in range(200):
            net = random_rational_net(rng, int(rng.integers(2, 6)))
            x = random_rational_vector(rng, net.input_width)
            out = forward(net, x).output
            pred = max(range(len(out)), key=lambda i: (out[i], -i))
            target = int(rng.choice([i for i in range(len(out)) if i != pred]))
            prop = parse_property(f"o[{target + 1}] > o[{pred + 1}]")
            res = attack(net, x, prop, cfg)
            if not res.success:
                continue
            successes += 1
            x_adv = [a + d for a, d in zip(x, res.deltas)]
            if not (prop.holds(forward(net, x_adv).output) and max(abs(d) for d in res.deltas) <= delta_max):
                violations += 1
        print(f"  {successes} successes out of 200, {violations} violations")
        assert successes > 0
        assert violations == 0


def test_criterion_4_solver_oracles():
    with criterion(4, "solver oracle equivalence", 60.0):
        rng = np.random.default_rng(4)
        for _ in range(100):
            lp = random_lp(rng, n_vars=int(rng.integers(1, 5)), n_cons=int(rng.integers(0, 7)))
            sol = solve_simplex(lp)
            status, value = vertex_optimum(lp)
            assert sol.status.value == status
            if sol.ok:
                assert sol.objective == value
        for _ in range(50):
            lp = random_lp(rng, n_vars=int(rng.integers(1, 3)), n_cons=int(rng.integers(1, 4)),
                           binaries=int(rng.integers(1, 11)))
            sol = solve_milp(lp)
            status, value = binary_enum_optimum(lp)
            assert sol.status.value == status
            if sol.ok:
                assert sol.objective == value


def test_criterion_5_sparsity():
    with criterion(5, "sparsity behavior", 60.0):
        rng = np.random.default_rng(5)
        compared = tried = 0
        while compared < 20:
            tried += 1
            assert tried < 400, "too few instances where Dense succeeds"
            net = random_rational_net(rng, 3, widths=[int(rng.integers(3, 6)), 3, 2])
            x = random_rational_vector(rng, net.input_width)
            out = forward(net, x).output
            label = int(out[1] > out[0])
            prop = parse_property(f"o[{2 - label}] > o[{label + 1}]")
            dense = attack(net, x, prop, PatchConfig(sparsity="dense", delta_max=1))
            if not dense.success:
                continue
            sparse = attack(net, x, prop, PatchConfig(sparsity="pixels", delta_max=1))
            assert sparse.success
            assert sum(d != 0 for d in sparse.deltas) <= sum(d != 0 for d in dense.deltas)
            compared += 1
        sol = solve_milp(pixel_milp())
        assert sol.ok and sol.objective == 2
        assert binary_enum_optimum(pixel_milp()) == ("optimal", 2)
        feasible = [p for p in ((0, 0), (0, 1), (1, 0), (1, 1))
                    if vertex_optimum(pixel_milp(), {2: F(p[0]), 3: F(p[1])})[0] == "optimal"]
        assert feasible == [(1, 1)]


def test_criterion_6_image_run(tmp_path, fixtures_dir):
    with criterion(6, "desk-scale image run", 600.0):
        ds = tmp_path / "digits"
        ingest(fixtures_dir / "digits-test-images-idx3-ubyte", "idx", ds,
               fixtures_dir / "digits-test-labels-idx1-ubyte")
        # sum-abs: the max-norm first-layer LP is highly degenerate at this size and takes
        # several seconds per solve, which does not fit 100 images in the budget
        cfg = PatchConfig(arithmetic="float", delta_max=0.8, input_bounds=(0, 1), objective="sumabs",
                          ignore_unmentioned=True, time_limit=2.0)
        run = RunConfig(network=str(fixtures_dir / "digits_784_16_16_10.net"), dataset=str(ds),
                        prop="argmax != pred", patch=cfg, samples=100, seed=0, out=str(tmp_path / "out"))
        report, _ = run_batch(run)
        back = AttackReport.read(tmp_path / "out" / "report.jsonl")
        assert len(back.records) == 100
        assert back.aggregate() == report.aggregate()
        net = load_network(fixtures_dir / "digits_784_16_16_10.net", "float")
        vectors = np.load(ds / "vectors.npy")
        wins = [r for r in back.records if r.success]
        for rec in wins:
            adv = np.asarray(read_vector(tmp_path / "out" / "adversarial" / f"adv_{rec.index:05d}.txt",
                                         "float"), dtype=float)
            x = vectors[rec.index]
            assert np.max(np.abs(adv - x)) <= 0.8 + 1e-9
            assert adv.min() >= -1e-9 and adv.max() <= 1 + 1e-9
            out = forward(net, adv).output
            assert int(np.argmax(out)) != rec.original_label
            assert int(np.argmax(out)) == rec.adversarial_label
            assert 0 < sum(1 for v in rec.delta if abs(v) > 1e-9) < 784
        rate = report.aggregate()["defect_detection"]
        print(f"  defect detection {rate:.1f}%, max pixels {report.aggregate()['max_pixels_modified']}")
        assert rate > 0


def test_criterion_7_metrics():
    with criterion(7, "metrics unit suite", 5.0):
        assert pielou([c for c in range(10) for _ in range(7)], 10) == 1.0
        assert pielou([4] * 30, 10) == 0.0
        assert defect_detection(["success"] * 9140 + ["failure"] * 860) == pytest.approx(91.4, abs=1e-12)
        rng = np.random.default_rng(7)
        for _ in range(1000):
            v = rng.normal(size=int(rng.integers(1, 100))).tolist()
            a, b = linf(v), l2(v)
            assert a <= b * (1 + 1e-12)
            assert b <= math.sqrt(len(v)) * a * (1 + 1e-12)
