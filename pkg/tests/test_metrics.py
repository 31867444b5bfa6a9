import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patchattack.metrics import (AttackRecord, AttackReport, defect_detection, l2, linf, pielou,
                                 pixels_modified)


def test_norms_on_toy_deltas():
    d = [F(-5, 12), F(-11, 24)]
    assert l2(d) == pytest.approx(math.sqrt(221 / 576))
    assert l2(d) == pytest.approx(0.61942, abs=1e-5)
    # |-11/24| = 11/24 is the larger entry
    assert linf(d) == F(11, 24)
    assert pixels_modified(d) == 2


def test_norms_trivial():
    assert (l2([0, 0, 0]), linf([0, 0, 0]), pixels_modified([0, 0, 0])) == (0, 0, 0)
    assert l2([0, 0.3, 0]) == pytest.approx(0.3)
    assert linf([0, 0.3, 0]) == 0.3
    assert pixels_modified([0, 0.3, 0]) == 1
    assert pixels_modified([1e-12, 0.3], tol=1e-9) == 1
    with pytest.raises(ValueError):
        pixels_modified([1], tol=-1)


def test_defect_detection():
    assert defect_detection(["success"] * 9140 + ["patch_infeasible"] * 860) == pytest.approx(91.4)
    assert defect_detection(["patch_infeasible"] * 3) == 0
    assert defect_detection([True] * 4) == 100
    assert defect_detection(["success"] * 7 + ["translation_infeasible"] * 3) == 70
    with pytest.raises(ValueError):
        defect_detection([])


def test_pielou_cases():
    uniform = [c for c in range(10) for _ in range(50)]
    assert pielou(uniform, 10) == 1.0
    assert pielou([3] * 20, 10) == 0.0
    expect = -(0.75 * math.log(0.75) + 0.25 * math.log(0.25)) / math.log(2)
    assert pielou([0] * 75 + [1] * 25, 2) == pytest.approx(expect, abs=1e-12)
    assert pielou([0] * 75 + [1] * 25, 2) == pytest.approx(0.8113, abs=1e-4)
    with pytest.raises(ValueError):
        pielou([], 3)
    with pytest.raises(ValueError):
        pielou([5], 3)
    with pytest.raises(ValueError):
        pielou([0], 1)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=60), st.integers(1, 4), st.permutations(range(6)))
def test_pielou_invariances(labels, scale, perm):
    base = pielou(labels, 6)
    assert 0.0 <= base <= 1.0
    assert pielou([perm[v] for v in labels], 6) == pytest.approx(base, abs=1e-12)
    assert pielou(labels * scale, 6) == pytest.approx(base, abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=30))
def test_norm_inequalities(v):
    n = len(v)
    assert pixels_modified(v) <= n
    a, b = linf(v), l2(v)
    assert a <= b * (1 + 1e-12) + 1e-300
    assert b <= math.sqrt(n) * a * (1 + 1e-12) + 1e-300


def _report():
    recs = [
        AttackRecord(0, 3, "success", 5, 3, [F(-5, 12), F(0), F(1, 3)], 0.5),
        AttackRecord(1, 1, "patch_infeasible", None, 1, None, 0.25, "edge-layer 1: LP infeasible"),
        AttackRecord(2, 2, "success", 7, 2, [0.0, 0.25], 0.125),
    ]
    return AttackReport(recs, 10, {"network": "n.net"})


def test_report_roundtrip(tmp_path):
    rep = _report()
    path = tmp_path / "report.jsonl"
    rep.write(path)
    back = AttackReport.read(path)
    assert back.n_classes == 10 and back.meta == {"network": "n.net"}
    assert back.records[0].delta == [F(-5, 12), 0, F(1, 3)]
    assert back.aggregate() == rep.aggregate()
    agg = rep.aggregate()
    assert agg["defect_detection"] == pytest.approx(200 / 3)
    assert agg["max_pixels_modified"] == 2
    assert agg["max_linf"] == "5/12"
    assert agg["fid"] == "not computed" and agg["transferability"] == "not computed"
    kinds = [line.split('"kind": ')[1].split('"')[1] for line in path.read_text().splitlines()]
    assert kinds == ["meta", "record", "record", "record", "aggregate", "timing"]


def test_aggregate_independent_of_timing():
    a, b = _report(), _report()
    b.records[0].time_s = 99.0
    assert a.aggregate() == b.aggregate()
    assert a.timing() != b.timing()


def test_plot_rows():
    rows = _report().plot_rows()
    assert rows[0]["pixels_modified"] == 2 and rows[1]["l2"] == ""


def test_norms_on_random_vectors():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        v = rng.normal(size=int(rng.integers(1, 50))).tolist()
        assert linf(v) <= l2(v) <= math.sqrt(len(v)) * linf(v) * (1 + 1e-12)
