"""Single and batch attack runs producing reports and adversarial vector files."""
from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .attack import AdversarialResult, attack, attack_from_hidden, attack_untargeted, predicted_class
from .datasets import load_ingested, read_vector, write_vector
from .metrics import AttackRecord, AttackReport
from .network import Network, load_network
from .numeric import as_array, to_jsonable
from .patching import PatchConfig
from .properties import OutputProperty, PropertyError, Targeted, Untargeted, parse_property

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    network: str
    dataset: str | None = None
    input: str | None = None
    prop: str = "argmax != pred"
    patch: PatchConfig = field(default_factory=PatchConfig)
    samples: int | None = None
    seed: int = 0
    out: str = "out"
    jobs: int = 1
    hidden_target: str | None = None


def resolve_property(spec, width: int, x_label: int | None, pred: int):
    """Turn a parsed property spec into ``("prop", OutputProperty)`` or ``("untargeted", label)``."""
    def cls(value):
        if value == "label":
            if x_label is None:
                raise PropertyError("'label' used but the input has no dataset label")
            return int(x_label)
        if value == "pred":
            return pred
        if not 0 <= value < width:
            raise PropertyError(f"class {value + 1} outside 1..{width}")
        return value

    if isinstance(spec, Untargeted):
        return "untargeted", cls(spec.label)
    if isinstance(spec, Targeted):
        return "prop", spec.property(width, cls(spec.label))
    spec.check_width(width)
    return "prop", spec


def attack_one(net: Network, x, spec, cfg: PatchConfig, index: int = 0,
               true_label: int | None = None, hidden=None) -> tuple[AttackRecord, AdversarialResult]:
    x = as_array(x, cfg.arithmetic)
    net = net.to_mode(cfg.arithmetic)
    pred = predicted_class(net, x)
    kind, goal = resolve_property(spec, net.output_width, true_label, pred)
    if hidden is not None:
        if kind == "untargeted":
            raise PropertyError("a pinned hidden target needs an explicit output property")
        result = attack_from_hidden(net, x, goal, hidden, cfg)
    elif kind == "untargeted":
        result = attack_untargeted(net, x, goal, cfg)
    else:
        result = attack(net, x, goal, cfg)
    adv_label = predicted_class(net, result.adversarial_input) if result.success else None
    record = AttackRecord(
        index=index,
        original_label=pred,
        status=result.status.value,
        adversarial_label=adv_label,
        true_label=None if true_label is None else int(true_label),
        delta=list(result.deltas) if result.success else None,
        time_s=result.elapsed,
        message=result.message,
    )
    return record, result


_WORKER: dict = {}


def _init_worker(net, spec, cfg, hidden=None):
    _WORKER.update(net=net, spec=spec, cfg=cfg, hidden=hidden)


def _work(task):
    index, x, label = task
    record, result = attack_one(_WORKER["net"], x, _WORKER["spec"], _WORKER["cfg"], index, label,
                                _WORKER["hidden"])
    return record, (result.adversarial_input if result.success else None)


def select_indices(n: int, samples: int | None, seed: int) -> list[int]:
    if samples is None or samples >= n:
        return list(range(n))
    rng = np.random.default_rng(seed)
    return sorted(int(i) for i in rng.choice(n, size=samples, replace=False))


def load_tasks(run: RunConfig) -> list[tuple[int, np.ndarray, int | None]]:
    """``(index, vector, dataset label)`` for every input the run attacks."""
    if (run.dataset is None) == (run.input is None):
        raise ValueError("give exactly one of a dataset directory or a single input file")
    if run.input is not None:
        return [(0, read_vector(run.input, run.patch.arithmetic), None)]
    vectors, labels = load_ingested(run.dataset)
    return [(i, vectors[i], None if labels is None else int(labels[i]))
            for i in select_indices(len(vectors), run.samples, run.seed)]


def config_to_json(cfg: PatchConfig) -> dict:
    out = {}
    for key, value in asdict(cfg).items():
        if hasattr(value, "value"):
            value = value.value
        elif isinstance(value, tuple):
            value = [to_jsonable(v) for v in value]
        elif value is not None and not isinstance(value, (bool, str, int)):
            value = to_jsonable(value)
        out[key] = value
    return out


def run_batch(run: RunConfig) -> tuple[AttackReport, int]:
    """Run every selected input, write the report files, return (report, exit code)."""
    net = load_network(run.network, run.patch.arithmetic)
    spec = parse_property(run.prop, run.patch.arithmetic)
    if isinstance(spec, OutputProperty):
        spec.check_width(net.output_width)
    tasks = load_tasks(run)
    hidden = None
    if run.hidden_target is not None:
        hidden = as_array(run.hidden_target.replace(",", " ").split(), run.patch.arithmetic)
        if len(hidden) != net.widths[1]:
            raise ValueError(f"hidden target has {len(hidden)} values, first hidden layer has {net.widths[1]}")
    for _, x, _ in tasks:
        if len(x) != net.input_width:
            raise ValueError(f"input vectors have length {len(x)}, network expects {net.input_width}")

    if run.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=run.jobs, initializer=_init_worker,
                                 initargs=(net, spec, run.patch, hidden)) as pool:
            outcomes = list(pool.map(_work, tasks))
    else:
        _init_worker(net, spec, run.patch, hidden)
        outcomes = [_work(t) for t in tasks]

    meta = {
        "network": os.path.basename(run.network),
        "property": run.prop,
        "seed": run.seed,
        "samples": len(tasks),
        "config": config_to_json(run.patch),
    }
    if run.hidden_target is not None:
        meta["hidden_target"] = run.hidden_target
    report = AttackReport([rec for rec, _ in outcomes], net.output_width, meta)
    write_outputs(report, [adv for _, adv in outcomes], run.out)
    failures = sum(1 for r in report.records if not r.success)
    return report, (1 if failures else 0)


def write_outputs(report: AttackReport, adversarials, out_dir: str | os.PathLike) -> None:
    out = Path(out_dir)
    (out / "adversarial").mkdir(parents=True, exist_ok=True)
    report.write(out / "report.jsonl")
    for rec, adv in zip(report.records, adversarials):
        if adv is not None:
            write_vector(adv, out / "adversarial" / f"adv_{rec.index:05d}.txt")
    write_plot_data(report, out / "plot_data.csv")


def write_plot_data(report: AttackReport, path: str | os.PathLike) -> None:
    rows = report.plot_rows()
    cols = ["index", "status", "original_label", "adversarial_label", "l2", "linf",
            "pixels_modified", "time_s"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols)
        writer.writeheader()
        writer.writerows(rows)


def aggregate_json(report: AttackReport) -> str:
    return json.dumps(report.aggregate(), sort_keys=True)

