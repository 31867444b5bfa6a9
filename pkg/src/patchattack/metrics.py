"""Distance metrics and report-level aggregates over attack results."""
from __future__ import annotations

import json
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .numeric import Number, parse_number, to_jsonable

NOT_COMPUTED = "not computed"


def l2(delta: Sequence[Number]) -> float:
    if _exact(delta):
        return math.sqrt(sum((v * v for v in delta), Fraction(0)))
    # hypot scales internally, so tiny or huge entries neither underflow nor overflow
    return math.hypot(*(float(v) for v in delta))


def linf(delta: Sequence[Number]) -> Number:
    return max((abs(v) for v in delta), default=0)


def pixels_modified(delta: Sequence[Number], tol: Number | None = None) -> int:
    """Number of entries with ``|delta_p| > tol`` (default 0 for exact values, 1e-9 otherwise)."""
    if tol is None:
        tol = 0 if _exact(delta) else 1e-9
    if tol < 0:
        raise ValueError("tol must be non-negative")
    return sum(1 for v in delta if abs(v) > tol)


def _exact(delta) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in delta)


def defect_detection(statuses: Iterable[str | bool]) -> float:
    """Percentage of successful attacks among all attempted inputs."""
    items = list(statuses)
    if not items:
        raise ValueError("defect detection is undefined for an empty result set")
    wins = sum(1 for s in items if s is True or s == "success")
    return 100 * wins / len(items)


def pielou(labels: Iterable[int], n_classes: int) -> float:
    """Evenness of the class distribution: Shannon entropy over ``ln(n_classes)``."""
    if n_classes < 2:
        raise ValueError("need at least two classes")
    counts = Counter(labels)
    if not counts:
        raise ValueError("pielou score is undefined for an empty label set")
    for label in counts:
        if not 0 <= label < n_classes:
            raise ValueError(f"label {label} outside 0..{n_classes - 1}")
    freqs = list(counts.values())
    if len(set(freqs)) == 1:
        # m equally frequent classes: entropy is exactly ln(m)
        entropy = math.log(len(freqs))
    else:
        total = sum(freqs)
        entropy = math.log(total) - math.fsum(f * math.log(f) for f in freqs) / total
    return min(1.0, max(0.0, entropy / math.log(n_classes)))


@dataclass
class AttackRecord:
    index: int
    original_label: int
    status: str
    adversarial_label: int | None = None
    true_label: int | None = None
    delta: list[Number] | None = None
    time_s: float = 0.0
    message: str = ""

    @property
    def success(self) -> bool:
        return self.status == "success"

    def to_json(self) -> dict:
        doc = {
            "kind": "record",
            "index": self.index,
            "true_label": self.true_label,
            "original_label": self.original_label,
            "adversarial_label": self.adversarial_label,
            "status": self.status,
        }
        if self.delta is not None:
            doc["l2"] = l2(self.delta)
            doc["linf"] = to_jsonable(linf(self.delta))
            doc["pixels_modified"] = pixels_modified(self.delta)
            doc["delta"] = [to_jsonable(v) for v in self.delta]
        doc["time_s"] = round(self.time_s, 6)
        doc["message"] = self.message
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "AttackRecord":
        delta = doc.get("delta")
        if delta is not None:
            delta = [parse_number(v) if isinstance(v, str) else v for v in delta]
        return cls(doc["index"], doc["original_label"], doc["status"], doc.get("adversarial_label"),
                   doc.get("true_label"), delta, doc.get("time_s", 0.0), doc.get("message", ""))


@dataclass
class AttackReport:
    records: list[AttackRecord]
    n_classes: int
    meta: dict = field(default_factory=dict)

    def aggregate(self) -> dict:
        wins = [r for r in self.records if r.success]
        deltas = [r.delta for r in wins if r.delta is not None]
        labels = [r.adversarial_label for r in wins if r.adversarial_label is not None]
        return {
            "kind": "aggregate",
            "n_records": len(self.records),
            "n_success": len(wins),
            "defect_detection": defect_detection(r.status for r in self.records) if self.records else None,
            "pielou": pielou(labels, self.n_classes) if labels else None,
            "max_l2": max((l2(d) for d in deltas), default=None),
            "max_linf": to_jsonable(max((linf(d) for d in deltas))) if deltas else None,
            "max_pixels_modified": max((pixels_modified(d) for d in deltas), default=None),
            "fid": NOT_COMPUTED,
            "transferability": NOT_COMPUTED,
        }

    def timing(self) -> dict:
        times = [r.time_s for r in self.records]
        return {"kind": "timing",
                "mean_time_s": round(sum(times) / len(times), 6) if times else None,
                "total_time_s": round(sum(times), 6)}

    def lines(self) -> list[str]:
        head = {"kind": "meta", "n_classes": self.n_classes, **self.meta}
        out = [json.dumps(head, sort_keys=True)]
        out += [json.dumps(r.to_json(), sort_keys=True) for r in self.records]
        out.append(json.dumps(self.aggregate(), sort_keys=True))
        out.append(json.dumps(self.timing(), sort_keys=True))
        return out

    def write(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self.lines()) + "\n")

    @classmethod
    def read(cls, path: str | os.PathLike) -> "AttackReport":
        records, n_classes, meta = [], None, {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                doc = json.loads(line)
                kind = doc.get("kind")
                if kind == "meta":
                    n_classes = doc.pop("n_classes")
                    doc.pop("kind")
                    meta = doc
                elif kind == "record":
                    records.append(AttackRecord.from_json(doc))
        if n_classes is None:
            raise ValueError(f"{path}: missing meta line")
        return cls(records, n_classes, meta)

    def plot_rows(self) -> list[dict]:
        """One row per record with the per-image metric columns."""
        rows = []
        for r in self.records:
            d = r.delta if r.success else None
            rows.append({
                "index": r.index,
                "status": r.status,
                "original_label": r.original_label,
                "adversarial_label": "" if r.adversarial_label is None else r.adversarial_label,
                "l2": "" if d is None else repr(l2(d)),
                "linf": "" if d is None else repr(float(linf(d))),
                "pixels_modified": "" if d is None else pixels_modified(d),
                "time_s": r.time_s,
            })
        return rows
