"""`lorcomp-report v1`: deterministic JSON reports and margin CSVs.

Key order is fixed by construction and the volatile ``runtime`` section is
always last, so two runs with the same configuration can be compared
byte-wise after :func:`strip_runtime`.
"""

from __future__ import annotations

import csv
import io
import json
import math
from enum import Enum
from pathlib import Path

import numpy as np

FORMAT = "lorcomp-report v1"


def clean(obj):
    """JSON-safe copy: non-finite floats become strings, numpy scalars become Python."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    return obj


def build(report, *, config: dict | None = None, source: dict | None = None) -> dict:
    """Assemble the report document from a VerificationReport."""
    violations = report.violations()
    doc = {
        "format": FORMAT,
        "config": config if config is not None else {"campaign": report.campaign.to_dict()},
        "source": source or {},
        "space": report.space,
        "axioms": report.axioms,
        "verdicts": [r.to_dict() for r in report.results],
        "diameter": report.diameter,
        "perimeter": report.perimeter,
        "nondegeneracy": report.nondegeneracy,
        "nondegeneracy_lemma": report.nondegeneracy_lemma,
        "local": report.local,
        "summary": {
            "passed": not violations,
            "violations": violations,
            "statement": "no violation found in the sample" if not violations else "violation found",
        },
        "runtime": report.runtime,
    }
    return clean(doc)


def dumps(doc: dict) -> str:
    body = {k: v for k, v in doc.items() if k != "runtime"}
    if "runtime" in doc:
        body["runtime"] = doc["runtime"]
    return json.dumps(body, indent=2, allow_nan=False) + "\n"


def strip_runtime(text: str) -> str:
    """Report text without the trailing runtime section."""
    doc = json.loads(text)
    doc.pop("runtime", None)
    return json.dumps(doc, indent=2) + "\n"


def write(doc: dict, path) -> None:
    Path(path).write_text(dumps(doc))


def margins_csv(report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["K", "direction", "formulation", "item", "role", "margin", "passed"])
    for r in report.results:
        for item in r.items:
            if len(item) == 3:
                label, margin, ok = item
                role = ""
            else:
                label, role, margin, ok = item
            label = " ".join(str(v) for v in label) if isinstance(label, (list, tuple)) else str(label)
            w.writerow([repr(r.K), r.direction, r.formulation, label, role, "" if margin is None else repr(float(margin)), int(ok)])
    return buf.getvalue()


def polylines_csv(curves: dict) -> str:
    """``curve,index,t,x`` rows for named 2-D polylines."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["curve", "index", "t", "x"])
    for name, pts in curves.items():
        for k, (t, x) in enumerate(np.asarray(pts, dtype=float).reshape(-1, 2)):
            w.writerow([name, k, repr(float(t)), repr(float(x))])
    return buf.getvalue()
