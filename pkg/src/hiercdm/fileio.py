"""File formats: headerless CSV matrices and small JSON documents.

Q-matrix CSV: J lines of K comma-separated 0/1 values.
Response CSV: N lines of J comma-separated 0/1 values.
Profile CSV:  one profile per line, K bits each.
Hierarchy JSON: ``{"K": int, "edges": [[k, l], ...]}`` with 1-based
attribute indices, the prerequisite first.
Parameter JSON: ``{"model": "dina"|"dino", "slip": [...], "guess": [...]}``
or ``{"model": "gdina", "items": [{"required": [k, ...],
"theta": {"bits": value, ...}}]}`` with 1-based attributes and pattern
bits keyed over the required attributes in ascending order.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .em import CdmFit
from .errors import ColumnCountMismatch, ParseError
from .models import DinaParams, GdinaParams, ProportionVector
from .qmatrix import Hierarchy, ProfileSet, QMatrix


def _read_binary_csv(path, expected_cols: int | None = None) -> np.ndarray:
    path = Path(path)
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            row = []
            for colno, cell in enumerate(cells, start=1):
                cell = cell.strip()
                if cell not in ("0", "1"):
                    raise ParseError(
                        str(path), lineno, colno, f"expected 0 or 1, got {cell!r}"
                    )
                row.append(int(cell))
            if rows and len(row) != len(rows[0]):
                raise ParseError(
                    str(path), lineno, 1,
                    f"expected {len(rows[0])} columns, got {len(row)}",
                )
            rows.append(row)
    if not rows:
        raise ParseError(str(path), 1, 1, "file is empty")
    arr = np.asarray(rows, dtype=np.int8)
    if expected_cols is not None and arr.shape[1] != expected_cols:
        raise ColumnCountMismatch(
            f"{path}: has {arr.shape[1]} columns, expected {expected_cols}"
        )
    return arr


def read_q_csv(path) -> QMatrix:
    return QMatrix(_read_binary_csv(path))


def write_q_csv(path, q: QMatrix):
    _write_int_csv(path, q.entries)


def read_responses_csv(path, J: int | None = None) -> np.ndarray:
    return _read_binary_csv(path, expected_cols=J)


def write_responses_csv(path, data):
    _write_int_csv(path, np.asarray(data, dtype=np.int8))


def write_profiles_csv(path, profiles: ProfileSet):
    _write_int_csv(path, profiles.profiles)


def _write_int_csv(path, arr):
    with open(path, "w", encoding="utf-8") as fh:
        for row in arr:
            fh.write(",".join(str(int(v)) for v in row) + "\n")


def read_hierarchy_json(path) -> Hierarchy:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(str(path), exc.lineno, exc.colno, exc.msg) from exc
    if not isinstance(raw, dict) or "K" not in raw:
        raise ParseError(str(path), 1, 1, 'expected an object with "K" and "edges"')
    edges = raw.get("edges", [])
    return Hierarchy(int(raw["K"]), [(int(k), int(l)) for k, l in edges])


def write_hierarchy_json(path, h: Hierarchy):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"K": h.K, "edges": [list(e) for e in h.sorted_edges()]}, fh)
        fh.write("\n")


def params_to_dict(model: str, params) -> dict:
    if isinstance(params, DinaParams):
        return {
            "model": model,
            "slip": [float(s) for s in params.slip],
            "guess": [float(g) for g in params.guess],
        }
    if isinstance(params, GdinaParams):
        items = []
        for attrs, table in zip(params.required, params.tables):
            m = len(attrs)
            theta = {
                format(code, f"0{m}b"): float(table[code])
                for code in range(2**m)
            }
            items.append({"required": [a + 1 for a in attrs], "theta": theta})
        return {"model": model, "items": items}
    raise TypeError(f"unsupported parameter object {type(params)!r}")


def params_from_dict(raw: dict):
    model = raw["model"].lower()
    if model in ("dina", "dino"):
        return model, DinaParams(np.asarray(raw["slip"]), np.asarray(raw["guess"]))
    if model == "gdina":
        required = []
        tables = []
        for item in raw["items"]:
            attrs = tuple(int(a) - 1 for a in item["required"])
            m = len(attrs)
            table = np.empty(2**m)
            for bits, value in item["theta"].items():
                table[int(bits, 2)] = float(value)
            required.append(attrs)
            tables.append(table)
        return model, GdinaParams(tuple(required), tuple(tables))
    raise ValueError(f"unknown model kind {model!r}")


def fit_to_dict(fit: CdmFit) -> dict:
    return {
        "model": fit.model,
        "loglik": fit.loglik,
        "iters": fit.iters,
        "converged": fit.converged,
        "n_free_params": fit.n_free_params,
        "start_index": fit.start_index,
        "flipped_items": list(fit.flipped_items),
        "support": [list(map(int, row)) for row in fit.p.support.profiles],
        "proportions": [float(x) for x in fit.p.probs],
        "params": params_to_dict(fit.model, fit.params),
    }


def proportions_from_fit_dict(raw: dict) -> ProportionVector:
    support = ProfileSet(np.asarray(raw["support"], dtype=np.int8))
    return ProportionVector(support, np.asarray(raw["proportions"]))
