"""Natural-constraint matrices: prediction from a model, and the JSON file format.

File format (UTF-8 JSON)::

    {"types": ["number", "string", ...],
     "rows": {"<identifier>": [p_1, ..., p_T], ...}}
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import MatrixFormatError
from ..logic import IdentifierSet, TypeUniverse
from .model import LstmModel

ROW_TOLERANCE = 1e-6
FILE_ROW_TOLERANCE = 1e-3


def check_natural_matrix(m, tol: float = ROW_TOLERANCE) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise MatrixFormatError(f"natural matrix must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)) or np.any(m < 0) or np.any(m > 1):
        raise MatrixFormatError("natural matrix entries must lie in [0, 1]")
    bad = np.flatnonzero(np.abs(m.sum(axis=1) - 1.0) > tol)
    if bad.size:
        raise MatrixFormatError(f"rows {bad.tolist()} do not sum to 1")
    return m


def predict_matrix(model: LstmModel, names: IdentifierSet | Sequence[str], universe: TypeUniverse | None = None) -> np.ndarray:
    """One probability row per name.

    Names need not be distinct (two functions may both have a parameter ``x``).
    When `universe` is given, columns follow its order; universe types the model
    does not know get probability 0.
    """
    names = list(names.names) if isinstance(names, IdentifierSet) else list(names)
    if not names:
        raise ValueError("no identifiers to predict")
    probs = np.exp(model.forward_batch(names))
    probs /= probs.sum(axis=1, keepdims=True)
    if universe is None or tuple(universe.names) == model.types:
        return probs
    out = np.zeros((len(names), len(universe)))
    for j, ty in enumerate(universe.names):
        if ty in model.types:
            out[:, j] = probs[:, model.types.index(ty)]
    sums = out.sum(axis=1, keepdims=True)
    if np.any(sums == 0):
        raise MatrixFormatError("model and universe share no types")
    return out / sums


def matrix_to_json(m, ids: IdentifierSet, universe: TypeUniverse) -> dict:
    m = np.asarray(m, dtype=float)
    if m.shape != (len(ids), len(universe)):
        raise MatrixFormatError(f"matrix shape {m.shape} != ({len(ids)}, {len(universe)})")
    return {
        "types": list(universe.names),
        "rows": {name: [float(x) for x in m[v]] for v, name in enumerate(ids.names)},
    }


def save_matrix(m, ids: IdentifierSet, universe: TypeUniverse, path) -> None:
    Path(path).write_text(json.dumps(matrix_to_json(m, ids, universe), indent=1) + "\n", encoding="utf-8")


def matrix_from_json(doc, ids: IdentifierSet, universe: TypeUniverse, allow_missing: bool = False) -> np.ndarray:
    if not isinstance(doc, dict) or "types" not in doc or "rows" not in doc:
        raise MatrixFormatError("matrix file must be an object with 'types' and 'rows'")
    types = doc["types"]
    rows = doc["rows"]
    if not isinstance(types, list) or not isinstance(rows, dict):
        raise MatrixFormatError("'types' must be a list and 'rows' an object")
    unknown = [t for t in types if t not in universe.names]
    if unknown:
        raise MatrixFormatError(f"unknown type names {unknown}")
    if len(set(types)) != len(types):
        raise MatrixFormatError("duplicate type names")
    cols = [types.index(t) if t in types else None for t in universe.names]
    out = np.empty((len(ids), len(universe)))
    for v, name in enumerate(ids.names):
        if name not in rows:
            if not allow_missing:
                raise MatrixFormatError(f"no row for identifier {name!r}")
            out[v] = 1.0 / len(universe)
            continue
        row = rows[name]
        if not isinstance(row, list) or len(row) != len(types):
            raise MatrixFormatError(f"row for {name!r} must have {len(types)} entries")
        try:
            vals = np.array(row, dtype=float)
        except (TypeError, ValueError):
            raise MatrixFormatError(f"row for {name!r} is not numeric") from None
        if not np.all(np.isfinite(vals)) or np.any(vals < 0) or np.any(vals > 1):
            raise MatrixFormatError(f"row for {name!r} has entries outside [0, 1]")
        if abs(vals.sum() - 1.0) > FILE_ROW_TOLERANCE:
            raise MatrixFormatError(f"row for {name!r} sums to {vals.sum():.6g}, not 1")
        out[v] = [vals[c] if c is not None else 0.0 for c in cols]
    # rows accepted at the looser file tolerance are renormalised; exact rows keep their bits
    sums = out.sum(axis=1, keepdims=True)
    loose = np.abs(sums - 1.0) > ROW_TOLERANCE
    return np.where(loose, out / sums, out)


def load_matrix(path, ids: IdentifierSet, universe: TypeUniverse, allow_missing: bool = False) -> np.ndarray:
    """Load a matrix file aligned to `ids` and `universe` (columns reordered by name)."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MatrixFormatError(f"{path}: invalid JSON ({exc})") from None
    return matrix_from_json(doc, ids, universe, allow_missing)
