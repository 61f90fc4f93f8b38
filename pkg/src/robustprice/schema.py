"""JSON documents for instances, mechanisms, and results.

The on-disk formats are deliberately small:

instance: {
    "grid": {"a": 0.0, "b": 1.0, "k": 100}        -- or {"points": [...]}
    "moments":   [{"order": 1, "value": 0.3}, ...]      (optional)
    "quantiles": [{"location": 0.5, "prob": 0.5}, ...]  (optional)
    "family": "mean", "family_params": [0.3]            (optional, informative)
}

mechanism: {
    "grid": {"points": [...]},     -- optional; defaults to the instance grid
    "weights": [...]
}

Result documents are written by the CLI and carry the full numeric
configuration so a run can be reproduced. Every float is serialized with 12
significant digits.
"""

from __future__ import annotations

import json

from . import lp
from .errors import InputError
from .instance import (
    Mechanism,
    MomentConstraint,
    QuantileConstraint,
    UncertaintySet,
    ValueGrid,
    make_grid,
)


def _fail(path: str, message: str):
    raise InputError(f"{path}: {message}")


def _require(doc: dict, field: str, types, path: str):
    if field not in doc:
        _fail(f"{path}.{field}", "missing required field")
    value = doc[field]
    if not isinstance(value, types):
        _fail(f"{path}.{field}", f"expected {types}, got {type(value).__name__}")
    return value


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {type(value).__name__}")
    return float(value)


def load_json(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{path}: top level must be a JSON object")
    return doc


def grid_from_doc(doc: dict, path: str = "grid") -> ValueGrid:
    if "points" in doc:
        pts = doc["points"]
        if not isinstance(pts, list) or not pts:
            _fail(f"{path}.points", "expected a nonempty list of numbers")
        return ValueGrid(tuple(_number(x, f"{path}.points[{i}]")
                               for i, x in enumerate(pts)))
    for field in ("a", "b", "k"):
        if field not in doc:
            _fail(path, "needs either points or all of a, b, k")
    k = doc["k"]
    if isinstance(k, bool) or not isinstance(k, int):
        _fail(f"{path}.k", f"expected an integer, got {type(k).__name__}")
    return make_grid(_number(doc["a"], f"{path}.a"),
                     _number(doc["b"], f"{path}.b"), k)


def instance_from_doc(doc: dict) -> UncertaintySet:
    grid = grid_from_doc(_require(doc, "grid", dict, "instance"), "instance.grid")
    moments = []
    for i, m in enumerate(doc.get("moments", [])):
        if not isinstance(m, dict):
            _fail(f"instance.moments[{i}]", "expected an object")
        order = m.get("order")
        if isinstance(order, bool) or not isinstance(order, int):
            _fail(f"instance.moments[{i}].order", "expected an integer")
        moments.append(MomentConstraint(
            order, _number(m.get("value"), f"instance.moments[{i}].value")))
    quantiles = []
    for j, q in enumerate(doc.get("quantiles", [])):
        if not isinstance(q, dict):
            _fail(f"instance.quantiles[{j}]", "expected an object")
        quantiles.append(QuantileConstraint(
            _number(q.get("location"), f"instance.quantiles[{j}].location"),
            _number(q.get("prob"), f"instance.quantiles[{j}].prob")))
    family = doc.get("family")
    if family is not None and not isinstance(family, str):
        _fail("instance.family", "expected a string")
    params = doc.get("family_params", [])
    if not isinstance(params, list):
        _fail("instance.family_params", "expected a list")
    return UncertaintySet(grid, tuple(moments), tuple(quantiles),
                          family=family,
                          family_params=tuple(_number(x, f"instance.family_params[{i}]")
                                              for i, x in enumerate(params)))


def load_instance(path) -> UncertaintySet:
    return instance_from_doc(load_json(path))


def mechanism_from_doc(doc: dict, default_grid: ValueGrid | None = None) -> Mechanism:
    if "grid" in doc and doc["grid"] is not None:
        grid = grid_from_doc(_require(doc, "grid", dict, "mechanism"),
                             "mechanism.grid")
    elif default_grid is not None:
        grid = default_grid
    else:
        _fail("mechanism.grid", "missing and no instance grid to fall back on")
    weights = _require(doc, "weights", list, "mechanism")
    return Mechanism(grid, tuple(_number(w, f"mechanism.weights[{i}]")
                                 for i, w in enumerate(weights)))


def load_mechanism(path, default_grid: ValueGrid | None = None) -> Mechanism:
    return mechanism_from_doc(load_json(path), default_grid)


# Writing --------------------------------------------------------------------

def _sig12(x: float) -> float:
    return float(f"{float(x):.12g}")


def round_floats(obj):
    """Recursively clip every float to 12 significant digits."""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return _sig12(obj)
    if isinstance(obj, dict):
        return {k: round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    return obj


def mechanism_doc(mech: Mechanism) -> dict:
    return {"grid": {"points": list(mech.grid.points)},
            "weights": list(mech.weights)}


def instance_doc(uset: UncertaintySet) -> dict:
    doc = {
        "grid": {"points": list(uset.grid.points)},
        "moments": [{"order": m.order, "value": m.value}
                    for m in uset.moments if m.order != 0],
        "quantiles": [{"location": q.location, "prob": q.prob}
                      for q in uset.quantiles],
    }
    if uset.family is not None:
        doc["family"] = uset.family
        doc["family_params"] = list(uset.family_params)
    return doc


def config_doc(k: int | None, eps: float) -> dict:
    doc = {"eps": eps, "feasibility_tol": lp.FEASIBILITY_TOL,
           "optimality_tol": lp.OPTIMALITY_TOL}
    if k is not None:
        doc["k"] = k
    return doc


def dump_result(doc: dict, path=None) -> str:
    """Serialize a result document; write it to path when given."""
    text = json.dumps(round_floats(doc), indent=2) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
