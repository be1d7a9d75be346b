"""JSON instance files.

Layout::

    {"format": "lagrecover-instance", "version": 1,
     "resource": [b_1, ..., b_m],
     "meta": {...},
     "subsystems": [
        {"kind": "lattice", "A": [[...]], "d": [...], "lower": [...], "upper": [...],
         "cost": [...], "H": ...},
        {"kind": "vertices", "points": [[...], ...], "cost": [...], "H": ...},
        {"kind": "pev", "power": P, "e_init": ..., "e_ref": ..., "e_min": ..., "e_max": ...,
         "zeta": ..., "n_steps": N, "dt": ..., "v2g": false,
         "delta_u": [...], "delta_v": [...], "cost": [...], "H": ...}]}

``H`` is the m x n_i block, either dense (list of rows) or sparse as
``{"shape": [m, n], "entries": [[row, col, value], ...]}``. Floats are
written with ``repr`` precision so files round-trip exactly.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import InvalidInstance
from .model import Instance, LatticePolytope, PevBattery, VertexList

FORMAT = "lagrecover-instance"
VERSION = 1
_PEV_SCALARS = ("power", "e_init", "e_ref", "e_min", "e_max", "zeta", "dt")


def _list(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def encode_block(H: np.ndarray, sparse: bool | None = None):
    H = np.asarray(H, dtype=float)
    if sparse is None:
        sparse = H.size > 64 and np.count_nonzero(H) < 0.5 * H.size
    if not sparse:
        return H.tolist()
    rows, cols = np.nonzero(H)
    return {"shape": list(H.shape), "entries": [[int(r), int(c), float(H[r, c])] for r, c in zip(rows, cols)]}


def decode_block(obj, m: int, n: int) -> np.ndarray:
    if isinstance(obj, dict):
        shape = tuple(obj.get("shape", (m, n)))
        H = np.zeros(shape)
        for r, c, v in obj.get("entries", []):
            H[int(r), int(c)] = float(v)
        return H
    H = np.array(obj, dtype=float)
    if H.ndim == 1 and m == 1:
        H = H.reshape(1, -1)
    if H.size == 0:
        H = H.reshape(m, n)
    return H


def subsystem_to_dict(sub, H) -> dict:
    if isinstance(sub, LatticePolytope):
        d = {"kind": "lattice", "A": _list(sub.A), "d": _list(sub.d),
             "lower": sub.lower.tolist(), "upper": sub.upper.tolist()}
    elif isinstance(sub, VertexList):
        d = {"kind": "vertices", "points": _list(sub.points_)}
    elif isinstance(sub, PevBattery):
        d = {"kind": "pev", **{k: getattr(sub, k) for k in _PEV_SCALARS},
             "n_steps": sub.n_steps, "v2g": sub.v2g,
             "delta_u": _list(sub.delta_u), "delta_v": _list(sub.delta_v)}
    else:
        raise InvalidInstance(f"cannot serialize {type(sub).__name__}")
    d["cost"] = _list(sub.cost)
    d["H"] = encode_block(H)
    return d


def subsystem_from_dict(d: dict):
    kind = d.get("kind")
    try:
        if kind == "lattice":
            n = len(d["cost"])
            A = d.get("A") or np.zeros((0, n))
            return LatticePolytope(A=A, d=d.get("d", []), lower=d["lower"], upper=d["upper"], cost=d["cost"])
        if kind == "vertices":
            return VertexList(points_=d["points"], cost=d["cost"])
        if kind == "pev":
            return PevBattery(**{k: d[k] for k in _PEV_SCALARS}, n_steps=d["n_steps"], v2g=d.get("v2g", False),
                              cost=d["cost"], delta_u=d.get("delta_u"), delta_v=d.get("delta_v"))
    except KeyError as exc:
        raise InvalidInstance(f"{kind} subsystem is missing field {exc}") from None
    raise InvalidInstance(f"unknown subsystem kind {kind!r}")


def instance_to_dict(inst: Instance) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "resource": _list(inst.resource),
        "meta": inst.meta,
        "subsystems": [subsystem_to_dict(s, H) for s, H in zip(inst.subsystems, inst.coupling)],
    }


def instance_from_dict(doc: dict) -> Instance:
    if not isinstance(doc, dict) or "resource" not in doc or "subsystems" not in doc:
        raise InvalidInstance("instance document needs 'resource' and 'subsystems'")
    resource = np.array(doc["resource"], dtype=float).reshape(-1)
    subs, blocks = [], []
    for i, d in enumerate(doc["subsystems"]):
        sub = subsystem_from_dict(d)
        if "H" not in d:
            raise InvalidInstance(f"subsystem {i} has no coupling block 'H'")
        subs.append(sub)
        blocks.append(decode_block(d["H"], len(resource), sub.dim))
    return Instance(subs, blocks, resource, dict(doc.get("meta", {})))


def dumps(inst: Instance, indent: int | None = None) -> str:
    return json.dumps(instance_to_dict(inst), indent=indent, allow_nan=False)


def save_instance(inst: Instance, path, indent: int | None = None) -> None:
    Path(path).write_text(dumps(inst, indent) + "\n")


def load_instance(path) -> Instance:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInstance(f"{path}: not valid JSON ({exc})") from None
    return instance_from_dict(doc)


def instance_digest(inst: Instance) -> str:
    """sha256 of the canonical JSON encoding."""
    doc = instance_to_dict(inst)
    doc.pop("meta")
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def instances_equal(a: Instance, b: Instance) -> bool:
    """Exact structural equality of two instances (meta included)."""
    return json.dumps(instance_to_dict(a), sort_keys=True) == json.dumps(instance_to_dict(b), sort_keys=True)
