"""JSON documents for algebras, quantum groupoids, coactions and fusion data.

Every document carries ``"schema": "wha/1"`` and a ``"kind"``.  Complex
numbers are written as ``[re, im]`` pairs and arrays as row-major nested
lists, so a saved file reloads to exactly the same floats and saving again
reproduces it byte for byte.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .algebra import FiniteCStarAlgebra
from .builtins import BUILTINS
from .coaction import BUILTIN_COACTIONS, Coaction
from .hayashi import BUILTIN_FUSION, FusionData
from .weakhopf import WeakHopf

SCHEMA = "wha/1"


class SchemaError(ValueError):
    pass


# -- arrays ------------------------------------------------------------------


def encode_complex(a) -> list:
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], -1).tolist()


def decode_complex(x, shape=None) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1:] != (2,):
        raise SchemaError("complex arrays must end in [re, im] pairs")
    out = arr[..., 0] + 1j * arr[..., 1]
    if shape is not None and out.shape != tuple(shape):
        raise SchemaError(f"expected shape {tuple(shape)}, got {out.shape}")
    return out


def _check(doc: dict, kind: str | None = None) -> None:
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA:
        raise SchemaError(f"not a {SCHEMA} document")
    if kind is not None and doc.get("kind") != kind:
        raise SchemaError(f"expected kind {kind!r}, got {doc.get('kind')!r}")


# -- algebra ----------------------------------------------------------------------


def _algebra_fields(A: FiniteCStarAlgebra) -> dict:
    return {"dim": A.dim, "basis_labels": list(A.basis_labels), "mult": encode_complex(A.mult),
            "unit": encode_complex(A.unit), "star": encode_complex(A.star)}


def _algebra_from(doc: dict) -> FiniteCStarAlgebra:
    n = int(doc["dim"])
    return FiniteCStarAlgebra(decode_complex(doc["mult"], (n, n, n)), decode_complex(doc["unit"], (n,)),
                              decode_complex(doc["star"], (n, n)), list(doc["basis_labels"]))


def algebra_to_dict(A: FiniteCStarAlgebra) -> dict:
    return {"schema": SCHEMA, "kind": "algebra", **_algebra_fields(A)}


def algebra_from_dict(doc: dict) -> FiniteCStarAlgebra:
    _check(doc, "algebra")
    return _algebra_from(doc)


def weakhopf_to_dict(G: WeakHopf) -> dict:
    return {"schema": SCHEMA, "kind": "weakhopf", "name": G.name, **_algebra_fields(G.algebra),
            "comult": encode_complex(G.comult), "counit": encode_complex(G.counit),
            "antipode": encode_complex(G.antipode)}


def weakhopf_from_dict(doc: dict) -> WeakHopf:
    _check(doc, "weakhopf")
    A = _algebra_from(doc)
    n = A.dim
    return WeakHopf(A, decode_complex(doc["comult"], (n * n, n)),
                    decode_complex(doc["counit"], (n,)), decode_complex(doc["antipode"], (n, n)),
                    doc.get("name", ""))


# -- coaction ---------------------------------------------------------------------


def coaction_to_dict(C: Coaction, groupoid_ref: str | None = None) -> dict:
    """``groupoid_ref`` (``"builtin:fp2"`` or a path) replaces the embedded groupoid."""
    return {"schema": SCHEMA, "kind": "coaction", "name": C.name,
            "algebra": algebra_to_dict(C.algebra),
            "groupoid": groupoid_ref if groupoid_ref is not None else weakhopf_to_dict(C.parent),
            "amap": encode_complex(C.amap)}


def coaction_from_dict(doc: dict, base: Path | None = None) -> Coaction:
    _check(doc, "coaction")
    A = algebra_from_dict(doc["algebra"])
    g = doc["groupoid"]
    if isinstance(g, str):
        G = resolve_weakhopf(g) if g.startswith("builtin:") else weakhopf_from_dict(
            json.loads(((base or Path(".")) / g).read_text()))
    else:
        G = weakhopf_from_dict(g)
    m, n = A.dim, G.dim
    return Coaction(A, G, decode_complex(doc["amap"], (m * n, m)), doc.get("name", ""))


# -- fusion data ----------------------------------------------------------------


def fusion_to_dict(Fd: FusionData) -> dict:
    lab = Fd.labels
    F = {",".join(lab[i] for i in k): encode_complex(v) for k, v in sorted(Fd.F.items())}
    return {"schema": SCHEMA, "kind": "fusion", "name": Fd.name, "labels": list(lab),
            "unit": lab[Fd.unit], "dual_map": {lab[x]: lab[y] for x, y in enumerate(Fd.dual_map)},
            "N": Fd.N.tolist(), "F": F, "ev": encode_complex(Fd.ev), "coev": encode_complex(Fd.coev),
            "unit_constraints": encode_complex(Fd.unit_constraints)}


def fusion_from_dict(doc: dict) -> FusionData:
    _check(doc, "fusion")
    labels = list(doc["labels"])
    idx = {l: i for i, l in enumerate(labels)}
    n = len(labels)
    try:
        F = {}
        for key, blk in doc["F"].items():
            k = tuple(idx[s] for s in key.split(","))
            if len(k) != 4:
                raise SchemaError(f"F-symbol key {key!r} is not a label 4-tuple")
            F[k] = decode_complex(blk) if len(blk) and len(blk[0]) else np.zeros((len(blk), 0), complex)
        dual = [idx[doc["dual_map"][l]] for l in labels]
        unit = idx[doc["unit"]]
    except KeyError as e:
        raise SchemaError(f"unknown label {e}") from None
    N = np.asarray(doc["N"], dtype=int)
    if N.shape != (n, n, n):
        raise SchemaError("N must be |labels|^3")
    return FusionData(labels, unit, dual, N, F, decode_complex(doc["coev"], (n,)), decode_complex(doc["ev"], (n,)),
                      decode_complex(doc["unit_constraints"], (n,)), doc.get("name", ""))


# -- files --------------------------------------------------------------------

_TO = {FiniteCStarAlgebra: algebra_to_dict, WeakHopf: weakhopf_to_dict, Coaction: coaction_to_dict,
       FusionData: fusion_to_dict}
_FROM = {"algebra": algebra_from_dict, "weakhopf": weakhopf_from_dict, "coaction": coaction_from_dict,
         "fusion": fusion_from_dict}


def to_dict(obj) -> dict:
    for cls, f in _TO.items():
        if isinstance(obj, cls):
            return f(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def from_dict(doc: dict, base: Path | None = None):
    """``base`` is the directory against which a coaction's groupoid path is resolved."""
    _check(doc)
    try:
        if doc["kind"] == "coaction":
            return coaction_from_dict(doc, base)
        return _FROM[doc["kind"]](doc)
    except KeyError as e:
        raise SchemaError(f"missing or unknown field {e}") from None


def dumps(obj) -> str:
    doc = obj if isinstance(obj, dict) else to_dict(obj)
    return json.dumps(doc, separators=(",", ":")) + "\n"


def loads(text: str, base: Path | None = None):
    try:
        return from_dict(json.loads(text), base)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON: {e}") from None


def save(obj, path) -> None:
    Path(path).write_text(dumps(obj))


def load(path):
    path = Path(path)
    return loads(path.read_text(), path.parent)


# -- builtin names ---------------------------------------------------------------


def resolve_weakhopf(ref: str) -> WeakHopf:
    name = ref.removeprefix("builtin:")
    if name.startswith("fp") and name[2:].isdigit() and name not in BUILTINS:
        raise SchemaError("fpn is provided for n <= 4")
    if name not in BUILTINS:
        raise SchemaError(f"unknown builtin groupoid {name!r}; known: {sorted(BUILTINS)}")
    return BUILTINS[name]()


def resolve(ref: str):
    """``builtin:<name>``, ``builtin:<groupoid>/<regular|source>`` or a file path."""
    if not ref.startswith("builtin:"):
        return load(ref)
    name = ref.removeprefix("builtin:")
    if name in BUILTIN_FUSION:
        return BUILTIN_FUSION[name]()
    if "/" in name:
        g, c = name.split("/", 1)
        if c not in BUILTIN_COACTIONS:
            raise SchemaError(f"unknown builtin coaction {c!r}; known: {sorted(BUILTIN_COACTIONS)}")
        return BUILTIN_COACTIONS[c](resolve_weakhopf(g))
    if name in BUILTINS or name.startswith("fp"):
        return resolve_weakhopf(name)
    raise SchemaError(f"unknown builtin {name!r}")
