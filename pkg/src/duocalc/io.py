"""Theory and circuit JSON files."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

import numpy as np

from .backends.quantum import complex_to_json
from .circuit import Fragment, OperationSpec, Port, Wire
from .errors import BackendMismatch, SchemaError
from .theory import Theory

__all__ = [
    "theory_from_json",
    "theory_to_json",
    "load_theory",
    "circuit_from_json",
    "circuit_to_json",
    "load_circuit",
]


def _fiducial_json(theory: Theory, name: str):
    fid = theory.fiducials[name]
    if theory.backend.name == "quantum":
        conv = complex_to_json
    else:
        conv = lambda x: [float(v) for v in x]
    return {"preparations": [conv(p) for p in fid.preparations], "effects": [conv(e) for e in fid.effects]}


def theory_from_json(doc: Mapping) -> Theory:
    """Build a theory from the ``{"types": ..., "operations": ...}`` document.

    Every type must name the same backend. An optional ``"closures"`` map sets
    ``{"preparation": ..., "effect": ...}`` per type.
    """
    try:
        types = doc["types"]
        backends = {spec["backend"] for spec in types.values()}
        if len(backends) > 1:
            raise BackendMismatch(f"types mix backends {sorted(backends)}; one backend per theory")
        theory = Theory(backends.pop() if backends else "classical")
        for name, spec in types.items():
            theory.register_type(name, int(spec["dim"]), spec.get("fiducials", "default"))
        for name, spec in doc.get("closures", {}).items():
            theory.set_closure(name, spec.get("preparation"), spec.get("effect"))
        for op_id, spec in doc.get("operations", {}).items():
            theory.add_operation(op_id, spec.get("inputs", []), spec.get("outputs", []), spec["outcomes"])
    except (KeyError, TypeError, AttributeError, ValueError) as exc:
        raise SchemaError(f"malformed theory document: {exc!r}") from None
    return theory


def theory_to_json(theory: Theory) -> dict:
    types = {}
    for name, t in theory.types.items():
        types[name] = {"backend": theory.backend.name, "dim": t.backend_dim, "fiducials": _fiducial_json(theory, name)}
    ops = {}
    for op_id, fam in theory.operations.items():
        ops[op_id] = {
            "inputs": list(fam.input_types),
            "outputs": list(fam.output_types),
            "outcomes": {label: op.to_json() for label, op in fam.outcomes.items()},
        }
    out = {"types": types, "operations": ops}
    if theory._closures:
        if theory.backend.name == "quantum":
            conv = complex_to_json
        else:
            conv = lambda x: [float(v) for v in np.ravel(x)]
        out["closures"] = {name: {"preparation": conv(p), "effect": conv(e)} for name, (p, e) in theory._closures.items()}
    return out


def load_theory(path) -> Theory:
    return theory_from_json(json.loads(Path(path).read_text()))


def circuit_from_json(doc: Mapping) -> Fragment:
    """``{"instances": {id: {apparatus, inputs, outputs, outcome?, setting?}},
    "wires": [{"from": [id, slot], "to": [id, slot]}]}``"""
    try:
        inst = {
            iid: OperationSpec(s["apparatus"], tuple(s.get("inputs", ())), tuple(s.get("outputs", ())),
                               s.get("outcome"), s.get("setting", ""))
            for iid, s in doc["instances"].items()
        }
        wires = [Wire(Port.output(w["from"][0], int(w["from"][1])), Port.input(w["to"][0], int(w["to"][1])))
                 for w in doc.get("wires", [])]
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise SchemaError(f"malformed circuit document: {exc!r}") from None
    return Fragment(inst, wires)


def circuit_to_json(f: Fragment) -> dict:
    inst = {}
    for iid in f.instance_ids:
        s = f.spec(iid)
        entry = {"apparatus": s.apparatus_id, "inputs": list(s.input_types), "outputs": list(s.output_types)}
        if s.outcome_label is not None:
            entry["outcome"] = s.outcome_label
        if s.setting:
            entry["setting"] = s.setting
        inst[iid] = entry
    wires = [{"from": [w.source.instance, w.source.slot], "to": [w.target.instance, w.target.slot]} for w in f.wires]
    return {"instances": inst, "wires": wires}


def load_circuit(path) -> Fragment:
    return circuit_from_json(json.loads(Path(path).read_text()))

