"""Graphviz DOT export of a fragment's wiring graph."""

from __future__ import annotations

import json

from .circuit import Foliation, Fragment, Port, foliation_layers

__all__ = ["export_dot"]


def _q(s: str) -> str:
    return json.dumps(s)


def export_dot(f: Fragment, foliation: Foliation | None = None, name: str = "fragment") -> str:
    """Boxes for instances, typed edges for wires, point nodes for open ports.

    With ``foliation`` the instances between each pair of hypersurfaces share a rank.
    """
    lines = [f"digraph {_q(name)} {{", "  rankdir=BT;", "  node [shape=box];"]
    for iid in f.instance_ids:
        spec = f.spec(iid)
        label = spec.apparatus_id if spec.outcome_label is None else f"{spec.apparatus_id}[{spec.outcome_label}]"
        lines.append(f"  {_q(iid)} [label={_q(label)}];")
    for w in f.wires:
        lines.append(f"  {_q(w.source.instance)} -> {_q(w.target.instance)} [label={_q(f.port_type(w.source))}];")
    for p in sorted(f.open_ports, key=Port.sort_key):
        lines.append(f"  {_q(p.label)} [shape=point];")
        t = _q(f.port_type(p))
        if p in f.open_inputs:
            lines.append(f"  {_q(p.label)} -> {_q(p.instance)} [style=dashed, label={t}];")
        else:
            lines.append(f"  {_q(p.instance)} -> {_q(p.label)} [style=dashed, label={t}];")
    if foliation is not None:
        step, _ = foliation_layers(f, foliation)
        for s in sorted(set(step.values())):
            members = " ".join(f"{_q(i)};" for i in sorted(i for i in step if step[i] == s))
            lines.append(f"  {{ rank=same; {members} }}")
    lines.append("}")
    return "\n".join(lines) + "\n"
