"""Evaluation: fragment compilation, contraction planning, ratios and foliations.

Every instance contributes its duotensor in standard form (inputs black,
outputs white), so each internal wire is a white-to-black link and the whole
fragment contracts without further recolouring.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .circuit import Foliation, Fragment, Port, Wire, foliation_layers, foliation_problems, validate
from .duotensor import (
    Color,
    Direction,
    Duotensor,
    Proportionality,
    contract,
    identity_delta,
    proportionality,
    recolor_all,
    to_standard_form,
)
from .errors import IncompatibleFoliation, InvalidCircuit, NotSameExperiment, ValidationFailed

__all__ = [
    "PlanStep",
    "ContractionPlan",
    "plan_contraction",
    "CompiledFragment",
    "compile_fragment",
    "contract_compiled",
    "circuit_probability",
    "Verdict",
    "RatioVerdict",
    "same_experiment",
    "ratio_check",
    "Evolution",
    "evolve_foliation",
    "padding_count",
    "evaluation_report",
]

STRATEGIES = ("greedy", "left_to_right", "random")


@dataclass(frozen=True)
class PlanStep:
    """Contract the cluster holding ``left`` with the cluster holding ``right``."""

    left: tuple
    right: tuple
    result_size: int

    def to_json(self) -> dict:
        return {"left": list(self.left), "right": list(self.right), "result_size": self.result_size}


@dataclass(frozen=True)
class ContractionPlan:
    steps: tuple
    strategy: str
    cost: int

    def to_json(self) -> dict:
        return {"strategy": self.strategy, "cost": self.cost, "steps": [s.to_json() for s in self.steps]}


def _port_dims(f: Fragment, dims) -> dict:
    if dims is None:
        return {p: 2 for p in f.ports()}
    if hasattr(dims, "types"):
        dims = {name: t.k for name, t in dims.types.items()}
    return {p: int(dims[f.port_type(p)]) for p in f.ports()}


class _Clusters:
    """Cost bookkeeping for merging groups of instances."""

    def __init__(self, f: Fragment, dims):
        self.pdim = _port_dims(f, dims)
        self.partner = {}
        for w in f.wires:
            self.partner[w.source] = w.target
            self.partner[w.target] = w.source
        self.ports_of = {iid: [p for p in self.pdim if p.instance == iid] for iid in f.instance_ids}

    def open_ports(self, members: frozenset) -> list:
        return [p for iid in members for p in self.ports_of[iid]
                if p not in self.partner or self.partner[p].instance not in members]

    def size(self, members: frozenset) -> int:
        return int(np.prod([self.pdim[p] for p in self.open_ports(members)], dtype=np.int64))

    def connected(self, a: frozenset, b: frozenset) -> bool:
        return any(p in self.partner and self.partner[p].instance in b
                   for iid in a for p in self.ports_of[iid])


def _steps(cl: _Clusters, merges: Sequence[tuple]) -> tuple:
    out = []
    for a, b in merges:
        out.append(PlanStep(tuple(sorted(a)), tuple(sorted(b)), cl.size(a | b)))
    return tuple(out)


def _greedy(f: Fragment, cl: _Clusters) -> list:
    clusters = [frozenset([iid]) for iid in f.instance_ids]
    merges = []
    while len(clusters) > 1:
        best = None
        candidates = [(a, b) for i, a in enumerate(clusters) for b in clusters[i + 1:] if cl.connected(a, b)]
        if not candidates:
            # disconnected pieces: outer products, smallest first
            candidates = [(a, b) for i, a in enumerate(clusters) for b in clusters[i + 1:]]
        for a, b in candidates:
            ka, kb = min(a), min(b)
            if kb < ka:
                a, b, ka, kb = b, a, kb, ka
            key = (cl.size(a | b), ka, kb)
            if best is None or key < best[0]:
                best = (key, a, b)
        _, a, b = best
        merges.append((a, b))
        clusters = [c for c in clusters if c is not a and c is not b] + [a | b]
        clusters.sort(key=min)
    return merges


def _left_to_right(f: Fragment) -> list:
    order = f.topological_order()
    merges, acc = [], None
    for iid in order:
        nxt = frozenset([iid])
        if acc is not None:
            merges.append((acc, nxt))
            acc = acc | nxt
        else:
            acc = nxt
    return merges


def _random(f: Fragment, seed) -> list:
    rng = random.Random(seed)
    clusters = [frozenset([iid]) for iid in f.instance_ids]
    merges = []
    while len(clusters) > 1:
        a, b = rng.sample(clusters, 2)
        merges.append((a, b))
        clusters = [c for c in clusters if c is not a and c is not b] + [a | b]
    return merges


def plan_contraction(f: Fragment, dims=None, strategy: str = "greedy", seed=0) -> ContractionPlan:
    """Pairwise contraction order for the instances of ``f``.

    ``dims`` maps type names to index sizes (a theory works too); without it
    every index counts as size 2. The greedy strategy merges the connected pair
    with the smallest result, ties broken by the pair's smallest instance ids,
    and keeps the left-to-right order instead if that is strictly cheaper.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    cl = _Clusters(f, dims)
    if strategy == "left_to_right":
        merges = _left_to_right(f)
    elif strategy == "random":
        merges = _random(f, seed)
    else:
        merges = _greedy(f, cl)
        ltr = _left_to_right(f)
        greedy_cost = sum(cl.size(a | b) for a, b in merges)
        if sum(cl.size(a | b) for a, b in ltr) < greedy_cost:
            merges = ltr
    steps = _steps(cl, merges)
    return ContractionPlan(steps, strategy, sum(s.result_size for s in steps))


@dataclass(frozen=True, eq=False)
class CompiledFragment:
    """Fragment duotensor in standard form.

    Indices are the open inputs sorted by (instance, slot) followed by the
    open outputs; ``port_map`` sends each open port to its index label.
    """

    duotensor: Duotensor
    port_map: Mapping
    plan: ContractionPlan | None = None
    fragment: Fragment | None = field(default=None, repr=False)

    @property
    def provenance(self) -> tuple:
        return self.plan.steps if self.plan else ()

    def colored(self, colors, theory) -> Duotensor:
        return recolor_all(self.duotensor, colors, theory.metrics)


def _canonical_ports(f: Fragment) -> list:
    return sorted(f.open_inputs, key=Port.sort_key) + sorted(f.open_outputs, key=Port.sort_key)


def _instance_tensor(f: Fragment, iid: str, theory) -> Duotensor:
    spec = f.spec(iid)
    t = theory.all_black(
        spec,
        [Port.input(iid, s).label for s in range(len(spec.input_types))],
        [Port.output(iid, s).label for s in range(len(spec.output_types))],
    )
    return to_standard_form(t, theory.metrics)


def _links(wires: Iterable[Wire], left: Duotensor, right: Duotensor) -> list:
    lset, rset = set(left.labels), set(right.labels)
    links = []
    for w in wires:
        s, t = w.source.label, w.target.label
        if s in lset and t in rset:
            links.append((s, t))
        elif t in lset and s in rset:
            links.append((t, s))
    return links


def _run_plan(tensors: dict, wires: Sequence[Wire], plan: ContractionPlan) -> Duotensor:
    held = {frozenset([k]): v for k, v in tensors.items()}
    where = {k: frozenset([k]) for k in tensors}
    for step in plan.steps:
        a, b = where[step.left[0]], where[step.right[0]]
        ta, tb = held.pop(a), held.pop(b)
        merged = a | b
        held[merged] = contract(ta, tb, _links(wires, ta, tb))
        for k in merged:
            where[k] = merged
    if not held:
        return Duotensor((), np.ones(()))
    (result,) = held.values()
    return result


def compile_fragment(f: Fragment, theory, plan: ContractionPlan | None = None) -> CompiledFragment:
    """Contract the per-instance duotensors over every internal wire."""
    report = validate(f)
    if not report.ok:
        raise ValidationFailed(report)
    if plan is None:
        plan = plan_contraction(f, theory)
    tensors = {iid: _instance_tensor(f, iid, theory) for iid in f.instance_ids}
    result = _run_plan(tensors, f.wires, plan)
    ports = _canonical_ports(f)
    result = result.transpose([p.label for p in ports])
    return CompiledFragment(result, {p: p.label for p in ports}, plan, f)


def contract_compiled(parts: Sequence[CompiledFragment], wires: Iterable[Wire]) -> Duotensor:
    """Join compiled pieces along ``wires`` (each from an output of one piece to
    an input of another). The result uses the canonical order of the union."""
    wires = list(wires)
    acc = parts[0].duotensor
    pending = list(parts[1:])
    while pending:
        # prefer a piece that is linked to what has been joined so far
        pick = next((i for i, p in enumerate(pending) if _links(wires, acc, p.duotensor)), 0)
        piece = pending.pop(pick)
        acc = contract(acc, piece.duotensor, _links(wires, acc, piece.duotensor))
    open_in = sorted((m for m in acc.indices if m.direction is Direction.INPUT), key=lambda m: _label_key(m.label))
    open_out = sorted((m for m in acc.indices if m.direction is Direction.OUTPUT), key=lambda m: _label_key(m.label))
    return acc.transpose([m.label for m in open_in + open_out])


def _label_key(label: str):
    inst, _, rest = label.rpartition(".")
    return (inst, int(rest.lstrip("inout")))


def circuit_probability(c: Fragment, theory, plan: ContractionPlan | None = None) -> float:
    """Probability of a closed circuit (unclamped; see :func:`evaluation_report`)."""
    compiled = compile_fragment(c, theory, plan)
    if not compiled.duotensor.is_scalar:
        raise InvalidCircuit(f"circuit has open ports {[p.label for p in compiled.port_map]}")
    return compiled.duotensor.item()


class Verdict(str, enum.Enum):
    WELL_CONDITIONED = "well_conditioned"
    NOT_WELL_CONDITIONED = "not_well_conditioned"
    UNDEFINED = "undefined"


@dataclass(frozen=True)
class RatioVerdict:
    verdict: Verdict
    k: float | None = None
    reason: str = ""

    @classmethod
    def well_conditioned(cls, k: float) -> "RatioVerdict":
        return cls(Verdict.WELL_CONDITIONED, float(k))

    @property
    def is_well_conditioned(self) -> bool:
        return self.verdict is Verdict.WELL_CONDITIONED

    def to_json(self) -> dict:
        out = {"verdict": self.verdict.value}
        if self.k is not None:
            out["k"] = self.k
        if self.reason:
            out["reason"] = self.reason
        return out


def same_experiment(e_i: Fragment, e_j: Fragment) -> bool:
    """Same instances, settings and wiring; outcome labels may differ."""
    if set(e_i.instance_ids) != set(e_j.instance_ids) or e_i.wires != e_j.wires:
        return False
    for iid in e_i.instance_ids:
        a, b = e_i.spec(iid), e_j.spec(iid)
        if a.with_outcome(None) != b.with_outcome(None):
            return False
    return True


def ratio_check(e_i: Fragment, e_j: Fragment, theory, rel_tol: float = 1e-8) -> RatioVerdict:
    """Is Prob(e_i C) / Prob(e_j C) independent of every completion C?

    Decided by proportionality of the two fragment duotensors.
    """
    if not same_experiment(e_i, e_j):
        raise NotSameExperiment("fragments differ in instances, settings or wiring")
    a = compile_fragment(e_i, theory)
    b = compile_fragment(e_j, theory, a.plan)
    res = proportionality(a.duotensor, b.duotensor, rel_tol)
    if res.kind is Proportionality.PROPORTIONAL:
        return RatioVerdict.well_conditioned(res.k)
    if res.kind is Proportionality.NOT_PROPORTIONAL:
        return RatioVerdict(Verdict.NOT_WELL_CONDITIONED)
    reason = "both zero" if res.kind is Proportionality.BOTH_ZERO else "zero denominator"
    return RatioVerdict(Verdict.UNDEFINED, reason=reason)


class Evolution(NamedTuple):
    probability: float
    padding_count: int


def padding_count(c: Fragment, fol: Foliation) -> int:
    """Identities needed: wires passing a step without meeting an operation there."""
    step, _ = foliation_layers(c, fol)
    return sum(
        max(0, step[w.target.instance] - step[w.source.instance] - 1) for w in c.wires
    )


def _wire_label(w: Wire) -> str:
    return str(w)


def evolve_foliation(c: Fragment, fol: Foliation, theory) -> Evolution:
    """Evaluate ``c`` as a state pushed across successive hypersurfaces.

    The state's indices (one per wire on the current hypersurface) are black
    outputs; each step applies its operations (white inputs, black outputs)
    and a white-to-black identity on every wire that merely passes through.
    Layer factors act on disjoint indices, so they are applied one at a time.
    """
    report = validate(c)
    if not report.ok:
        raise ValidationFailed(report)
    problems = foliation_problems(c, fol)
    step, more = foliation_layers(c, fol)
    problems += more
    if not c.is_circuit:
        problems.append("foliation evaluation needs a closed circuit")
    if problems:
        raise IncompatibleFoliation("; ".join(problems))
    feeds = {}
    for w in c.wires:
        feeds[w.source] = w
        feeds[w.target] = w
    state = Duotensor((), np.ones(()))
    pads = 0
    for s in range(len(fol) + 1):
        for iid in sorted(i for i in c.instance_ids if step[i] == s):
            spec = c.spec(iid)
            ins = [_wire_label(feeds[Port.input(iid, k)]) for k in range(len(spec.input_types))]
            outs = [_wire_label(feeds[Port.output(iid, k)]) for k in range(len(spec.output_types))]
            op = theory.all_black(spec, ins, outs)
            op = recolor_all(op, lambda m: Color.WHITE if m.direction is Direction.INPUT else Color.BLACK,
                             theory.metrics)
            state = contract(state, op, [(lab, lab) for lab in ins])
        for w in c.wires:
            if step[w.source.instance] < s < step[w.target.instance]:
                t = theory.types[c.port_type(w.source)]
                lab = _wire_label(w)
                delta = identity_delta(t.name, t.k, lab, lab + "'")
                state = contract(state, delta, [(lab, lab)]).relabel({lab + "'": lab})
                pads += 1
    return Evolution(state.item(), pads)


def evaluation_report(c: Fragment, theory, foliation: Foliation | None = None) -> dict:
    """JSON-ready summary with the probability clamped to [0, 1]."""
    compiled = compile_fragment(c, theory)
    if not compiled.duotensor.is_scalar:
        raise InvalidCircuit(f"circuit has open ports {[p.label for p in compiled.port_map]}")
    p = compiled.duotensor.item()
    out = {"probability": min(1.0, max(0.0, p)), "plan": compiled.plan.to_json()}
    if foliation is not None:
        out["padding_count"] = evolve_foliation(c, foliation, theory).padding_count
    return out
