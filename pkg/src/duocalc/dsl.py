"""Plain-text circuit notation.

    A^{a1 c2 a3} B_{a1 a4}^{b6} C_{c2 a3}^{a4 d5} D_{b6 d5}

A term is an apparatus name, an optional ``[outcome]``, then an input group
``_{...}`` and/or an output group ``^{...}`` (braces may be dropped for a
single index). An index is a lowercase type name followed by digits; equal
labels are wired from the superscript to the subscript. ``!a2`` closes that
port with the standard device of its type. ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .circuit import CLOSE_INPUT, CLOSE_OUTPUT, Fragment, FragmentBuilder, Port, _find_cycle, close_ports
from .errors import (
    CycleError,
    DslError,
    DuplicateConsumer,
    DuplicateProducer,
    LexError,
    TripleUse,
    TypeClash,
)

__all__ = ["parse", "format", "Term", "IndexUse"]

_NAME = re.compile(r"[A-Za-z][A-Za-z0-9]*")
_INDEX = re.compile(r"([a-z]+)([0-9]+)")
_OUTCOME = re.compile(r"[A-Za-z0-9_+\-.]+")


@dataclass(frozen=True)
class IndexUse:
    label: str
    type_name: str
    closed: bool
    line: int
    col: int


@dataclass
class Term:
    name: str
    outcome: str | None
    line: int
    col: int
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)


class _Scanner:
    def __init__(self, src: str):
        if not isinstance(src, str):
            raise LexError(f"expected text, got {type(src).__name__}", 1, 1)
        self.src = src
        self.pos = 0

    def where(self, pos: int | None = None) -> tuple:
        pos = self.pos if pos is None else pos
        line = self.src.count("\n", 0, pos) + 1
        col = pos - (self.src.rfind("\n", 0, pos) + 1) + 1
        return line, col

    def fail(self, message: str, cls=LexError, pos: int | None = None):
        raise cls(message, *self.where(pos))

    def skip(self) -> None:
        while self.pos < len(self.src):
            ch = self.src[self.pos]
            if ch.isspace():
                self.pos += 1
            elif ch == "#":
                nl = self.src.find("\n", self.pos)
                self.pos = len(self.src) if nl < 0 else nl + 1
            else:
                break

    def peek(self) -> str:
        return self.src[self.pos] if self.pos < len(self.src) else ""

    def match(self, rx: re.Pattern):
        m = rx.match(self.src, self.pos)
        if m:
            self.pos = m.end()
        return m

    def describe(self) -> str:
        return repr(self.peek()) if self.peek() else "end of input"


def _index(sc: _Scanner) -> IndexUse:
    start = sc.pos
    closed = sc.peek() == "!"
    if closed:
        sc.pos += 1
    m = sc.match(_INDEX)
    if not m:
        sc.fail(f"expected an index like a1, found {sc.describe()}")
    return IndexUse(m.group(0), m.group(1), closed, *sc.where(start))


def _group(sc: _Scanner) -> list:
    if sc.peek() != "{":
        return [_index(sc)]
    sc.pos += 1
    out = []
    while True:
        sc.skip()
        if sc.peek() == "}":
            sc.pos += 1
            return out
        if not sc.peek():
            sc.fail("unclosed '{'")
        out.append(_index(sc))


def _term(sc: _Scanner) -> Term:
    start = sc.pos
    m = sc.match(_NAME)
    if not m:
        sc.fail(f"expected an operation name, found {sc.describe()}")
    term = Term(m.group(0), None, *sc.where(start))
    if sc.peek() == "[":
        sc.pos += 1
        o = sc.match(_OUTCOME)
        if not o or sc.peek() != "]":
            sc.fail(f"bad outcome label, found {sc.describe()}")
        sc.pos += 1
        term.outcome = o.group(0)
    seen = set()
    while sc.peek() in ("^", "_"):
        mark = sc.peek()
        if mark in seen:
            sc.fail(f"second {'superscript' if mark == '^' else 'subscript'} group on {term.name}", DslError)
        seen.add(mark)
        sc.pos += 1
        (term.outputs if mark == "^" else term.inputs).extend(_group(sc))
    return term


def _terms(src: str) -> list:
    sc = _Scanner(src)
    terms = []
    sc.skip()
    while sc.peek():
        terms.append(_term(sc))
        nxt = sc.peek()
        if nxt and not (nxt.isspace() or nxt == "#" or _NAME.match(nxt)):
            sc.fail(f"unexpected {sc.describe()}")
        sc.skip()
    return terms


def _check_types(terms, theory) -> None:
    for term in terms:
        for use in term.inputs + term.outputs:
            if use.type_name not in theory.types:
                raise TypeClash(f"index {use.label} names undeclared type {use.type_name!r}", use.line, use.col)
        fam = theory.operations.get(term.name)
        if fam is None:
            continue
        for role, uses, declared in (("inputs", term.inputs, fam.input_types), ("outputs", term.outputs, fam.output_types)):
            got = tuple(u.type_name for u in uses)
            if got != tuple(declared):
                raise TypeClash(f"{term.name} declares {role} {list(declared)} but is written with {list(got)}",
                                term.line, term.col)


def parse(src: str, theory=None) -> Fragment:
    """Parse notation into a fragment; with ``theory``, port types are checked too."""
    terms = _terms(src)
    if theory is not None:
        _check_types(terms, theory)
    producers, consumers, counts = {}, {}, {}
    b = FragmentBuilder()
    ids = []
    for term in terms:
        iid = b.add(term.name, [u.type_name for u in term.inputs], [u.type_name for u in term.outputs],
                    outcome=term.outcome)
        ids.append(iid)
        for slot, use in enumerate(term.inputs):
            counts[use.label] = counts.get(use.label, 0) + 1
            if counts[use.label] > 2:
                raise TripleUse(f"index {use.label} used more than twice", use.line, use.col)
            if use.label in consumers:
                raise DuplicateConsumer(f"index {use.label} appears as a subscript twice", use.line, use.col)
            consumers[use.label] = (Port.input(iid, slot), use)
        for slot, use in enumerate(term.outputs):
            counts[use.label] = counts.get(use.label, 0) + 1
            if counts[use.label] > 2:
                raise TripleUse(f"index {use.label} used more than twice", use.line, use.col)
            if use.label in producers:
                raise DuplicateProducer(f"index {use.label} appears as a superscript twice", use.line, use.col)
            producers[use.label] = (Port.output(iid, slot), use)
    closures = []
    for label in sorted(set(producers) | set(consumers)):
        uses = [x for x in (producers.get(label), consumers.get(label)) if x]
        closed = [u for _, u in uses if u.closed]
        if closed and len(uses) > 1:
            raise DslError(f"closed index {label} is also wired", closed[0].line, closed[0].col)
        if label in producers and label in consumers:
            b.wire(producers[label][0].instance, producers[label][0].slot,
                   consumers[label][0].instance, consumers[label][0].slot)
        elif closed:
            closures.append(uses[0][0])
    f = b.build()
    cycle = _find_cycle(f.instance_ids, f.successors())
    if cycle:
        first = terms[ids.index(cycle[0])]
        raise CycleError(cycle, first.line, first.col)
    return close_ports(f, closures)


def format(f: Fragment) -> str:  # noqa: A001 - mirrors parse
    """Canonical notation: terms in topological order (ties lexicographic), labels
    numbered by first appearance, standard closures rendered with ``!``."""
    order = [iid for iid in f.topological_order() if not f.spec(iid).is_closure]
    closed = set()
    wire_of = {}
    for w in f.wires:
        if f.spec(w.source.instance).apparatus_id == CLOSE_INPUT:
            closed.add(w.target)
        elif f.spec(w.target.instance).apparatus_id == CLOSE_OUTPUT:
            closed.add(w.source)
        else:
            wire_of[w.source] = w
            wire_of[w.target] = w
    labels, counter = {}, [0]

    def label(port: Port) -> str:
        key = wire_of.get(port, port)
        if key not in labels:
            counter[0] += 1
            t = f.port_type(port)
            if not re.fullmatch(r"[a-z]+", t):
                raise ValueError(f"type {t!r} cannot be written in the notation")
            labels[key] = f"{t}{counter[0]}"
        return ("!" if port in closed else "") + labels[key]

    parts = []
    for iid in order:
        spec = f.spec(iid)
        text = spec.apparatus_id
        if spec.outcome_label is not None:
            text += f"[{spec.outcome_label}]"
        ins = [label(Port.input(iid, s)) for s in range(len(spec.input_types))]
        outs = [label(Port.output(iid, s)) for s in range(len(spec.output_types))]
        if ins:
            text += "_{" + " ".join(ins) + "}"
        if outs:
            text += "^{" + " ".join(outs) + "}"
        parts.append(text)
    return " ".join(parts)
