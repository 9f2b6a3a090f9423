"""Operational layer: operation instances, wires, fragments and circuits.

A :class:`Fragment` is an immutable set of operation instances plus wires
running from output ports to input ports. Unwired ports are the fragment's
open ports; a fragment with none is a circuit. Validation follows the three
wiring rules (one wire per port, matching types, no closed loops) and reports
rather than raises.
"""

from __future__ import annotations

import enum
import itertools
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

from .duotensor import Direction
from .errors import (
    CycleCreated,
    InstanceClash,
    InvalidCircuit,
    PortNotOpen,
    PortTaken,
    TypeMismatch,
)

__all__ = [
    "CLOSE_INPUT",
    "CLOSE_OUTPUT",
    "ClosureKind",
    "OperationSpec",
    "Port",
    "Wire",
    "Fragment",
    "FragmentBuilder",
    "Violation",
    "ValidationReport",
    "Foliation",
    "validate",
    "compose",
    "close_ports",
    "close_all",
    "foliate",
    "foliation_problems",
    "foliation_layers",
    "wire_reachability",
]

# Apparatus ids of the standard closing devices. '!' cannot appear in a DSL
# name, so these never collide with user operations.
CLOSE_INPUT = "!prep"
CLOSE_OUTPUT = "!effect"


class ClosureKind(str, enum.Enum):
    STANDARD = "standard"


@dataclass(frozen=True)
class OperationSpec:
    """One use of an apparatus: typed ports plus the outcome set it reports."""

    apparatus_id: str
    input_types: tuple = ()
    output_types: tuple = ()
    outcome_label: str | None = None
    setting: str = ""

    def __post_init__(self):
        object.__setattr__(self, "input_types", tuple(self.input_types))
        object.__setattr__(self, "output_types", tuple(self.output_types))

    @property
    def is_closure(self) -> bool:
        return self.apparatus_id in (CLOSE_INPUT, CLOSE_OUTPUT)

    def with_outcome(self, label: str | None) -> "OperationSpec":
        return OperationSpec(self.apparatus_id, self.input_types, self.output_types, label, self.setting)

    def display(self) -> str:
        return self.apparatus_id + (f"[{self.outcome_label}]" if self.outcome_label is not None else "")


class Port(NamedTuple):
    instance: str
    direction: Direction
    slot: int

    @property
    def label(self) -> str:
        return f"{self.instance}.{'in' if self.direction is Direction.INPUT else 'out'}{self.slot}"

    @classmethod
    def input(cls, instance: str, slot: int = 0) -> "Port":
        return cls(instance, Direction.INPUT, slot)

    @classmethod
    def output(cls, instance: str, slot: int = 0) -> "Port":
        return cls(instance, Direction.OUTPUT, slot)

    def sort_key(self):
        return (self.instance, self.direction is Direction.OUTPUT, self.slot)


class Wire(NamedTuple):
    source: Port
    target: Port

    @classmethod
    def of(cls, src: str, src_slot: int, dst: str, dst_slot: int) -> "Wire":
        return cls(Port.output(src, src_slot), Port.input(dst, dst_slot))

    def sort_key(self):
        return (self.source.sort_key(), self.target.sort_key())

    def __str__(self) -> str:
        return f"{self.source.label}->{self.target.label}"


def _instance_number(apparatus_id: str, taken: Iterable[str]) -> str:
    taken = set(taken)
    for n in itertools.count(1):
        iid = f"{apparatus_id}#{n}"
        if iid not in taken:
            return iid


class Fragment:
    """Operation instances keyed by instance id, plus wires."""

    __slots__ = ("_instances", "_wires")

    def __init__(self, instances: Mapping[str, OperationSpec] | None = None,
                 wires: Iterable[Wire] = ()):
        self._instances = dict(instances or {})
        self._wires = tuple(sorted({Wire(Port(*w[0]), Port(*w[1])) for w in wires}, key=Wire.sort_key))

    @property
    def instances(self) -> Mapping[str, OperationSpec]:
        return dict(self._instances)

    @property
    def wires(self) -> tuple:
        return self._wires

    @property
    def instance_ids(self) -> list:
        return sorted(self._instances)

    def spec(self, instance: str) -> OperationSpec:
        return self._instances[instance]

    def ports(self) -> list:
        out = []
        for iid in self.instance_ids:
            spec = self._instances[iid]
            out += [Port.input(iid, s) for s in range(len(spec.input_types))]
            out += [Port.output(iid, s) for s in range(len(spec.output_types))]
        return out

    def has_port(self, port: Port) -> bool:
        spec = self._instances.get(port.instance)
        if spec is None:
            return False
        n = len(spec.input_types if port.direction is Direction.INPUT else spec.output_types)
        return 0 <= port.slot < n

    def port_type(self, port: Port) -> str:
        spec = self._instances[port.instance]
        types = spec.input_types if port.direction is Direction.INPUT else spec.output_types
        return types[port.slot]

    def wired_ports(self) -> set:
        return {p for w in self._wires for p in w}

    @property
    def open_inputs(self) -> list:
        used = self.wired_ports()
        return [p for p in self.ports() if p.direction is Direction.INPUT and p not in used]

    @property
    def open_outputs(self) -> list:
        used = self.wired_ports()
        return [p for p in self.ports() if p.direction is Direction.OUTPUT and p not in used]

    @property
    def open_ports(self) -> list:
        return self.open_inputs + self.open_outputs

    @property
    def is_circuit(self) -> bool:
        return not self.open_ports

    def add(self, spec: OperationSpec, instance_id: str | None = None):
        """Return ``(new_fragment, instance_id)`` with one more instance."""
        iid = instance_id or _instance_number(spec.apparatus_id, self._instances)
        if iid in self._instances:
            raise InstanceClash(f"instance {iid!r} already present")
        inst = dict(self._instances)
        inst[iid] = spec
        return Fragment(inst, self._wires), iid

    def with_wires(self, wires: Iterable[Wire]) -> "Fragment":
        return Fragment(self._instances, tuple(self._wires) + tuple(wires))

    def with_outcomes(self, outcomes: Mapping[str, str | None]) -> "Fragment":
        inst = {k: (v.with_outcome(outcomes[k]) if k in outcomes else v) for k, v in self._instances.items()}
        return Fragment(inst, self._wires)

    def subfragment(self, ids: Iterable[str]) -> "Fragment":
        """Instances ``ids`` with the wires among them; cut wires become open ports."""
        ids = set(ids)
        missing = ids - set(self._instances)
        if missing:
            raise KeyError(f"unknown instances {sorted(missing)}")
        return Fragment(
            {k: v for k, v in self._instances.items() if k in ids},
            [w for w in self._wires if w.source.instance in ids and w.target.instance in ids],
        )

    def wires_between(self, left: Iterable[str], right: Iterable[str]) -> list:
        left, right = set(left), set(right)
        return [
            w for w in self._wires
            if (w.source.instance in left and w.target.instance in right)
            or (w.source.instance in right and w.target.instance in left)
        ]

    def renamed(self, mapping: Mapping[str, str]) -> "Fragment":
        def rp(p: Port) -> Port:
            return Port(mapping.get(p.instance, p.instance), p.direction, p.slot)

        inst = {mapping.get(k, k): v for k, v in self._instances.items()}
        if len(inst) != len(self._instances):
            raise InstanceClash("renaming merges instances")
        return Fragment(inst, [Wire(rp(w.source), rp(w.target)) for w in self._wires])

    def successors(self) -> dict:
        succ = {k: set() for k in self._instances}
        for w in self._wires:
            if w.source.instance in succ and w.target.instance in self._instances:
                succ[w.source.instance].add(w.target.instance)
        return succ

    def topological_order(self) -> list:
        """Kahn order, ties broken by lexicographic instance id; raises on cycles."""
        layers = self.layers()
        return [iid for layer in layers for iid in layer]

    def layers(self) -> list:
        """Kahn levels: each layer holds the instances whose predecessors are all
        in earlier layers. Raises :class:`InvalidCircuit` on a cycle."""
        succ = self.successors()
        indeg = {k: 0 for k in self._instances}
        for k, vs in succ.items():
            for v in vs:
                indeg[v] += 1
        current = sorted(k for k, d in indeg.items() if d == 0)
        layers = []
        seen = 0
        while current:
            layers.append(current)
            seen += len(current)
            nxt = set()
            for k in current:
                for v in succ[k]:
                    indeg[v] -= 1
                    if indeg[v] == 0:
                        nxt.add(v)
            current = sorted(nxt)
        if seen != len(self._instances):
            raise InvalidCircuit("wiring contains a closed loop")
        return layers

    def is_isomorphic(self, other: "Fragment") -> bool:
        """Graph equality up to renaming of instances."""
        import networkx as nx
        from networkx.algorithms.isomorphism import categorical_multiedge_match

        def graph(f: Fragment):
            g = nx.MultiDiGraph()
            for iid, spec in f._instances.items():
                g.add_node(iid, spec=spec)
            for w in f._wires:
                g.add_edge(w.source.instance, w.target.instance, slots=(w.source.slot, w.target.slot))
            return g

        return nx.is_isomorphic(
            graph(self),
            graph(other),
            node_match=lambda a, b: a["spec"] == b["spec"],
            edge_match=categorical_multiedge_match("slots", None),
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Fragment):
            return NotImplemented
        return self._instances == other._instances and self._wires == other._wires

    __hash__ = None

    def __len__(self) -> int:
        return len(self._instances)

    def __repr__(self) -> str:
        return f"Fragment({len(self._instances)} instances, {len(self._wires)} wires, {len(self.open_ports)} open)"


class FragmentBuilder:
    """Mutable helper for assembling a fragment instance by instance."""

    def __init__(self):
        self._instances: dict = {}
        self._wires: list = []

    def add(self, apparatus_id: str, inputs: Sequence[str] = (), outputs: Sequence[str] = (),
            outcome: str | None = None, setting: str = "", instance_id: str | None = None) -> str:
        iid = instance_id or _instance_number(apparatus_id, self._instances)
        if iid in self._instances:
            raise InstanceClash(f"instance {iid!r} already present")
        self._instances[iid] = OperationSpec(apparatus_id, tuple(inputs), tuple(outputs), outcome, setting)
        return iid

    def wire(self, src: str, src_slot: int, dst: str, dst_slot: int) -> "FragmentBuilder":
        self._wires.append(Wire.of(src, src_slot, dst, dst_slot))
        return self

    def build(self) -> Fragment:
        return Fragment(self._instances, self._wires)


@dataclass(frozen=True)
class Violation:
    rule: str  # "one-wire" | "type-match" | "no-closed-loops" | "unknown-port" | "direction"
    detail: str
    ports: tuple = ()
    cycle: tuple = ()


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def rules(self) -> list:
        return [v.rule for v in self.violations]

    def __str__(self) -> str:
        if self.ok:
            return "valid"
        return "; ".join(f"{v.rule}: {v.detail}" for v in self.violations)


def _find_cycle(nodes: Iterable[str], succ: Mapping[str, Iterable[str]]) -> list | None:
    color = {n: 0 for n in nodes}
    stack_path: list = []

    def dfs(u):
        color[u] = 1
        stack_path.append(u)
        for v in sorted(succ.get(u, ())):
            if color.get(v, 2) == 1:
                return stack_path[stack_path.index(v):] + [v]
            if color.get(v) == 0:
                found = dfs(v)
                if found:
                    return found
        stack_path.pop()
        color[u] = 2
        return None

    for n in sorted(color):
        if color[n] == 0:
            found = dfs(n)
            if found:
                return found
    return None


def validate(f: Fragment) -> ValidationReport:
    """Check the wiring rules; an empty report means the fragment is valid."""
    out = []
    usage = defaultdict(list)
    for w in f.wires:
        bad = [p for p in w if not f.has_port(p)]
        if bad:
            out.append(Violation("unknown-port", f"wire {w} refers to missing port(s)", tuple(bad)))
            continue
        if w.source.direction is not Direction.OUTPUT or w.target.direction is not Direction.INPUT:
            out.append(Violation("direction", f"wire {w} must run from an output to an input", tuple(w)))
            continue
        usage[w.source].append(w)
        usage[w.target].append(w)
        ts, tt = f.port_type(w.source), f.port_type(w.target)
        if ts != tt:
            out.append(Violation("type-match", f"wire {w} joins type {ts!r} to {tt!r}", tuple(w)))
    for port in sorted(usage, key=Port.sort_key):
        if len(usage[port]) > 1:
            out.append(Violation("one-wire", f"port {port.label} carries {len(usage[port])} wires", (port,)))
    cycle = _find_cycle(f.instance_ids, f.successors())
    if cycle:
        out.append(Violation("no-closed-loops", "closed loop " + " -> ".join(cycle), cycle=tuple(cycle)))
    return ValidationReport(tuple(out))


def compose(f: Fragment, g: Fragment, links: Iterable = ()) -> Fragment:
    """Join two instance-disjoint fragments with wires ``(output_port, input_port)``."""
    clash = set(f.instances) & set(g.instances)
    if clash:
        raise InstanceClash(f"fragments share instances {sorted(clash)}")
    merged = Fragment({**f.instances, **g.instances}, f.wires + g.wires)
    open_ports = set(merged.open_ports)
    new_wires = []
    used = set()
    for a, b in links:
        a, b = Port(*a), Port(*b)
        if a.direction is Direction.INPUT and b.direction is Direction.OUTPUT:
            a, b = b, a
        if a.direction is not Direction.OUTPUT or b.direction is not Direction.INPUT:
            raise TypeMismatch(f"link {a.label}-{b.label} must join an output to an input")
        for p in (a, b):
            if not merged.has_port(p):
                raise PortNotOpen(f"no port {p.label}")
            if p not in open_ports or p in used:
                raise PortTaken(f"port {p.label} is already wired")
            used.add(p)
        if merged.port_type(a) != merged.port_type(b):
            raise TypeMismatch(f"link {a.label}-{b.label} joins {merged.port_type(a)!r} to {merged.port_type(b)!r}")
        new_wires.append(Wire(a, b))
    result = merged.with_wires(new_wires)
    cycle = _find_cycle(result.instance_ids, result.successors())
    if cycle:
        raise CycleCreated("composition creates closed loop " + " -> ".join(cycle))
    return result


def close_ports(f: Fragment, closures: Iterable) -> Fragment:
    """Close open ports with the standard devices of their type.

    Each item is a :class:`Port` or ``(Port, ClosureKind)``. A closed input gains
    a standard preparation, a closed output a standard (deterministic) effect.
    """
    open_ports = set(f.open_ports)
    out = f
    wires = []
    for item in closures:
        if len(item) == 2:
            port, kind = Port(*item[0]), ClosureKind(item[1])
        else:
            port, kind = Port(*item), ClosureKind.STANDARD
        if port not in open_ports:
            raise PortNotOpen(f"port {port.label} is not open")
        open_ports.discard(port)
        t = f.port_type(port)
        if port.direction is Direction.INPUT:
            out, iid = out.add(OperationSpec(CLOSE_INPUT, (), (t,)))
            wires.append(Wire(Port.output(iid, 0), port))
        else:
            out, iid = out.add(OperationSpec(CLOSE_OUTPUT, (t,), ()))
            wires.append(Wire(port, Port.input(iid, 0)))
    return out.with_wires(wires)


def close_all(f: Fragment) -> Fragment:
    return close_ports(f, f.open_ports)


@dataclass(frozen=True)
class Foliation:
    """Ordered hypersurfaces, each a set of wires."""

    hypersurfaces: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "hypersurfaces", tuple(frozenset(Wire(*w) for w in h) for h in self.hypersurfaces))

    def __len__(self) -> int:
        return len(self.hypersurfaces)

    def sizes(self) -> list:
        return [len(h) for h in self.hypersurfaces]

    def to_json(self) -> list:
        return [sorted(str(w) for w in h) for h in self.hypersurfaces]


def foliate(c: Fragment) -> Foliation:
    """Complete foliation by topological layering.

    Hypersurface ``n`` holds the wires that cross the cut after the first ``n``
    Kahn layers.
    """
    report = validate(c)
    if not report.ok:
        raise InvalidCircuit(str(report))
    if not c.is_circuit:
        raise InvalidCircuit(f"fragment has open ports {[p.label for p in c.open_ports]}")
    layers = c.layers()
    level = {iid: n for n, layer in enumerate(layers) for iid in layer}
    hypersurfaces = []
    for n in range(1, len(layers)):
        hypersurfaces.append(
            frozenset(w for w in c.wires if level[w.source.instance] < n <= level[w.target.instance])
        )
    return Foliation(tuple(hypersurfaces))


def wire_reachability(c: Fragment) -> dict:
    """Map each wire to the set of wires reachable from it by tracing forward."""
    succ = c.successors()
    reach_ops = {}
    for iid in c.instance_ids:
        seen = {iid}
        queue = deque([iid])
        while queue:
            u = queue.popleft()
            for v in succ[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        reach_ops[iid] = seen
    return {
        w: {x for x in c.wires if x != w and x.source.instance in reach_ops[w.target.instance]}
        for w in c.wires
    }


def foliation_layers(c: Fragment, fol: Foliation):
    """Assign each instance to the step between two hypersurfaces.

    Returns ``(step_of_instance, problems)``: an instance at step ``s`` sits
    between hypersurface ``s`` and ``s + 1`` (hypersurface 0 being the start).
    The assignment is evaluation-compatible when ``problems`` is empty: every
    hypersurface is exactly the set of wires running from an earlier step to a
    later one, and every step advances past at least one operation.
    """
    hs = fol.hypersurfaces
    m = len(hs)
    problems = []
    step = {}
    for iid in c.instance_ids:
        ins = [w for w in c.wires if w.target.instance == iid]
        outs = [w for w in c.wires if w.source.instance == iid]
        if ins:
            idx = [n + 1 for n, h in enumerate(hs) for w in ins if w in h]
            step[iid] = max(idx) if idx else 0
        elif outs:
            idx = [n + 1 for n, h in enumerate(hs) for w in outs if w in h]
            step[iid] = (min(idx) - 1) if idx else 0
        else:
            step[iid] = 0
    for n, h in enumerate(hs, start=1):
        implied = {w for w in c.wires if step[w.source.instance] < n <= step[w.target.instance]}
        if set(h) != implied:
            extra = sorted(str(w) for w in set(h) - implied)
            missing = sorted(str(w) for w in implied - set(h))
            problems.append(f"hypersurface {n} is not a cut of the layering (extra {extra}, missing {missing})")
    used_steps = set(step.values())
    for s in range(m + 1):
        if m and s not in used_steps:
            problems.append(f"no operation between hypersurfaces {s} and {s + 1}")
    return step, problems


def foliation_problems(c: Fragment, fol: Foliation) -> list:
    """Completeness and synchronicity problems (empty list when the foliation is valid)."""
    problems = []
    covered = set().union(*fol.hypersurfaces) if fol.hypersurfaces else set()
    unknown = covered - set(c.wires)
    if unknown:
        problems.append(f"hypersurfaces mention wires not in the circuit: {sorted(map(str, unknown))}")
    missing = set(c.wires) - covered
    if missing:
        problems.append(f"incomplete: wires in no hypersurface {sorted(map(str, missing))}")
    reach = wire_reachability(c)
    for n, h in enumerate(fol.hypersurfaces, start=1):
        for w in h:
            clash = reach.get(w, set()) & h
            if clash:
                problems.append(f"hypersurface {n} is not synchronous: {w} reaches {sorted(map(str, clash))}")
    return problems
