import numpy as np
import pytest

from duocalc import (
    Foliation,
    Fragment,
    FragmentBuilder,
    OperationSpec,
    Port,
    Theory,
    Wire,
    circuit_probability,
    close_all,
    close_ports,
    compose,
    foliate,
    foliation_problems,
    parse,
    validate,
)
from duocalc.errors import CycleCreated, InstanceClash, InvalidCircuit, PortNotOpen, PortTaken, TypeMismatch
from duocalc.sampling import random_circuit, random_theory

from oracles import foliation_ok, transitive_closure
from worked_circuits import BIG, BIG_PARTS, FOUR_OP, MEDIUM, medium_foliation


def test_four_op_circuit_is_valid():
    c = parse(FOUR_OP)
    assert len(c.instances) == 4 and len(c.wires) == 6
    assert c.is_circuit and validate(c).ok


def test_one_wire_violation():
    b = FragmentBuilder()
    a = b.add("A", outputs=["a"])
    x = b.add("B", inputs=["a"])
    y = b.add("C", inputs=["a"])
    b.wire(a, 0, x, 0).wire(a, 0, y, 0)
    report = validate(b.build())
    assert report.rules() == ["one-wire"]


def test_two_cycle_is_reported():
    b = FragmentBuilder()
    x = b.add("X", inputs=["a"], outputs=["a"])
    y = b.add("Y", inputs=["a"], outputs=["a"])
    b.wire(x, 0, y, 0).wire(y, 0, x, 0)
    report = validate(b.build())
    assert "no-closed-loops" in report.rules()
    (v,) = [v for v in report.violations if v.rule == "no-closed-loops"]
    assert set(v.cycle) == {x, y}


def test_type_and_direction_violations():
    b = FragmentBuilder()
    a = b.add("A", outputs=["a"])
    x = b.add("B", inputs=["b"])
    b.wire(a, 0, x, 0)
    assert validate(b.build()).rules() == ["type-match"]
    f = Fragment({"A#1": OperationSpec("A", (), ("a",)), "B#1": OperationSpec("B", ("a",), ())},
                 [Wire(Port.input("B#1", 0), Port.output("A#1", 0))])
    assert validate(f).rules() == ["direction"]


def test_compose_big_from_parts_equals_direct():
    c = parse(BIG)
    parts = [c.subfragment(p) for p in BIG_PARTS]
    f = parts[0]
    done = set(BIG_PARTS[0])
    for ids, g in zip(BIG_PARTS[1:], parts[1:]):
        links = [tuple(w) for w in c.wires
                 if (w.source.instance in done and w.target.instance in ids)
                 or (w.source.instance in ids and w.target.instance in done)]
        f = compose(f, g, links)
        done |= set(ids)
    assert f == c
    assert set(f.wires) == set(c.wires) and len(f.wires) == 9


def test_compose_errors():
    f = parse("A_{a1}^{a2}")
    g = parse("B_{a1}^{a2}")
    with pytest.raises(CycleCreated):
        compose(f, g, [(Port.output("A#1"), Port.input("B#1")), (Port.output("B#1"), Port.input("A#1"))])
    with pytest.raises(PortTaken):
        compose(f, g, [(Port.output("A#1"), Port.input("B#1")), (Port.output("A#1"), Port.input("B#1"))])
    with pytest.raises(InstanceClash):
        compose(f, f)
    with pytest.raises(TypeMismatch):
        compose(f, parse("B_{b1}"), [(Port.output("A#1"), Port.input("B#1"))])
    with pytest.raises(PortNotOpen):
        compose(f, g, [(Port.output("A#1", 3), Port.input("B#1"))])


def test_close_ports():
    f = parse("I_{a1}^{a2}")
    with pytest.raises(PortNotOpen):
        close_ports(f, [Port.input("I#1", 1)])
    closed = close_all(f)
    assert closed.is_circuit and validate(closed).ok and len(closed.instances) == 3
    th = Theory("classical")
    th.register_type("a", 2)
    th.add_operation("I", ["a"], ["a"], {"0": np.eye(2)})
    assert abs(circuit_probability(closed, th) - 1.0) < 1e-12
    with pytest.raises(PortNotOpen):
        close_ports(closed, [Port.input("I#1", 0)])


def test_medium_foliation():
    c = parse(MEDIUM)
    fol = foliate(c)
    assert fol.sizes() == [4, 3, 2]
    assert fol == medium_foliation(c)
    assert foliation_problems(c, fol) == []


def test_foliation_problems_detected():
    c = parse(MEDIUM)
    good = medium_foliation(c)
    missing = Foliation(good.hypersurfaces[:1] + good.hypersurfaces[2:])
    assert foliation_problems(c, missing)
    by_type = {c.port_type(w.source): w for w in c.wires}
    # a -> f: the a wire reaches the f wire through D
    assert foliation_problems(c, Foliation(good.hypersurfaces + (frozenset({by_type["a"], by_type["f"]}),)))


def test_foliate_rejects_open_fragment():
    with pytest.raises(InvalidCircuit):
        foliate(parse("A^{a1}"))


def _triples(c):
    return [(w.source.instance, w.target.instance, str(w)) for w in c.wires]


@pytest.mark.parametrize("seed", range(20))
def test_random_circuit_foliation_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    th = random_theory(rng, "classical", [2, 3], 2)
    c = random_circuit(rng, th, int(rng.integers(3, 9)))
    fol = foliate(c)
    hs = [{(w.source.instance, w.target.instance, str(w)) for w in h} for h in fol.hypersurfaces]
    assert foliation_ok(_triples(c), hs)
    assert foliation_problems(c, fol) == []
    # the layering respects the instance order
    reach = transitive_closure(c.instance_ids, [(w.source.instance, w.target.instance) for w in c.wires])
    order = c.topological_order()
    for i, u in enumerate(order):
        assert not any(order.index(v) < i for v in reach[u])


def test_isomorphism_ignores_instance_names():
    c = parse(FOUR_OP)
    renamed = c.renamed({iid: "z" + iid for iid in c.instance_ids})
    assert renamed != c and renamed.is_isomorphic(c)
    assert not parse(MEDIUM).is_isomorphic(c)
    assert not parse("A^{a1} B_{a1}").is_isomorphic(parse("A^{b1} B_{b1}"))
