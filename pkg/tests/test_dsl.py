import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from duocalc import Theory, export_dot, foliate, format, parse, validate
from duocalc.circuit import CLOSE_OUTPUT
from duocalc.errors import (
    CycleError,
    DslError,
    DuplicateConsumer,
    DuplicateProducer,
    LexError,
    TripleUse,
    TypeClash,
)
from duocalc.sampling import random_fragment, random_theory

from worked_circuits import BIG, FOUR_OP, MEDIUM, SIMPLE, TRIPTYCH


@pytest.mark.parametrize("text,n_inst,n_wires", [
    (SIMPLE, 2, 1), (FOUR_OP, 4, 6), (BIG, 7, 9), (MEDIUM, 6, 7),
])
def test_examples_parse(text, n_inst, n_wires):
    c = parse(text)
    assert len(c.instances) == n_inst and len(c.wires) == n_wires
    assert c.is_circuit and validate(c).ok


def test_outcomes_closures_and_open_ports():
    num, den = (parse(t) for t in TRIPTYCH[1])
    assert num.spec("B#1").outcome_label == "up" and den.spec("B#1").outcome_label is None
    assert num.is_circuit
    assert any(s.apparatus_id == CLOSE_OUTPUT for s in num.instances.values())
    open_f = parse(TRIPTYCH[0][0])
    assert sorted(p.label for p in open_f.open_ports) == ["A#1.out0", "C#1.in0", "C#1.out0"]


def test_braces_optional_and_comments():
    a = parse("A^a1 # prepare\nB_a1")
    assert a == parse(SIMPLE)


def test_format_canonical_text():
    assert format(parse(FOUR_OP)) == "A^{a1 c2 a3} C_{c2 a3}^{a4 d5} B_{a1 a4}^{b6} D_{b6 d5}"
    for num, den in [*TRIPTYCH]:
        assert format(parse(num)) == num and format(parse(den)) == den


@pytest.mark.parametrize("text", [SIMPLE, FOUR_OP, BIG, MEDIUM])
def test_round_trip_examples(text):
    c = parse(text)
    assert parse(format(c)).is_isomorphic(c)
    assert format(parse(format(c))) == format(c)


@pytest.mark.parametrize("seed", range(15))
def test_round_trip_random(seed):
    rng = np.random.default_rng(seed)
    th = random_theory(rng, "classical", [2, 3], 3)
    f = random_fragment(rng, th, int(rng.integers(2, 8)), open_inputs=int(rng.integers(0, 3)))
    back = parse(format(f))
    assert back.is_isomorphic(f)
    assert format(back) == format(f)


@pytest.mark.parametrize("text,cls,line,col", [
    ("A^{a1} B_{a1} C_{a1}", TripleUse, 1, 18),
    ("A^{a1} B^{a1}", DuplicateProducer, 1, 11),
    ("A_{a1} B_{a1}", DuplicateConsumer, 1, 11),
    ("A^{A1}", LexError, 1, 4),
    ("A^{a1}\n  B_{x}", LexError, 2, 6),
    ("A^{a1} $", LexError, 1, 8),
    ("A^{a1", LexError, 1, 6),
    ("A[^{a1}", LexError, 1, 3),
    ("A_{a2}^{a1}\nB_{a1}^{a2}", CycleError, 1, 1),
    ("A^{!a1} B_{a1}", DslError, 1, 4),
    ("A^{a1}^{a2}", DslError, 1, 7),
])
def test_error_catalog(text, cls, line, col):
    with pytest.raises(cls) as info:
        parse(text)
    assert (info.value.line, info.value.col) == (line, col)
    assert info.value.to_json()["line"] == line


def test_type_clash_against_theory():
    th = Theory("classical")
    th.register_type("a", 2)
    th.add_operation("A", [], ["a"], {"0": [0.5, 0.5]})
    with pytest.raises(TypeClash) as info:
        parse("A^{a1} B_{b1}", th)
    assert (info.value.line, info.value.col) == (1, 11)
    th.register_type("b", 2)
    with pytest.raises(TypeClash):
        parse("A^{b1} B_{b1}", th)
    assert parse("A^{a1} B_{a1}", th).is_circuit


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet="AB[]^_{} a1b2!#x\n", max_size=40))
def test_fuzz_only_domain_errors(text):
    try:
        parse(text)
    except DslError:
        pass


def test_dot_export():
    c = parse(MEDIUM)
    out = export_dot(c)
    assert out.startswith('digraph "fragment" {') and "rankdir=BT;" in out
    assert out.count(" -> ") == 7
    assert '"C#1" [label="C"];' in out
    ranked = export_dot(c, foliate(c))
    assert ranked.count("rank=same") == 4
    assert '{ rank=same; "A#1"; "B#1"; }' in ranked


def test_dot_open_ports_and_outcomes():
    out = export_dot(parse("C[+]_{a2}^{a3}"), name="g")
    assert '"C#1" [label="C[+]"];' in out
    assert out.count("shape=point") == 2 and out.count("style=dashed") == 2
    assert '"C#1.in0" -> "C#1"' in out and '"C#1" -> "C#1.out0"' in out
