"""Circuits transcribed from the worked examples, plus theories to run them."""

from __future__ import annotations

import numpy as np

from duocalc import Foliation, Theory, parse
from duocalc.sampling import random_family

SIMPLE = "A^{a1} B_{a1}"
FOUR_OP = "A^{a1 c2 a3} B_{a1 a4}^{b6} C_{c2 a3}^{a4 d5} D_{b6 d5}"
BIG = "A^{a1 a2} B^{b3 c4} C_{a2 b3}^{b5} D_{a1}^{c6 a7} E_{a7 b5}^{b8 c9} F_{c6 b8} G_{c9 c4}"
BIG_PARTS = (("A#1", "D#1", "F#1"), ("C#1", "E#1"), ("B#1", "G#1"))
MEDIUM = "A^{a1 b2} B^{c3 d4} C_{b2 c3}^{e5} D_{a1}^{f6} E_{e5 d4}^{g7} F_{f6 g7}"
# wires of MEDIUM by type letter, grouped as in the worked foliation
MEDIUM_FOLIATION = ("abcd", "fed", "fg")


def register_for(text, theory, rng, n_outcomes=2):
    """Register a random operation family for every apparatus in ``text``."""
    f = parse(text)
    for iid in f.instance_ids:
        spec = f.spec(iid)
        if spec.apparatus_id not in theory.operations:
            theory.add_operation(spec.apparatus_id, spec.input_types, spec.output_types,
                                 random_family(rng, theory, spec.input_types, spec.output_types, n_outcomes))
    return f


def theory_for(text, backend, rng, dims=None, n_outcomes=2):
    f = parse(text)
    types = sorted({f.port_type(p) for p in f.ports()})
    th = Theory(backend)
    for t in types:
        th.register_type(t, (dims or {}).get(t, 2))
    register_for(text, th, rng, n_outcomes)
    return th


def medium_foliation(c):
    by_type = {c.port_type(w.source): w for w in c.wires}
    return Foliation(tuple(frozenset(by_type[t] for t in group) for group in MEDIUM_FOLIATION))


def spin_theory(theta=0.0):
    """Qubit with A preparing cos(theta/2)|0> + sin(theta/2)|1>, B a spin-z and
    C a spin-x measurement (outcomes up/down and +/-)."""
    th = Theory("quantum")
    th.register_type("a", 2)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    th.add_operation("A", [], ["a"], {"0": [np.array([[c], [s]])]})
    th.add_operation("B", ["a"], ["a"], {"up": [np.diag([1.0, 0.0])], "down": [np.diag([0.0, 1.0])]})
    plus = np.array([1.0, 1.0]) / np.sqrt(2)
    minus = np.array([1.0, -1.0]) / np.sqrt(2)
    th.add_operation("C", ["a"], ["a"], {"+": [np.outer(plus, plus)], "-": [np.outer(minus, minus)]})
    return th


# the three examples; each pair is (numerator, denominator) of the ratio
TRIPTYCH = (
    ("A^{a1} C[+]_{a2}^{a3}", "A^{a1} C_{a2}^{a3}"),
    ("A^{a1} B[up]_{a1}^{!a2}", "A^{a1} B_{a1}^{!a2}"),
    ("A^{a1} B[up]_{a1}^{a2} C[+]_{a2}^{a3}", "A^{a1} B_{a1}^{a2} C[+]_{a2}^{a3}"),
)
