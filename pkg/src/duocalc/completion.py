"""Ratio verdicts by brute force: complete both fragments with random circuits.

A completion is one random preparation feeding every open input and one
random effect absorbing every open output, joined by an ancilla wire so the
two sides can be correlated (entangled, for the quantum backend). Each
completed circuit is evaluated with the backend oracle, never the engine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backends.oracle import oracle_probability
from .circuit import Fragment, OperationSpec, Port, Wire
from .engine import same_experiment
from .errors import NotSameExperiment
from .sampling import random_family

__all__ = ["CompletionVerdict", "complete", "completion_ratio_oracle"]

SPREAD_TOL = 1e-6
ZERO = 1e-14


@dataclass(frozen=True)
class CompletionVerdict:
    well_conditioned: bool | None
    ratios: tuple

    @property
    def k(self) -> float | None:
        return float(np.mean(self.ratios)) if self.well_conditioned else None


def complete(f: Fragment, prep_id: str | None, effect_id: str | None, ancilla: str | None) -> Fragment:
    """Wire the registered completion operations onto every open port of ``f``."""
    ins = sorted(f.open_inputs, key=Port.sort_key)
    outs = sorted(f.open_outputs, key=Port.sort_key)
    anc = [ancilla] if ancilla else []
    wires = []
    if ins:
        f, p = f.add(OperationSpec(prep_id, (), tuple(f.port_type(q) for q in ins) + tuple(anc), "0"), "~P")
        wires += [Wire(Port.output(p, s), q) for s, q in enumerate(ins)]
    if outs:
        f, e = f.add(OperationSpec(effect_id, tuple(f.port_type(q) for q in outs) + tuple(anc), (), "0"), "~E")
        wires += [Wire(q, Port.input(e, s)) for s, q in enumerate(outs)]
    if ins and outs and ancilla:
        wires.append(Wire(Port.output(p, len(ins)), Port.input(e, len(outs))))
    return f.with_wires(wires)


def completion_ratio_oracle(e_i: Fragment, e_j: Fragment, theory, samples: int = 25,
                            seed: int = 0, tol: float = SPREAD_TOL) -> CompletionVerdict:
    """Well conditioned iff Prob(e_i C) / Prob(e_j C) varies by less than ``tol``
    (relative) over ``samples`` random completions C.

    Returns ``well_conditioned=None`` when every completion gives a zero
    denominator.
    """
    if not same_experiment(e_i, e_j):
        raise NotSameExperiment("fragments differ in instances, settings or wiring")
    rng = np.random.default_rng(seed)
    th = theory.copy()
    ins = [e_i.port_type(q) for q in sorted(e_i.open_inputs, key=Port.sort_key)]
    outs = [e_i.port_type(q) for q in sorted(e_i.open_outputs, key=Port.sort_key)]
    ancilla = sorted(th.types, key=lambda t: -th.types[t].backend_dim)[0] if ins and outs else None
    anc = [ancilla] if ancilla else []
    ratios = []
    for n in range(samples):
        prep_id, effect_id = f"~prep{n}", f"~effect{n}"
        if ins:
            th.add_operation(prep_id, [], ins + anc, {"0": random_family(rng, th, [], ins + anc)["0"]})
        if outs:
            th.add_operation(effect_id, outs + anc, [], {"0": random_family(rng, th, outs + anc, [])["0"]})
        num = oracle_probability(complete(e_i, prep_id, effect_id, ancilla), th)
        den = oracle_probability(complete(e_j, prep_id, effect_id, ancilla), th)
        if abs(den) <= ZERO:
            if abs(num) <= ZERO:
                continue
            return CompletionVerdict(False, tuple(ratios) + (np.inf,))
        ratios.append(num / den)
    if not ratios:
        return CompletionVerdict(None, ())
    r = np.array(ratios)
    spread = (r.max() - r.min()) / max(np.abs(r).max(), ZERO)
    return CompletionVerdict(bool(spread < tol), tuple(ratios))
