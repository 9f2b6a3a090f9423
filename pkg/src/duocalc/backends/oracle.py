"""Reference circuit probabilities computed without any duotensor machinery.

Classical circuits are evaluated by summing over every joint assignment of
underlying states to wires. Quantum circuits are evaluated by pushing a joint
density operator through the circuit layer by layer (Kraus maps tensored with
identities on the untouched wires) and reading off the final trace.

These exist to check the contraction engine and are meant for desk-scale
circuits only.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from ..circuit import Fragment
from ..duotensor import Direction
from ..errors import InvalidCircuit, OracleTooLarge
from ._tensor import flat_index_le

MAX_ASSIGNMENTS = 10**6


def _wiring(c: Fragment):
    if not c.is_circuit:
        raise InvalidCircuit(f"oracle needs a closed circuit; open ports {[p.label for p in c.open_ports]}")
    feeds = {}
    for n, w in enumerate(c.wires):
        feeds[w.source] = n
        feeds[w.target] = n
    return feeds


def _order(c: Fragment) -> list:
    # depth-first post-order on predecessors; independent of the engine's layering
    preds = {iid: [] for iid in c.instance_ids}
    for w in c.wires:
        preds[w.target.instance].append(w.source.instance)
    order, state = [], {}

    def visit(u):
        if state.get(u) == 1:
            raise InvalidCircuit("closed loop")
        if state.get(u) == 2:
            return
        state[u] = 1
        for v in sorted(preds[u]):
            visit(v)
        state[u] = 2
        order.append(u)

    for iid in c.instance_ids:
        visit(iid)
    return order


def classical_oracle(c: Fragment, theory) -> float:
    feeds = _wiring(c)
    wire_dims = [theory.types[c.port_type(w.source)].backend_dim for w in c.wires]
    total = math.prod(wire_dims)
    if total > MAX_ASSIGNMENTS:
        raise OracleTooLarge(f"{total} joint assignments exceeds {MAX_ASSIGNMENTS}")
    factors = []
    for iid in c.instance_ids:
        spec = c.spec(iid)
        op = theory.operation(spec)
        out_wires = [feeds[(iid, Direction.OUTPUT, s)] for s in range(len(spec.output_types))]
        in_wires = [feeds[(iid, Direction.INPUT, s)] for s in range(len(spec.input_types))]
        factors.append((op.z, out_wires, in_wires,
                        [wire_dims[w] for w in out_wires], [wire_dims[w] for w in in_wires]))
    prob = 0.0
    for assignment in itertools.product(*[range(n) for n in wire_dims]):
        term = 1.0
        for z, ow, iw, od, idims in factors:
            row = flat_index_le([assignment[w] for w in ow], od)
            col = flat_index_le([assignment[w] for w in iw], idims)
            term *= z[row, col]
            if term == 0.0:
                break
        prob += term
    return prob


def _kraus_tensor(k: np.ndarray, out_dims, in_dims) -> np.ndarray:
    # row/column digits are little-endian, so the C-order reshape lists factors
    # last-to-first; flip each group back into slot order
    t = k.reshape(tuple(reversed(out_dims)) + tuple(reversed(in_dims)))
    n, m = len(out_dims), len(in_dims)
    return np.transpose(t, list(range(n - 1, -1, -1)) + list(range(n + m - 1, n - 1, -1)))


def quantum_oracle(c: Fragment, theory) -> float:
    feeds = _wiring(c)
    wire_dim = {n: theory.types[c.port_type(w.source)].backend_dim for n, w in enumerate(c.wires)}
    live: list = []
    state = np.ones((), dtype=complex)
    for iid in _order(c):
        spec = c.spec(iid)
        op = theory.operation(spec)
        in_w = [feeds[(iid, Direction.INPUT, s)] for s in range(len(spec.input_types))]
        out_w = [feeds[(iid, Direction.OUTPUT, s)] for s in range(len(spec.output_types))]
        in_dims = [wire_dim[w] for w in in_w]
        out_dims = [wire_dim[w] for w in out_w]
        L = len(live)
        ket_pos = [live.index(w) for w in in_w]
        bra_pos = [L + p for p in ket_pos]
        keep = [w for w in live if w not in in_w]
        keep_ket = [live.index(w) for w in keep]
        keep_bra = [L + p for p in keep_ket]
        n, m = len(out_w), len(in_w)
        new = None
        for k in op.kraus:
            kt = _kraus_tensor(k, out_dims, in_dims)
            # ket side: axes -> (out..., remaining state axes in original order)
            x = np.tensordot(kt, state, axes=(list(range(n, n + m)), ket_pos))
            rest = [p for p in range(2 * L) if p not in ket_pos]
            bra_in_x = [n + rest.index(p) for p in bra_pos]
            y = np.tensordot(kt.conj(), x, axes=(list(range(n, n + m)), bra_in_x))
            # y axes: bra_out(n), ket_out(n), remaining of x without bra inputs
            rest2 = [p for p in rest if p not in bra_pos]
            ket_keep_axes = [2 * n + rest2.index(p) for p in keep_ket]
            bra_keep_axes = [2 * n + rest2.index(p) for p in keep_bra]
            perm = ket_keep_axes + list(range(n, 2 * n)) + bra_keep_axes + list(range(n))
            y = np.transpose(y, perm)
            new = y if new is None else new + y
        if new is None:
            shape = tuple(wire_dim[w] for w in keep + out_w) * 2
            new = np.zeros(shape, dtype=complex)
        state = new
        live = keep + out_w
    if live:
        raise InvalidCircuit("wires left dangling after evaluation")
    return float(np.real(state))


def oracle_probability(c: Fragment, theory) -> float:
    """Circuit probability from the backend's native formalism."""
    if theory.backend.name == "classical":
        return classical_oracle(c, theory)
    return quantum_oracle(c, theory)
