"""Random physical operations, theories and circuits for property tests."""

from __future__ import annotations

import numpy as np

from .circuit import Fragment, FragmentBuilder, OperationSpec, Port, Wire
from .theory import Theory

__all__ = [
    "random_z",
    "random_classical_family",
    "random_kraus",
    "random_quantum_family",
    "random_family",
    "random_theory",
    "random_fragment",
    "random_circuit",
    "random_classical_fiducials",
    "random_quantum_fiducials",
]


def random_z(rng: np.random.Generator, rows: int, cols: int, scale: float | None = None) -> np.ndarray:
    """Non-negative matrix with every column summing to ``scale`` (random in (0.3, 1] by default)."""
    z = rng.random((rows, cols)) + 1e-3
    z /= z.sum(axis=0, keepdims=True)
    s = rng.uniform(0.3, 1.0, size=cols) if scale is None else scale
    return z * s


def random_classical_family(rng, rows: int, cols: int, n_outcomes: int = 2, complete: bool = True) -> dict:
    """Outcome matrices whose sum is stochastic (or substochastic when not complete)."""
    total = random_z(rng, rows, cols, 1.0 if complete else None)
    weights = rng.random((n_outcomes, rows, cols)) + 1e-3
    weights /= weights.sum(axis=0)
    return {str(i): total * weights[i] for i in range(n_outcomes)}


def _ginibre(rng, r: int, dout: int, din: int) -> np.ndarray:
    return rng.normal(size=(r, dout, din)) + 1j * rng.normal(size=(r, dout, din))


def random_kraus(rng, dout: int, din: int, rank: int = 2, complete: bool = False) -> list:
    """Kraus operators with sum K^dag K <= I (== I when ``complete``).

    A complete set needs ``rank * dout >= din``; the rank is raised if necessary.
    """
    if complete:
        rank = max(rank, -(-din // dout))
        # orthonormal columns of the stacked Kraus matrix give sum K^dag K = I
        q, _ = np.linalg.qr(_ginibre(rng, rank, dout, din).reshape(rank * dout, din))
        return list(q.reshape(rank, dout, din))
    g = _ginibre(rng, rank, dout, din)
    s = np.einsum("kab,kac->bc", g.conj(), g)
    g = g * (rng.uniform(0.3, 1.0) / np.sqrt(np.linalg.eigvalsh(s).max()))
    return list(g)


def random_quantum_family(rng, dout: int, din: int, n_outcomes: int = 2, rank: int = 1,
                          complete: bool = True) -> dict:
    if complete:
        rank = max(rank, -(-din // (dout * n_outcomes)))
    ks = random_kraus(rng, dout, din, rank * n_outcomes, complete)
    return {str(i): ks[i * rank:(i + 1) * rank] for i in range(n_outcomes)}


def random_family(rng, theory: Theory, inputs, outputs, n_outcomes: int = 1, complete: bool = False) -> dict:
    dout = int(np.prod([theory.types[t].backend_dim for t in outputs], dtype=int))
    din = int(np.prod([theory.types[t].backend_dim for t in inputs], dtype=int))
    if theory.backend.name == "classical":
        return random_classical_family(rng, dout, din, n_outcomes, complete)
    return random_quantum_family(rng, dout, din, n_outcomes, rank=int(rng.integers(1, 3)), complete=complete)


def random_theory(rng, backend: str = "classical", dims=(2, 3), n_types: int = 2) -> Theory:
    th = Theory(backend)
    for i in range(n_types):
        th.register_type("abcdefgh"[i], int(rng.choice(dims)))
    return th


def random_fragment(rng, theory: Theory, n_ops: int, max_in: int = 2, max_out: int = 2,
                    max_live: int = 4, n_outcomes: int = 2, open_inputs: int = 0) -> Fragment:
    """Random valid fragment whose operations are registered in ``theory``.

    Operations are added one at a time; each consumes up to ``max_in`` live
    output ports and emits up to ``max_out`` new ones, keeping at most
    ``max_live`` wires live. Leftover live outputs stay open; ``open_inputs``
    unconsumed inputs are added to random operations.
    """
    types = sorted(theory.types)
    b = FragmentBuilder()
    live: list = []
    base = len(theory.operations)
    for n in range(n_ops):
        take = int(rng.integers(0, min(max_in, len(live)) + 1))
        picks = sorted(rng.choice(len(live), size=take, replace=False).tolist()) if take else []
        consumed = [live[i] for i in picks]
        live = [p for i, p in enumerate(live) if i not in picks]
        room = max(0, max_live - len(live))
        n_out = int(rng.integers(0, min(max_out, room) + 1))
        if not consumed and not n_out:
            n_out = 1 if room else 0
            if not n_out and live:
                consumed, live = [live[0]], live[1:]
        extra_in = []
        if open_inputs and (n_ops - n <= open_inputs or rng.random() < 0.5):
            extra_in = [str(rng.choice(types))]
            open_inputs -= 1
        ins = [t for _, t in consumed] + extra_in
        outs = [str(rng.choice(types)) for _ in range(n_out)]
        name = f"R{base + n}"
        theory.add_operation(name, ins, outs, random_family(rng, theory, ins, outs, n_outcomes))
        outcome = str(rng.integers(0, n_outcomes))
        iid = b.add(name, ins, outs, outcome=outcome)
        for slot, (port, _) in enumerate(consumed):
            b.wire(port.instance, port.slot, iid, slot)
        live += [(Port.output(iid, s), t) for s, t in enumerate(outs)]
    return b.build()


def random_circuit(rng, theory: Theory, n_ops: int, **kw) -> Fragment:
    """Random closed circuit of exactly ``n_ops`` operations (the last one absorbs every live wire)."""
    if n_ops < 2:
        name = f"R{len(theory.operations)}"
        theory.add_operation(name, [], [], random_family(rng, theory, [], [], 2))
        return Fragment().add(OperationSpec(name, (), (), "0"))[0]
    f = random_fragment(rng, theory, n_ops - 1, **kw)
    opens = sorted(f.open_outputs, key=Port.sort_key)
    ins = [f.port_type(p) for p in opens]
    name = f"R{len(theory.operations)}"
    theory.add_operation(name, ins, [], random_family(rng, theory, ins, [], 2))
    f, iid = f.add(OperationSpec(name, tuple(ins), (), str(rng.integers(0, 2))))
    return f.with_wires([Wire(p, Port.input(iid, s)) for s, p in enumerate(opens)])


def random_classical_fiducials(rng, n: int):
    """Random linearly independent physical fiducial preparations and effects."""
    while True:
        preps = [p * rng.uniform(0.5, 1.0) for p in rng.dirichlet(np.ones(n), size=n)]
        effects = list(rng.random((n, n)))
        if min(np.linalg.svd(np.stack(preps), compute_uv=False).min(),
               np.linalg.svd(np.stack(effects), compute_uv=False).min()) > 1e-2:
            return preps, effects


def _random_density(rng, n: int, rank: int) -> np.ndarray:
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_quantum_fiducials(rng, n: int):
    """Random linearly independent positive fiducial states and effects."""
    k = n * n
    while True:
        preps = [_random_density(rng, n, int(rng.integers(1, n + 1))) * rng.uniform(0.5, 1.0) for _ in range(k)]
        effects = []
        for _ in range(k):
            e = _random_density(rng, n, int(rng.integers(1, n + 1)))
            effects.append(e / np.linalg.eigvalsh(e).max() * rng.uniform(0.5, 1.0))
        vec = lambda xs: np.stack([np.concatenate([x.real.ravel(), x.imag.ravel()]) for x in xs])
        if min(np.linalg.svd(vec(preps), compute_uv=False)[k - 1],
               np.linalg.svd(vec(effects), compute_uv=False)[k - 1]) > 1e-2:
            return preps, effects
