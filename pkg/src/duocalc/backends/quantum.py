"""Finite-dimensional quantum theory.

Preparations and effects are positive operators (trace <= 1 for states,
``I - P >= 0`` for effects); operations are trace non-increasing maps given by
Kraus operators of shape (prod N_out) x (prod N_in). Complex arithmetic stays
inside this module: every duotensor it hands out is real.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..errors import ShapeMismatch, TraceIncreasing
from ._tensor import kron_le, prod
from .classical import _wrap

HERMITIAN_TOL = 1e-12
EIG_FLOOR = -1e-10


def _as_complex_matrix(m) -> np.ndarray:
    """Accept nested lists of reals or of ``[re, im]`` pairs."""
    if isinstance(m, np.ndarray):
        return m.astype(complex)
    arr = np.asarray(m, dtype=float)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    return arr.astype(complex)


def complex_to_json(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


@dataclass(frozen=True, eq=False)
class QuantumOperation:
    input_types: tuple
    output_types: tuple
    kraus: tuple

    def __post_init__(self):
        object.__setattr__(self, "input_types", tuple(self.input_types))
        object.__setattr__(self, "output_types", tuple(self.output_types))
        ks = []
        for k in self.kraus:
            k = _as_complex_matrix(k)
            if k.ndim == 1:
                k = k.reshape(1, -1) if not self.output_types else k.reshape(-1, 1)
            k.flags.writeable = False
            ks.append(k)
        object.__setattr__(self, "kraus", tuple(ks))

    def check(self, dims: Mapping[str, int]) -> None:
        shape = (prod(dims[t] for t in self.output_types), prod(dims[t] for t in self.input_types))
        for i, k in enumerate(self.kraus):
            if k.shape != shape:
                raise ShapeMismatch(f"Kraus operator {i} has shape {k.shape}, expected {shape}")
        lam = np.linalg.eigvalsh(self.effect_sum(shape[1]))
        if lam.size and lam.max() > 1 + 1e-10:
            raise TraceIncreasing(f"sum K^dag K has eigenvalue {lam.max():.12g} > 1")

    def effect_sum(self, din: int) -> np.ndarray:
        acc = np.zeros((din, din), dtype=complex)
        for k in self.kraus:
            acc += k.conj().T @ k
        return acc

    def apply(self, rho: np.ndarray, dout: int) -> np.ndarray:
        out = np.zeros((dout, dout), dtype=complex)
        for k in self.kraus:
            out += k @ rho @ k.conj().T
        return out

    def to_json(self) -> dict:
        return {"kraus": [complex_to_json(k) for k in self.kraus]}


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def default_quantum_fiducials(n: int) -> list:
    """The n^2 operators |j><j|, (|j>+|k>)(<j|+<k|)/2 and (|j>+i|k>)(<j|-i<k|)/2."""
    eye = np.eye(n, dtype=complex)
    ops = [np.outer(eye[j], eye[j].conj()) for j in range(n)]
    for j, k in itertools.combinations(range(n), 2):
        v = (eye[j] + eye[k]) / np.sqrt(2)
        ops.append(np.outer(v, v.conj()))
    for j, k in itertools.combinations(range(n), 2):
        v = (eye[j] + 1j * eye[k]) / np.sqrt(2)
        ops.append(np.outer(v, v.conj()))
    return ops


class QuantumBackend:
    name = "quantum"

    def k_for(self, n: int) -> int:
        return n * n

    def default_fiducials(self, n: int):
        ops = default_quantum_fiducials(n)
        return [o.copy() for o in ops], [o.copy() for o in ops]

    def coerce(self, x) -> np.ndarray:
        return _as_complex_matrix(x)

    def _positivity(self, m: np.ndarray, n: int) -> tuple:
        if m.shape != (n, n):
            return None, f"shape ({n}, {n})"
        if not is_hermitian(m):
            return None, "hermiticity"
        lam = np.linalg.eigvalsh(m)
        if lam.min() < EIG_FLOOR:
            return None, "positivity"
        return lam, None

    def preparation_violation(self, rho: np.ndarray, n: int) -> str | None:
        lam, bad = self._positivity(rho, n)
        if bad:
            return bad
        if np.trace(rho).real > 1 + 1e-10:
            return "trace <= 1"
        return None

    def effect_violation(self, e: np.ndarray, n: int) -> str | None:
        lam, bad = self._positivity(e, n)
        if bad:
            return bad
        if lam.max() > 1 - EIG_FLOOR:
            return "I - P positive"
        return None

    def vectorize(self, x: np.ndarray) -> np.ndarray:
        return np.concatenate([x.real.ravel(), x.imag.ravel()])

    def probability(self, effect: np.ndarray, prep: np.ndarray) -> float:
        return float(np.trace(effect @ prep).real)

    def standard_closures(self, n: int):
        return np.eye(n, dtype=complex) / n, np.eye(n, dtype=complex)

    def preparation_operation(self, type_name: str, rho: np.ndarray) -> QuantumOperation:
        lam, vecs = np.linalg.eigh(rho)
        ks = [np.sqrt(max(l, 0.0)) * vecs[:, [i]] for i, l in enumerate(lam) if l > 1e-15]
        return QuantumOperation((), (type_name,), ks or [np.zeros((rho.shape[0], 1))])

    def effect_operation(self, type_name: str, e: np.ndarray) -> QuantumOperation:
        lam, vecs = np.linalg.eigh(e)
        ks = [np.sqrt(max(l, 0.0)) * vecs[:, [i]].conj().T for i, l in enumerate(lam) if l > 1e-15]
        return QuantumOperation((type_name,), (), ks or [np.zeros((1, e.shape[0]))])

    def make_operation(self, inputs: Sequence[str], outputs: Sequence[str], data) -> QuantumOperation:
        if isinstance(data, QuantumOperation):
            return data
        if isinstance(data, Mapping):
            if "kraus" not in data:
                raise ShapeMismatch("quantum operation needs a 'kraus' list")
            data = data["kraus"]
        return QuantumOperation(tuple(inputs), tuple(outputs), tuple(data))

    def combine(self, ops: Sequence[QuantumOperation]) -> QuantumOperation:
        first = ops[0]
        return QuantumOperation(first.input_types, first.output_types, tuple(k for op in ops for k in op.kraus))

    def all_black_values(self, op: QuantumOperation, theory) -> np.ndarray:
        in_k = [theory.types[t].k for t in op.input_types]
        out_k = [theory.types[t].k for t in op.output_types]
        dout = prod(theory.types[t].backend_dim for t in op.output_types)
        din = prod(theory.types[t].backend_dim for t in op.input_types)

        in_states = np.stack([
            kron_le([theory.fiducials[t].preparations[j] for t, j in zip(op.input_types, combo)])
            for combo in itertools.product(*[range(k) for k in in_k])
        ]).reshape(-1, din, din)
        out_effects = np.stack([
            kron_le([theory.fiducials[t].effects[i] for t, i in zip(op.output_types, combo)])
            for combo in itertools.product(*[range(k) for k in out_k])
        ]).reshape(-1, dout, dout)

        if op.kraus:
            ks = np.stack(op.kraus)
            sigma = np.einsum("kab,cbd,ked->cae", ks, in_states, ks.conj(), optimize=True)
        else:
            sigma = np.zeros((in_states.shape[0], dout, dout), dtype=complex)
        vals = np.einsum("oxy,cyx->co", out_effects, sigma, optimize=True)
        # imaginary residue is rounding only; clamp it away
        return vals.real.reshape(tuple(in_k) + tuple(out_k))


def quantum_all_black(op: QuantumOperation, theory, in_labels=None, out_labels=None):
    """All-black duotensor: Trace[(fiducial effects) $(fiducial preps)]."""
    op.check({t: theory.types[t].backend_dim for t in op.input_types + op.output_types})
    values = theory.backend.all_black_values(op, theory)
    return _wrap(op, theory, values, in_labels, out_labels)
