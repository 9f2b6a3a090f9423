"""Classical probability theory.

States are (sub-normalised) probability vectors over ``N`` underlying states,
effects are response vectors with entries in [0, 1], and an operation is a
non-negative matrix ``Z`` whose columns sum to at most one. The probability of
a preparation, operation and effect in sequence is ``r . Z p``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..duotensor import Color, Direction, Duotensor, IndexMeta
from ..errors import ShapeMismatch, UnphysicalZ
from ._tensor import apply_along, prod, split_axes

TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ClassicalOperation:
    input_types: tuple
    output_types: tuple
    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "input_types", tuple(self.input_types))
        object.__setattr__(self, "output_types", tuple(self.output_types))
        z = np.array(self.z, dtype=float)
        if z.ndim == 1:
            # a bare vector is a preparation column or an effect row
            z = z.reshape(1, -1) if not self.output_types else z.reshape(-1, 1)
        z.flags.writeable = False
        object.__setattr__(self, "z", z)

    def check(self, dims: Mapping[str, int]) -> None:
        shape = (prod(dims[t] for t in self.output_types), prod(dims[t] for t in self.input_types))
        if self.z.shape != shape:
            raise ShapeMismatch(f"Z has shape {self.z.shape}, expected {shape}")
        if np.any(self.z < -TOL):
            raise UnphysicalZ(f"Z has negative entry {self.z.min():.3g}")
        cols = self.z.sum(axis=0)
        if np.any(cols > 1 + TOL):
            raise UnphysicalZ(f"Z column sums up to {cols.max():.6g} > 1")

    def column_sums(self) -> np.ndarray:
        return self.z.sum(axis=0)

    def is_stochastic(self, tol: float = TOL) -> bool:
        return bool(np.all(self.z >= -tol) and np.all(np.abs(self.column_sums() - 1) <= tol))

    def to_json(self) -> dict:
        return {"classical_matrix": self.z.tolist()}


class ClassicalBackend:
    name = "classical"

    def k_for(self, n: int) -> int:
        return n

    def default_fiducials(self, n: int):
        eye = np.eye(n)
        return [eye[j].copy() for j in range(n)], [eye[i].copy() for i in range(n)]

    def coerce(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float).ravel()

    def preparation_violation(self, p: np.ndarray, n: int) -> str | None:
        if p.shape != (n,):
            return f"shape ({n},)"
        if np.any(p < -TOL):
            return "non-negative entries"
        if p.sum() > 1 + TOL:
            return "total probability <= 1"
        return None

    def effect_violation(self, r: np.ndarray, n: int) -> str | None:
        if r.shape != (n,):
            return f"shape ({n},)"
        if np.any(r < -TOL) or np.any(r > 1 + TOL):
            return "entries in [0, 1]"
        return None

    def vectorize(self, x: np.ndarray) -> np.ndarray:
        return x

    def probability(self, effect: np.ndarray, prep: np.ndarray) -> float:
        return float(effect @ prep)

    def standard_closures(self, n: int):
        return np.full(n, 1.0 / n), np.ones(n)

    def preparation_operation(self, type_name: str, p: np.ndarray) -> ClassicalOperation:
        return ClassicalOperation((), (type_name,), p.reshape(-1, 1))

    def effect_operation(self, type_name: str, r: np.ndarray) -> ClassicalOperation:
        return ClassicalOperation((type_name,), (), r.reshape(1, -1))

    def make_operation(self, inputs: Sequence[str], outputs: Sequence[str], data) -> ClassicalOperation:
        if isinstance(data, ClassicalOperation):
            return data
        if isinstance(data, Mapping):
            if "classical_matrix" not in data:
                raise ShapeMismatch("classical operation needs a 'classical_matrix'")
            data = data["classical_matrix"]
        return ClassicalOperation(tuple(inputs), tuple(outputs), data)

    def combine(self, ops: Sequence[ClassicalOperation]) -> ClassicalOperation:
        first = ops[0]
        return ClassicalOperation(first.input_types, first.output_types, sum(op.z for op in ops))

    def all_black_values(self, op: ClassicalOperation, theory) -> np.ndarray:
        dims = [theory.types[t].backend_dim for t in op.output_types], [
            theory.types[t].backend_dim for t in op.input_types
        ]
        t = split_axes(op.z, *dims)
        n_out = len(op.output_types)
        for ax, name in enumerate(op.output_types):
            r = np.stack(theory.fiducials[name].effects)  # (k, N)
            t = apply_along(t, r, ax)
        for ax, name in enumerate(op.input_types):
            p = np.stack(theory.fiducials[name].preparations)  # (k, N)
            t = apply_along(t, p, n_out + ax)
        perm = list(range(n_out, t.ndim)) + list(range(n_out))
        return np.transpose(t, perm)


def classical_all_black(op: ClassicalOperation, theory, in_labels=None, out_labels=None) -> Duotensor:
    """All-black duotensor: fiducial preparations on inputs, fiducial effects on outputs."""
    op.check({t: theory.types[t].backend_dim for t in op.input_types + op.output_types})
    values = theory.backend.all_black_values(op, theory)
    return _wrap(op, theory, values, in_labels, out_labels)


def _wrap(op, theory, values, in_labels, out_labels) -> Duotensor:
    in_labels = in_labels or [f"in{i}" for i in range(len(op.input_types))]
    out_labels = out_labels or [f"out{i}" for i in range(len(op.output_types))]
    idx = [
        IndexMeta(lab, Direction.INPUT, t, Color.BLACK, theory.types[t].k)
        for lab, t in zip(in_labels, op.input_types)
    ] + [
        IndexMeta(lab, Direction.OUTPUT, t, Color.BLACK, theory.types[t].k)
        for lab, t in zip(out_labels, op.output_types)
    ]
    return Duotensor(tuple(idx), values)
