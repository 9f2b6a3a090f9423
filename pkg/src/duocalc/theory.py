"""System types, fiducial sets, hopping metrics and the theory registry.

A :class:`Theory` is bound to one backend (classical or quantum). Each
registered type gets a fiducial set of ``k`` preparations and ``k`` effects;
the hopping metric ``g_bb[i, j]`` is the probability of fiducial preparation
``j`` followed by fiducial effect ``i`` and ``g_ww`` is its inverse.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .backends import get_backend
from .circuit import CLOSE_INPUT, CLOSE_OUTPUT, OperationSpec
from .duotensor import Color, Direction, Duotensor, IndexMeta
from .errors import (
    BackendMismatch,
    DependentFiducials,
    DuplicateType,
    MissingOperation,
    SingularMetric,
    SingularTransform,
    UnknownType,
    UnphysicalFiducial,
)

__all__ = [
    "SystemType",
    "CompositeType",
    "FiducialSet",
    "HoppingMetric",
    "FiducialTransform",
    "OperationFamily",
    "Theory",
    "compute_hopping_metric",
    "register_type",
    "change_fiducials",
    "transform_duotensor",
    "transform_to_fiducials",
]

INDEPENDENCE_TOL = 1e-9
MAX_CONDITION = 1e12
INVERSE_TOL = 1e-10
TOTAL = "I"


@dataclass(frozen=True)
class SystemType:
    name: str
    k: int
    backend_dim: int

    def __post_init__(self):
        if self.k < 1 or self.backend_dim < 1:
            raise ValueError("k and backend_dim must be positive")


@dataclass(frozen=True)
class CompositeType:
    """Ordered grouping of system types; nested composites are flattened."""

    factors: tuple

    @classmethod
    def of(cls, *parts) -> "CompositeType":
        flat = []
        for p in parts:
            flat.extend(p.factors if isinstance(p, CompositeType) else (p,))
        return cls(tuple(flat))

    @property
    def names(self) -> tuple:
        return tuple(f.name for f in self.factors)

    @property
    def k(self) -> int:
        return int(np.prod([f.k for f in self.factors], dtype=int))

    @property
    def backend_dim(self) -> int:
        return int(np.prod([f.backend_dim for f in self.factors], dtype=int))


@dataclass(frozen=True, eq=False)
class FiducialSet:
    type_name: str
    preparations: tuple
    effects: tuple


@dataclass(frozen=True, eq=False)
class HoppingMetric:
    type_name: str
    g_bb: np.ndarray
    g_ww: np.ndarray
    condition_estimate: float


@dataclass(frozen=True, eq=False)
class FiducialTransform:
    """Old fiducials in terms of new ones.

    ``effect_matrix[a, b]``: old effect ``a`` = sum_b M[a, b] * new effect ``b``;
    ``prep_matrix`` likewise for preparations.
    """

    type_name: str
    effect_matrix: np.ndarray
    prep_matrix: np.ndarray

    def __post_init__(self):
        for name in ("effect_matrix", "prep_matrix"):
            m = np.array(getattr(self, name), dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise SingularTransform(f"{name} must be square, got shape {m.shape}")
            cond = np.linalg.cond(m)
            if not np.isfinite(cond) or cond > MAX_CONDITION:
                raise SingularTransform(f"{name} is singular (condition {cond:.3e})")
            inv = np.linalg.inv(m)
            eye = np.eye(m.shape[0])
            if np.max(np.abs(m @ inv - eye)) > INVERSE_TOL or np.max(np.abs(inv @ m - eye)) > INVERSE_TOL:
                raise SingularTransform(f"{name} inverse fails the identity check")
            m.flags.writeable = False
            inv.flags.writeable = False
            object.__setattr__(self, name, m)
            object.__setattr__(self, name.replace("matrix", "inverse"), inv)

    @classmethod
    def identity(cls, type_name: str, k: int) -> "FiducialTransform":
        return cls(type_name, np.eye(k), np.eye(k))


@dataclass(frozen=True, eq=False)
class OperationFamily:
    """One apparatus with one setting and its possible outcome sets.

    ``total`` is the coarse-grained operation over every listed outcome.
    """

    apparatus_id: str
    input_types: tuple
    output_types: tuple
    outcomes: Mapping
    total: object

    def is_complete(self, tol: float = 1e-10) -> bool:
        """Whether the outcomes sum to a deterministic (normalised) operation."""
        if hasattr(self.total, "z"):
            return self.total.is_stochastic(tol)
        din = self.total.kraus[0].shape[1]
        return bool(np.max(np.abs(self.total.effect_sum(din) - np.eye(din))) <= tol)


def _check_independent(vectors: Sequence[np.ndarray], role: str, type_name: str) -> None:
    mat = np.stack(vectors)
    s = np.linalg.svd(mat, compute_uv=False)
    if s[0] == 0 or s[-1] / s[0] <= INDEPENDENCE_TOL or len(s) < len(vectors):
        raise DependentFiducials(
            f"fiducial {role} for type {type_name!r} are linearly dependent "
            f"(sigma_min/sigma_max = {s[-1] / s[0] if s[0] else 0.0:.3e})"
        )


def compute_hopping_metric(theory: "Theory", type_name: str) -> HoppingMetric:
    fid = theory.fiducials[type_name]
    be = theory.backend
    k = len(fid.preparations)
    g = np.empty((k, k))
    for i, e in enumerate(fid.effects):
        for j, p in enumerate(fid.preparations):
            g[i, j] = be.probability(e, p)
    cond = float(np.linalg.cond(g))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularMetric(type_name, cond)
    # LAPACK getrf/getri: LU with partial pivoting
    g_ww = np.linalg.inv(g)
    g.flags.writeable = False
    g_ww.flags.writeable = False
    return HoppingMetric(type_name, g, g_ww, cond)


class Theory:
    """Registry of system types, fiducials and operations for one backend."""

    def __init__(self, backend="classical"):
        self.backend = get_backend(backend)
        self._types: dict = {}
        self._fiducials: dict = {}
        self._metrics: dict = {}
        self._operations: dict = {}
        self._closures: dict = {}
        self._black_cache: dict = {}

    # registry views
    @property
    def types(self) -> Mapping[str, SystemType]:
        return MappingProxyType(self._types)

    @property
    def fiducials(self) -> Mapping[str, FiducialSet]:
        return MappingProxyType(self._fiducials)

    @property
    def operations(self) -> Mapping[str, OperationFamily]:
        return MappingProxyType(self._operations)

    def dims(self) -> dict:
        return {name: t.k for name, t in self._types.items()}

    def register_type(self, name: str, backend_dim: int, fiducials="default") -> SystemType:
        if name in self._types:
            raise DuplicateType(f"type {name!r} already registered")
        k = self.backend.k_for(int(backend_dim))
        if isinstance(fiducials, str):
            if fiducials != "default":
                raise ValueError(f"unknown fiducial choice {fiducials!r}")
            preps, effects = self.backend.default_fiducials(int(backend_dim))
        elif isinstance(fiducials, Mapping):
            preps, effects = fiducials["preparations"], fiducials["effects"]
        else:
            preps, effects = fiducials
        fid = self._validated_fiducials(name, int(backend_dim), k, preps, effects)
        stype = SystemType(name, k, int(backend_dim))
        self._types[name] = stype
        self._fiducials[name] = fid
        try:
            self._metrics[name] = compute_hopping_metric(self, name)
        except SingularMetric:
            del self._types[name], self._fiducials[name]
            raise
        return stype

    def _validated_fiducials(self, name, n, k, preps, effects) -> FiducialSet:
        be = self.backend
        preps = [be.coerce(p) for p in preps]
        effects = [be.coerce(e) for e in effects]
        for role, items in (("preparations", preps), ("effects", effects)):
            if len(items) != k:
                raise DependentFiducials(f"type {name!r} needs exactly {k} fiducial {role}, got {len(items)}")
        for i, p in enumerate(preps):
            bad = be.preparation_violation(p, n)
            if bad:
                raise UnphysicalFiducial("preparation", i, bad, name)
        for i, e in enumerate(effects):
            bad = be.effect_violation(e, n)
            if bad:
                raise UnphysicalFiducial("effect", i, bad, name)
        _check_independent([be.vectorize(p) for p in preps], "preparations", name)
        _check_independent([be.vectorize(e) for e in effects], "effects", name)
        for x in preps + effects:
            x.flags.writeable = False
        return FiducialSet(name, tuple(preps), tuple(effects))

    def hopping_metric(self, type_name: str) -> HoppingMetric:
        try:
            return self._metrics[type_name]
        except KeyError:
            raise UnknownType(f"type {type_name!r} is not registered") from None

    @property
    def metrics(self) -> Mapping[str, HoppingMetric]:
        return MappingProxyType(self._metrics)

    def set_closure(self, type_name: str, preparation=None, effect=None) -> None:
        """Override the standard closing devices for a type."""
        stype = self._require_type(type_name)
        prep, eff = self._closures.get(type_name, self.backend.standard_closures(stype.backend_dim))
        if preparation is not None:
            prep = self.backend.coerce(preparation)
            bad = self.backend.preparation_violation(prep, stype.backend_dim)
            if bad:
                raise UnphysicalFiducial("closure preparation", 0, bad, type_name)
        if effect is not None:
            eff = self.backend.coerce(effect)
            bad = self.backend.effect_violation(eff, stype.backend_dim)
            if bad:
                raise UnphysicalFiducial("closure effect", 0, bad, type_name)
        self._closures[type_name] = (prep, eff)
        self._black_cache.clear()

    def closures(self, type_name: str):
        stype = self._require_type(type_name)
        return self._closures.get(type_name) or self.backend.standard_closures(stype.backend_dim)

    def _require_type(self, name: str) -> SystemType:
        try:
            return self._types[name]
        except KeyError:
            raise UnknownType(f"type {name!r} is not registered") from None

    def add_operation(self, apparatus_id: str, inputs: Iterable[str] = (), outputs: Iterable[str] = (),
                      outcomes=None) -> OperationFamily:
        """Register an apparatus with its outcome sets.

        ``outcomes`` maps outcome labels to backend operations or their raw data
        (a ``Z`` matrix for classical, a list of Kraus operators for quantum).
        A single bare operation is stored under the label ``"0"``.
        """
        inputs, outputs = tuple(inputs), tuple(outputs)
        for t in inputs + outputs:
            self._require_type(t)
        if outcomes is None:
            raise MissingOperation(f"operation {apparatus_id!r} needs at least one outcome")
        if not isinstance(outcomes, Mapping):
            outcomes = {"0": outcomes}
        dims = {t: self._types[t].backend_dim for t in inputs + outputs}
        built = {}
        for label, data in outcomes.items():
            op = self.backend.make_operation(inputs, outputs, data)
            if op.input_types != inputs or op.output_types != outputs:
                raise BackendMismatch(f"outcome {label!r} of {apparatus_id!r} has mismatched port types")
            op.check(dims)
            built[str(label)] = op
        total = self.backend.combine(list(built.values()))
        total.check(dims)
        fam = OperationFamily(apparatus_id, inputs, outputs, MappingProxyType(built), total)
        self._operations[apparatus_id] = fam
        self._black_cache = {k: v for k, v in self._black_cache.items() if k[0] != apparatus_id}
        return fam

    def operation(self, spec: OperationSpec):
        """Backend operation for an instance spec (closures and coarse-grained totals included)."""
        if spec.apparatus_id == CLOSE_INPUT:
            (t,) = spec.output_types
            return self.backend.preparation_operation(t, self.closures(t)[0])
        if spec.apparatus_id == CLOSE_OUTPUT:
            (t,) = spec.input_types
            return self.backend.effect_operation(t, self.closures(t)[1])
        fam = self._operations.get(spec.apparatus_id)
        if fam is None:
            raise MissingOperation(f"no operation {spec.apparatus_id!r} in theory")
        if (fam.input_types, fam.output_types) != (spec.input_types, spec.output_types):
            raise MissingOperation(
                f"{spec.apparatus_id!r} has ports {fam.input_types}->{fam.output_types}, "
                f"instance declares {spec.input_types}->{spec.output_types}"
            )
        label = spec.outcome_label
        if label is None or (label == TOTAL and TOTAL not in fam.outcomes):
            return fam.total
        try:
            return fam.outcomes[label]
        except KeyError:
            raise MissingOperation(f"{spec.apparatus_id!r} has no outcome {label!r}") from None

    def all_black(self, spec: OperationSpec, in_labels: Sequence[str] | None = None,
                  out_labels: Sequence[str] | None = None) -> Duotensor:
        key = (spec.apparatus_id, spec.outcome_label, spec.input_types, spec.output_types)
        values = self._black_cache.get(key)
        if values is None:
            op = self.operation(spec)
            values = self.backend.all_black_values(op, self)
            values.flags.writeable = False
            self._black_cache[key] = values
        in_labels = in_labels or [f"in{i}" for i in range(len(spec.input_types))]
        out_labels = out_labels or [f"out{i}" for i in range(len(spec.output_types))]
        idx = [IndexMeta(l, Direction.INPUT, t, Color.BLACK, self._types[t].k)
               for l, t in zip(in_labels, spec.input_types)]
        idx += [IndexMeta(l, Direction.OUTPUT, t, Color.BLACK, self._types[t].k)
                for l, t in zip(out_labels, spec.output_types)]
        return Duotensor(tuple(idx), values)

    def copy(self) -> "Theory":
        new = Theory(self.backend)
        new._types = dict(self._types)
        new._fiducials = dict(self._fiducials)
        new._metrics = dict(self._metrics)
        new._operations = dict(self._operations)
        new._closures = dict(self._closures)
        return new

    def __repr__(self) -> str:
        return f"Theory({self.backend.name}, types={sorted(self._types)}, operations={sorted(self._operations)})"


def change_fiducials(theory: Theory, type_name: str, transform: FiducialTransform) -> Theory:
    """New theory whose fiducials for ``type_name`` are expressed by ``transform``.

    With ``old = M @ new`` for both effects and preparations, the new sets are
    ``M^-1 @ old``. The result is validated like any registration.
    """
    stype = theory._require_type(type_name)
    if transform.effect_matrix.shape != (stype.k, stype.k):
        raise SingularTransform(f"transform is {transform.effect_matrix.shape}, type has k={stype.k}")
    fid = theory.fiducials[type_name]
    old_e = np.stack(fid.effects)
    old_p = np.stack(fid.preparations)
    new_e = np.tensordot(transform.effect_inverse, old_e, axes=([1], [0]))
    new_p = np.tensordot(transform.prep_inverse, old_p, axes=([1], [0]))
    new = theory.copy()
    del new._types[type_name], new._fiducials[type_name], new._metrics[type_name]
    new._black_cache = {}
    new.register_type(type_name, stype.backend_dim, (list(new_p), list(new_e)))
    return new


def transform_to_fiducials(theory: Theory, type_name: str, preparations, effects) -> FiducialTransform:
    """The transform taking the current fiducials of ``type_name`` to the given sets.

    Solves ``old = M @ new`` in the backend's real vector space by least squares.
    """
    fid = theory.fiducials[type_name]
    be = theory.backend
    vec = lambda xs: np.stack([be.vectorize(be.coerce(x)) for x in xs])
    e_mat = vec(fid.effects) @ np.linalg.pinv(vec(effects))
    p_mat = vec(fid.preparations) @ np.linalg.pinv(vec(preparations))
    return FiducialTransform(type_name, e_mat, p_mat)


def transform_duotensor(t: Duotensor, transforms: Mapping[str, FiducialTransform]) -> Duotensor:
    """Re-express ``t`` against the new fiducials.

    White inputs go with the effect matrix, black outputs with its inverse,
    white outputs with the preparation matrix and black inputs with its inverse.
    """
    values = t.values
    for ax, m in enumerate(t.indices):
        tr = transforms.get(m.type_name)
        if tr is None:
            continue
        if m.direction is Direction.INPUT:
            mat = tr.effect_matrix.T if m.color is Color.WHITE else tr.prep_inverse
        else:
            mat = tr.effect_inverse if m.color is Color.BLACK else tr.prep_matrix.T
        values = np.moveaxis(np.tensordot(mat, values, axes=([1], [ax])), 0, ax)
    return Duotensor(t.indices, values)


def register_type(theory: Theory, name: str, backend_dim: int, fiducials="default") -> SystemType:
    return theory.register_type(name, backend_dim, fiducials)
