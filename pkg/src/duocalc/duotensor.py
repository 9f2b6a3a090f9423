"""Dense duotensors: multi-index real arrays whose indices carry a colour.

Each index belongs to a port and records its direction (input/output), the
system type, and a colour. A black index is expressed against the fiducial
elements themselves (fiducial preparation on an input, fiducial effect on an
output); a white index carries expansion coefficients. The hopping metric of
the type converts one into the other.

Conventions used throughout:

* ``g_bb[i, j]`` is the probability of fiducial preparation ``j`` followed by
  fiducial effect ``i``; ``g_ww`` is its matrix inverse.
* Two indices may be summed together only if one is black and the other white.
* The canonical ("standard") colouring is inputs black, outputs white, so that
  wiring an output into an input never needs a recolouring step.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ColorClash,
    DirectionMismatch,
    DuplicatePort,
    IndexMismatch,
    MissingMetric,
    NoSuchPort,
    TypeMismatch,
)

__all__ = [
    "Color",
    "Direction",
    "IndexMeta",
    "Duotensor",
    "Proportionality",
    "ProportionalityResult",
    "recolor",
    "recolor_all",
    "contract",
    "outer",
    "linear_combine",
    "to_standard_form",
    "to_all_black",
    "identity_delta",
    "proportionality",
]


class Direction(str, enum.Enum):
    INPUT = "input"
    OUTPUT = "output"


class Color(str, enum.Enum):
    BLACK = "black"
    WHITE = "white"

    @property
    def flipped(self) -> "Color":
        return Color.WHITE if self is Color.BLACK else Color.BLACK

    @classmethod
    def parse(cls, value) -> "Color":
        if isinstance(value, Color):
            return value
        v = str(value).lower()
        if v in ("b", "black"):
            return cls.BLACK
        if v in ("w", "white"):
            return cls.WHITE
        raise ValueError(f"not a colour: {value!r}")


@dataclass(frozen=True)
class IndexMeta:
    label: str
    direction: Direction
    type_name: str
    color: Color
    dim: int

    def with_color(self, color: Color) -> "IndexMeta":
        return IndexMeta(self.label, self.direction, self.type_name, color, self.dim)

    def with_label(self, label: str) -> "IndexMeta":
        return IndexMeta(label, self.direction, self.type_name, self.color, self.dim)

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "direction": self.direction.value,
            "type": self.type_name,
            "color": self.color.value,
            "dim": self.dim,
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "IndexMeta":
        return cls(
            str(d["label"]),
            Direction(d["direction"]),
            str(d["type"]),
            Color.parse(d["color"]),
            int(d["dim"]),
        )


@dataclass(frozen=True, eq=False)
class Duotensor:
    """Immutable dense duotensor.

    ``values`` has one axis per entry of ``indices`` (row-major); a duotensor
    without indices is a scalar holding exactly one value.
    """

    indices: tuple
    values: np.ndarray

    def __post_init__(self):
        indices = tuple(self.indices)
        shape = tuple(m.dim for m in indices)
        values = np.array(self.values, dtype=float)
        if values.shape != shape:
            if values.size != math.prod(shape):
                raise IndexMismatch(
                    f"{values.size} values do not fit index dims {shape}"
                )
            values = values.reshape(shape)
        labels = [m.label for m in indices]
        if len(set(labels)) != len(labels):
            dup = sorted({x for x in labels if labels.count(x) > 1})
            raise DuplicatePort(f"repeated port labels {dup}")
        values.flags.writeable = False
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "values", values)

    @property
    def labels(self) -> tuple:
        return tuple(m.label for m in self.indices)

    @property
    def colors(self) -> tuple:
        return tuple(m.color for m in self.indices)

    @property
    def is_scalar(self) -> bool:
        return not self.indices

    def position(self, label: str) -> int:
        for i, m in enumerate(self.indices):
            if m.label == label:
                return i
        raise NoSuchPort(f"no index labelled {label!r} (have {list(self.labels)})")

    def meta(self, label: str) -> IndexMeta:
        return self.indices[self.position(label)]

    def item(self) -> float:
        if self.indices:
            raise IndexMismatch("duotensor is not a scalar")
        return float(self.values)

    def transpose(self, labels: Sequence[str]) -> "Duotensor":
        """Reorder indices to follow ``labels`` (which must be a permutation)."""
        if sorted(labels) != sorted(self.labels):
            raise IndexMismatch(f"{list(labels)} is not a permutation of {list(self.labels)}")
        perm = [self.position(x) for x in labels]
        return Duotensor(tuple(self.indices[p] for p in perm), np.transpose(self.values, perm))

    def relabel(self, mapping: Mapping[str, str]) -> "Duotensor":
        return Duotensor(
            tuple(m.with_label(mapping.get(m.label, m.label)) for m in self.indices),
            self.values,
        )

    def allclose(self, other: "Duotensor", atol: float = 1e-9) -> bool:
        return self.indices == other.indices and bool(
            np.all(np.abs(self.values - other.values) <= atol)
        )

    def to_json(self) -> dict:
        return {
            "indices": [m.to_json() for m in self.indices],
            "values": [float(x) for x in self.values.ravel()],
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "Duotensor":
        indices = tuple(IndexMeta.from_json(m) for m in d["indices"])
        return cls(indices, np.asarray(d["values"], dtype=float))

    def __repr__(self) -> str:
        idx = ", ".join(
            f"{m.label}:{m.type_name}{'<' if m.direction is Direction.INPUT else '>'}{m.color.value[0]}"
            for m in self.indices
        )
        return f"Duotensor([{idx}], shape={self.values.shape})"


def _apply_matrix(values: np.ndarray, matrix: np.ndarray, axis: int) -> np.ndarray:
    """new[..., i, ...] = sum_j matrix[i, j] * values[..., j, ...] along ``axis``."""
    out = np.tensordot(matrix, values, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def _metric_for(metrics, type_name: str):
    try:
        return metrics[type_name]
    except (KeyError, IndexError):
        raise MissingMetric(f"no hopping metric for type {type_name!r}") from None


def _hop_matrix(meta: IndexMeta, target: Color, metric) -> np.ndarray:
    # Outputs hop with g (or its inverse) directly; inputs with the transpose,
    # because the metric's row index is the effect and its column the preparation.
    m = metric.g_bb if target is Color.BLACK else metric.g_ww
    return m if meta.direction is Direction.OUTPUT else m.T


def recolor(t: Duotensor, port_label: str, target: Color, metric) -> Duotensor:
    """Change the colour of one index by hopping it through ``metric``."""
    target = Color.parse(target)
    pos = t.position(port_label)
    meta = t.indices[pos]
    if metric.type_name != meta.type_name:
        raise TypeMismatch(
            f"metric for {metric.type_name!r} applied to index {port_label!r} of type {meta.type_name!r}"
        )
    if meta.color is target:
        return t
    values = _apply_matrix(t.values, _hop_matrix(meta, target, metric), pos)
    indices = list(t.indices)
    indices[pos] = meta.with_color(target)
    return Duotensor(tuple(indices), values)


def recolor_all(t: Duotensor, colors, metrics) -> Duotensor:
    """Recolour every index.

    ``colors`` is a sequence aligned with the indices, a mapping from label to
    colour, or a callable ``IndexMeta -> Color``.
    """
    if callable(colors):
        wanted = [Color.parse(colors(m)) for m in t.indices]
    elif isinstance(colors, Mapping):
        wanted = [Color.parse(colors.get(m.label, m.color)) for m in t.indices]
    else:
        wanted = [Color.parse(c) for c in colors]
        if len(wanted) != len(t.indices):
            raise IndexMismatch(f"{len(wanted)} colours given for {len(t.indices)} indices")
    out = t
    for meta, color in zip(t.indices, wanted):
        if meta.color is not color:
            out = recolor(out, meta.label, color, _metric_for(metrics, meta.type_name))
    return out


def to_standard_form(t: Duotensor, metrics) -> Duotensor:
    """Inputs black, outputs white; index order is preserved."""
    return recolor_all(
        t, lambda m: Color.BLACK if m.direction is Direction.INPUT else Color.WHITE, metrics
    )


def to_all_black(t: Duotensor, metrics) -> Duotensor:
    return recolor_all(t, lambda m: Color.BLACK, metrics)


def contract(a: Duotensor, b: Duotensor, links: Iterable = ()) -> Duotensor:
    """Sum over linked index pairs ``(label_in_a, label_in_b)``.

    The result carries the unlinked indices of ``a`` followed by those of ``b``.
    """
    links = list(links)
    ax_a, ax_b = [], []
    for la, lb in links:
        pa, pb = a.position(la), b.position(lb)
        if pa in ax_a or pb in ax_b:
            raise DuplicatePort(f"port used in two links: {la!r} / {lb!r}")
        ma, mb = a.indices[pa], b.indices[pb]
        if ma.type_name != mb.type_name or ma.dim != mb.dim:
            raise TypeMismatch(f"cannot link {la!r} ({ma.type_name}) with {lb!r} ({mb.type_name})")
        if ma.direction is mb.direction:
            raise DirectionMismatch(f"link {la!r}-{lb!r} joins two {ma.direction.value}s")
        if ma.color is mb.color:
            raise ColorClash(f"link {la!r}-{lb!r} joins two {ma.color.value} dots")
        ax_a.append(pa)
        ax_b.append(pb)
    rest = [m for i, m in enumerate(a.indices) if i not in ax_a]
    rest += [m for i, m in enumerate(b.indices) if i not in ax_b]
    labels = [m.label for m in rest]
    if len(set(labels)) != len(labels):
        raise DuplicatePort(f"result would repeat labels {sorted({x for x in labels if labels.count(x) > 1})}")
    values = np.tensordot(a.values, b.values, axes=(ax_a, ax_b))
    return Duotensor(tuple(rest), values)


def outer(a: Duotensor, b: Duotensor) -> Duotensor:
    return contract(a, b, ())


def linear_combine(terms: Iterable) -> Duotensor:
    """Entrywise ``sum(c * t)`` over ``(coefficient, duotensor)`` pairs."""
    terms = list(terms)
    if not terms:
        raise IndexMismatch("linear_combine needs at least one term")
    first = terms[0][1]
    acc = np.zeros(first.values.shape)
    for c, t in terms:
        if t.indices != first.indices:
            raise IndexMismatch("terms do not share an identical index list")
        acc = acc + float(c) * t.values
    return Duotensor(first.indices, acc)


def identity_delta(type_name: str, dim: int, in_label: str, out_label: str,
                   in_color: Color = Color.WHITE) -> Duotensor:
    """Kronecker delta with opposite colours on its two ends (the padding identity)."""
    in_color = Color.parse(in_color)
    return Duotensor(
        (
            IndexMeta(in_label, Direction.INPUT, type_name, in_color, dim),
            IndexMeta(out_label, Direction.OUTPUT, type_name, in_color.flipped, dim),
        ),
        np.eye(dim),
    )


class Proportionality(str, enum.Enum):
    PROPORTIONAL = "proportional"
    NOT_PROPORTIONAL = "not_proportional"
    ZERO_DENOMINATOR = "zero_denominator"
    BOTH_ZERO = "both_zero"


@dataclass(frozen=True)
class ProportionalityResult:
    kind: Proportionality
    k: float | None = None

    @property
    def proportional(self) -> bool:
        return self.kind is Proportionality.PROPORTIONAL


ZERO_TOL = 1e-12


def proportionality(a: Duotensor, b: Duotensor, rel_tol: float = 1e-8,
                    zero_tol: float = ZERO_TOL) -> ProportionalityResult:
    """Decide whether ``a == k * b`` entrywise.

    ``k`` is the least-squares estimate; each entry must then satisfy
    ``|a - k b| <= rel_tol * max(|a|_inf, |k b|_inf) + 1e-12``.
    """
    if a.indices != b.indices:
        raise IndexMismatch("proportionality needs identical index lists (same colouring)")
    x = a.values.ravel()
    y = b.values.ravel()
    a_zero = np.max(np.abs(x), initial=0.0) <= zero_tol
    b_zero = np.max(np.abs(y), initial=0.0) <= zero_tol
    if b_zero:
        kind = Proportionality.BOTH_ZERO if a_zero else Proportionality.ZERO_DENOMINATOR
        return ProportionalityResult(kind)
    k = float(np.dot(x, y) / np.dot(y, y))
    ky = k * y
    scale = max(np.max(np.abs(x), initial=0.0), np.max(np.abs(ky), initial=0.0))
    if np.all(np.abs(x - ky) <= rel_tol * scale + 1e-12):
        return ProportionalityResult(Proportionality.PROPORTIONAL, k)
    return ProportionalityResult(Proportionality.NOT_PROPORTIONAL)
