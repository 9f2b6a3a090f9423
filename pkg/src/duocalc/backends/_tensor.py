"""Composite-system index helpers shared by the backends and the oracles.

Composite indices are little-endian over the listed factor order: the first
factor varies fastest. ``kron_le([A, B])`` is therefore ``np.kron(B, A)``.
"""

from __future__ import annotations

import math
from functools import reduce
from typing import Sequence

import numpy as np


def kron_le(mats: Sequence[np.ndarray]) -> np.ndarray:
    mats = [np.atleast_1d(np.asarray(m)) for m in mats]
    if not mats:
        return np.ones((1, 1))
    return reduce(lambda acc, m: np.kron(m, acc), mats[1:], mats[0])


def flat_index_le(digits: Sequence[int], dims: Sequence[int]) -> int:
    idx, stride = 0, 1
    for d, n in zip(digits, dims):
        idx += d * stride
        stride *= n
    return idx


def split_axes(matrix: np.ndarray, out_dims: Sequence[int], in_dims: Sequence[int]) -> np.ndarray:
    """Reshape a (prod out) x (prod in) matrix into axes (out_1..out_n, in_1..in_m)."""
    n, m = len(out_dims), len(in_dims)
    t = np.reshape(matrix, tuple(reversed(out_dims)) + tuple(reversed(in_dims)))
    perm = list(reversed(range(n))) + [n + i for i in reversed(range(m))]
    return np.transpose(t, perm)


def apply_along(values: np.ndarray, matrix: np.ndarray, axis: int) -> np.ndarray:
    out = np.tensordot(matrix, values, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def prod(dims) -> int:
    return math.prod(dims)
