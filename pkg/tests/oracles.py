"""Reference implementations that share no code with the package.

Plain Python loops and lists only; numpy appears solely to hand arrays in
and out.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


def gauss_jordan_inverse(m):
    """Inverse by Gauss-Jordan elimination with partial pivoting, in plain floats."""
    n = len(m)
    a = [[float(x) for x in row] + [1.0 if i == j else 0.0 for j in range(n)] for i, row in enumerate(m)]
    for c in range(n):
        p = max(range(c, n), key=lambda r: abs(a[r][c]))
        if abs(a[p][c]) < 1e-14:
            raise ZeroDivisionError("singular")
        a[c], a[p] = a[p], a[c]
        piv = a[c][c]
        a[c] = [x / piv for x in a[c]]
        for r in range(n):
            if r != c and a[r][c] != 0.0:
                f = a[r][c]
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return np.array([row[n:] for row in a])


def exact_inverse(m):
    """Exact rational inverse of a matrix with rational entries."""
    n = len(m)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    for c in range(n):
        p = next(r for r in range(c, n) if a[r][c] != 0)
        a[c], a[p] = a[p], a[c]
        piv = a[c][c]
        a[c] = [x / piv for x in a[c]]
        for r in range(n):
            if r != c:
                f = a[r][c]
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return [row[n:] for row in a]


def dense_trace(a, b):
    """Re Tr(a b) by explicit double sum."""
    n = len(a)
    return sum(complex(a[i][k]) * complex(b[k][i]) for i in range(n) for k in range(n)).real


def trace_metric(effects, preps):
    return np.array([[dense_trace(e, p) for p in preps] for e in effects])


def loop_contract(a, a_axes, b, b_axes):
    """Sum over paired axes by explicit iteration; result axes: free a then free b."""
    a = np.asarray(a)
    b = np.asarray(b)
    fa = [i for i in range(a.ndim) if i not in a_axes]
    fb = [i for i in range(b.ndim) if i not in b_axes]
    shape = [a.shape[i] for i in fa] + [b.shape[i] for i in fb]
    out = np.zeros(shape)
    summed = [range(a.shape[i]) for i in a_axes]
    for free in itertools.product(*[range(n) for n in shape]):
        ia, ib = free[:len(fa)], free[len(fa):]
        total = 0.0
        for s in itertools.product(*summed):
            xa = [0] * a.ndim
            xb = [0] * b.ndim
            for pos, v in zip(fa, ia):
                xa[pos] = v
            for pos, v in zip(fb, ib):
                xb[pos] = v
            for pa, pb, v in zip(a_axes, b_axes, s):
                xa[pa] = v
                xb[pb] = v
            total += a[tuple(xa)] * b[tuple(xb)]
        out[free] = total
    return out


def rzp(effect, z, prep):
    """r . Z p by loops."""
    return sum(effect[i] * z[i][j] * prep[j] for i in range(len(effect)) for j in range(len(prep)))


def transitive_closure(nodes, edges):
    """reach[u] = nodes reachable from u by one or more edges (Warshall)."""
    nodes = list(nodes)
    idx = {u: i for i, u in enumerate(nodes)}
    n = len(nodes)
    r = [[False] * n for _ in range(n)]
    for u, v in edges:
        r[idx[u]][idx[v]] = True
    for k in range(n):
        for i in range(n):
            if r[i][k]:
                for j in range(n):
                    if r[k][j]:
                        r[i][j] = True
    return {u: {v for v in nodes if r[idx[u]][idx[v]]} for u in nodes}


def foliation_ok(wires, hypersurfaces):
    """Completeness and synchronicity via wire-to-wire transitive closure.

    ``wires`` are (src_instance, dst_instance, key) triples; a wire w2 is
    reachable from w1 when w2's source is w1's target or reachable from it.
    """
    wires = list(wires)
    edges = [(w1, w2) for w1 in wires for w2 in wires if w1 != w2 and w1[1] == w2[0]]
    reach = transitive_closure(wires, edges)
    covered = set().union(*hypersurfaces) if hypersurfaces else set()
    if set(wires) - covered:
        return False
    for h in hypersurfaces:
        for w in h:
            if reach[w] & set(h):
                return False
    return True

