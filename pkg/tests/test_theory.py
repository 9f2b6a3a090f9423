import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from duocalc import (
    CompositeType,
    FiducialTransform,
    SystemType,
    Theory,
    change_fiducials,
    compute_hopping_metric,
    parse,
    register_type,
    transform_to_fiducials,
)
from duocalc.backends import default_quantum_fiducials
from duocalc.errors import (
    DependentFiducials,
    DuplicateType,
    MissingOperation,
    SingularTransform,
    UnknownType,
    UnphysicalFiducial,
)
from duocalc.sampling import random_classical_fiducials, random_quantum_fiducials

from oracles import exact_inverse, gauss_jordan_inverse, trace_metric

# inverse of the qubit metric, frozen from exact_inverse on the rational entries
QUBIT_G_WW = np.array([[2, 1, -1, -1], [1, 2, -1, -1], [-1, -1, 2, 0], [-1, -1, 0, 2]], dtype=float)


def test_classical_default_registration():
    th = Theory("classical")
    t = register_type(th, "a", 2)
    assert (t.k, t.backend_dim) == (2, 2)
    fid = th.fiducials["a"]
    assert np.abs(np.stack(fid.preparations) - np.eye(2)).max() == 0
    assert np.abs(np.stack(fid.effects) - np.eye(2)).max() == 0


def test_quantum_default_registration_k():
    th = Theory("quantum")
    assert th.register_type("a", 2).k == 4
    assert th.register_type("b", 3).k == 9


def test_dependent_fiducials():
    th = Theory("classical")
    preps = [[1, 0, 0], [1, 0, 0], [0, 0, 1]]
    with pytest.raises(DependentFiducials):
        th.register_type("a", 3, (preps, np.eye(3)))
    assert "a" not in th.types


def test_unphysical_fiducial_reports_index_and_constraint():
    th = Theory("classical")
    with pytest.raises(UnphysicalFiducial) as err:
        th.register_type("a", 2, ([[1, 0], [0.7, 0.6]], np.eye(2)))
    assert err.value.index == 1 and "1" in err.value.constraint
    with pytest.raises(UnphysicalFiducial) as err:
        th.register_type("a", 2, (np.eye(2), [[1, 0], [0, 1.5]]))
    assert err.value.role == "effect"
    q = Theory("quantum")
    bad = default_quantum_fiducials(2)
    bad[2] = bad[2] * 2  # trace 2 state, eigenvalue 2 effect
    with pytest.raises(UnphysicalFiducial):
        q.register_type("a", 2, (bad, default_quantum_fiducials(2)))


def test_duplicate_and_unknown_type():
    th = Theory("classical")
    th.register_type("a", 2)
    with pytest.raises(DuplicateType):
        th.register_type("a", 3)
    with pytest.raises(UnknownType):
        th.hopping_metric("b")
    with pytest.raises(UnknownType):
        th.add_operation("X", ["b"], [], {"0": [1.0]})


def test_classical_metric_is_identity():
    for n in (2, 3, 4, 6):
        th = Theory("classical")
        th.register_type("a", n)
        m = compute_hopping_metric(th, "a")
        assert np.abs(m.g_bb - np.eye(n)).max() == 0
        assert np.abs(m.g_ww - np.eye(n)).max() == 0


def test_qubit_metric_against_trace_oracle():
    th = Theory("quantum")
    th.register_type("a", 2)
    m = th.hopping_metric("a")
    ops = default_quantum_fiducials(2)
    g = trace_metric(ops, ops)
    assert np.abs(m.g_bb - g).max() < 1e-12
    assert np.abs(m.g_ww - gauss_jordan_inverse(g)).max() < 1e-10
    assert np.abs(m.g_ww - QUBIT_G_WW).max() < 1e-10
    assert m.g_ww.min() < 0


def test_frozen_qubit_inverse_is_exact():
    g = [[1, 0, 0.5, 0.5], [0, 1, 0.5, 0.5], [0.5, 0.5, 1, 0.5], [0.5, 0.5, 0.5, 1]]
    assert np.abs(np.array(exact_inverse(g), dtype=float) - QUBIT_G_WW).max() == 0


@pytest.mark.parametrize("backend,n", [("classical", 2), ("classical", 5), ("quantum", 2), ("quantum", 3)])
def test_metric_invariants(backend, n):
    th = Theory(backend)
    th.register_type("a", n)
    m = th.hopping_metric("a")
    eye = np.eye(m.g_bb.shape[0])
    assert np.abs(m.g_bb @ m.g_ww - eye).max() <= 1e-10
    assert np.abs(m.g_ww @ m.g_bb - eye).max() <= 1e-10
    assert m.g_bb.min() >= 0 and m.g_bb.max() <= 1 + 1e-12


def test_composite_type():
    a, b, c = SystemType("a", 4, 2), SystemType("b", 9, 3), SystemType("c", 2, 2)
    left = CompositeType.of(CompositeType.of(a, b), c)
    right = CompositeType.of(a, CompositeType.of(b, c))
    assert left == right and left.names == ("a", "b", "c")
    assert left.k == 72 and left.backend_dim == 12


def test_operation_lookup_and_totals():
    th = Theory("classical")
    th.register_type("a", 2)
    th.add_operation("M", ["a"], [], {"h": [1, 0], "t": [0, 1]})
    spec = parse("M[h]_{a1}").spec("M#1")
    assert np.abs(th.operation(spec).z - [[1, 0]]).max() == 0
    total = th.operation(spec.with_outcome(None))
    assert np.abs(total.z - [[1, 1]]).max() == 0
    assert np.abs(th.operation(spec.with_outcome("I")).z - total.z).max() == 0
    assert th.operations["M"].is_complete()
    with pytest.raises(MissingOperation):
        th.operation(spec.with_outcome("x"))
    with pytest.raises(MissingOperation):
        th.operation(parse("N_{a1}").spec("N#1"))


def test_identity_transform_keeps_everything(rng):
    th = Theory("quantum")
    th.register_type("a", 2)
    th.add_operation("U", ["a"], ["a"], {"0": [np.eye(2)]})
    new = change_fiducials(th, "a", FiducialTransform.identity("a", 4))
    assert np.abs(new.hopping_metric("a").g_bb - th.hopping_metric("a").g_bb).max() == 0
    spec = parse("U_{a1}^{a2}").spec("U#1")
    assert np.abs(new.all_black(spec).values - th.all_black(spec).values).max() == 0
    assert th.types["a"] is not None and new is not th


def test_permutation_transform_permutes_columns():
    th = Theory("classical")
    th.register_type("a", 2)
    th.add_operation("Z", ["a"], ["a"], {"0": [[0.9, 0.2], [0.1, 0.8]]})
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    new = change_fiducials(th, "a", FiducialTransform("a", np.eye(2), swap))
    spec = parse("Z_{a1}^{a2}").spec("Z#1")
    old_v, new_v = th.all_black(spec).values, new.all_black(spec).values
    # values are indexed [input prep, output effect]; the input axis is permuted
    assert np.abs(new_v - old_v[::-1, :]).max() == 0


def test_singular_transform():
    with pytest.raises(SingularTransform):
        FiducialTransform("a", np.ones((2, 2)), np.eye(2))
    with pytest.raises(SingularTransform):
        FiducialTransform("a", np.eye(2), np.zeros((2, 3)))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_change_fiducials_recovers_target_set(seed):
    rng = np.random.default_rng(seed)
    th = Theory("classical")
    th.register_type("a", 3)
    preps, effects = random_classical_fiducials(rng, 3)
    new = change_fiducials(th, "a", transform_to_fiducials(th, "a", preps, effects))
    assert np.abs(np.stack(new.fiducials["a"].preparations) - np.stack(preps)).max() < 1e-9
    assert np.abs(np.stack(new.fiducials["a"].effects) - np.stack(effects)).max() < 1e-9


def test_change_fiducials_quantum_target(rng):
    th = Theory("quantum")
    th.register_type("a", 2)
    preps, effects = random_quantum_fiducials(rng, 2)
    new = change_fiducials(th, "a", transform_to_fiducials(th, "a", preps, effects))
    for got, want in zip(new.fiducials["a"].preparations, preps):
        assert np.abs(got - want).max() < 1e-9
