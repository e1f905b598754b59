import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bmlab.acceptance import trusted_cbm
from bmlab.errors import ContractError, GeometryError
from bmlab.projlab import audit_projection, make_projection, projection_norms, random_projection
from bmlab.spaces import NormedSpace

from conftest import all_kinds

FAST = {"samples": 64, "dbm_evals": 2, "dbm_opts": {"resolution": 256, "grid": 16}}


def test_make_projection_examples():
    e2 = NormedSpace.lp(2, 2)
    P = make_projection([[1, 0]], [[0, 1]], e2)
    assert np.allclose(P.matrix, np.diag([1, 0])) and P.nontrivial
    P = make_projection([[1, 0]], [[1, -1]], e2)
    assert np.allclose(P.matrix, [[1, 1], [0, 0]])
    assert np.allclose(P.matrix @ P.matrix, P.matrix)
    assert np.allclose(P.matrix @ [1, 0], [1, 0]) and np.allclose(P.matrix @ [1, -1], 0)
    full = make_projection(np.eye(2), [], e2)
    assert np.allclose(full.matrix, np.eye(2)) and not full.nontrivial
    with pytest.raises(GeometryError):
        make_projection([[1, 1]], [[2, 2]], e2)
    with pytest.raises(GeometryError):
        make_projection([[1, 0]], [], e2)


def test_projection_norm_examples():
    a = projection_norms(make_projection([[1, 0]], [[0, 1]], NormedSpace.lp(2, 2)))
    assert a.norm_P.lower == pytest.approx(1) and a.norm_I_minus_P.lower == pytest.approx(1)
    P = make_projection([[1, 0]], [[1, -1]], NormedSpace.lp("inf", 2))
    a = projection_norms(P)
    assert a.norm_P.lower == pytest.approx(2) and a.norm_I_minus_P.lower == pytest.approx(1)
    a = projection_norms(make_projection([[1, 0]], [[1, -1]], NormedSpace.lp(2, 2)))
    assert a.norm_P.lower == pytest.approx(math.sqrt(2), abs=1e-9)
    assert a.norm_I_minus_P.lower == pytest.approx(math.sqrt(2), abs=1e-9)
    with pytest.raises(ContractError):
        projection_norms(make_projection(np.eye(2), [], NormedSpace.lp(2, 2)))


def test_audit_examples():
    a = audit_projection(make_projection([[1, 0]], [[0, 1]], NormedSpace.lp(2, 2)), cbm=1.0, seed=1)
    assert a.passed
    a = audit_projection(make_projection([[1, 0]], [[1, -1]], NormedSpace.lp("inf", 2)), cbm=2.0, seed=1)
    assert a.passed
    assert a.norm_I_minus_P.lower <= min(1 + 2, 2 * 2)


def test_audit_detects_false_constant():
    # claiming cbm = 1 for l_inf must fail on P = [[1,1],[0,0]]^T style maps where ||I-P|| > ||P||
    P = make_projection([[1, 0]], [[1, 1]], NormedSpace.lp(1, 2))
    a = projection_norms(P)
    assert a.norm_I_minus_P.lower > a.norm_P.lower
    bad = audit_projection(P, cbm=1.0, seed=0)
    assert not bad.passed
    assert any(v["check"] == "operator" for v in bad.violations)


@pytest.mark.parametrize("kind", range(10))
def test_random_audits_pass(kind):
    space = all_kinds(3, seed=1)[kind]
    cbm = 1.0 if space.gram is not None else 2.0
    for s in range(5):
        P = random_projection(space, s)
        a = audit_projection(P, seed=s, cbm=cbm, **FAST)
        assert a.passed, a.violations
        assert a.norm_P.bound >= 1 - 1e-9
        assert a.norm_I_minus_P.lower <= 1 + a.norm_P.bound + 1e-9


@pytest.mark.parametrize("p", [1.0, 1.5, 3.0, 4.0, "inf"])
def test_planar_lp_with_derived_constant(p):
    space = NormedSpace.lp(p, 2)
    cbm = trusted_cbm(space)
    for s in range(20):
        a = audit_projection(random_projection(space, s), seed=s, cbm=cbm, **FAST)
        assert a.passed, a.violations


@pytest.mark.parametrize("dim", [2, 3, 4, 5, 6])
def test_hilbert_identity(dim):
    rng = np.random.default_rng(dim)
    for s in range(40):
        b = rng.standard_normal((dim, dim))
        space = NormedSpace.quadratic(b @ b.T + 0.1 * np.eye(dim))
        a = projection_norms(random_projection(space, s))
        assert abs(a.norm_P.lower - a.norm_I_minus_P.lower) <= 1e-8


@given(st.integers(0, 10_000), st.sampled_from([1.5, 3.0, math.inf]))
def test_complement_symmetry(seed, p):
    P = random_projection(NormedSpace.lp(p, 3), seed)
    Q = P.complement()
    assert np.allclose(P.matrix + Q.matrix, np.eye(3))
    assert audit_projection(P, seed=seed, cbm=2.0, **FAST).passed
    assert audit_projection(Q, seed=seed, cbm=2.0, **FAST).passed


def test_sharpness_regime():
    for s in range(20):
        space = NormedSpace.quadratic(np.diag([1.0, 2.0, 3.0]))
        a = audit_projection(random_projection(space, s), seed=s, cbm=1.0, **FAST)
        if 1.0 < 1 + 1 / a.norm_P.bound:
            assert a.bound_C < 1 + 1 / a.norm_P.lower


def test_random_projection_properties():
    space = NormedSpace.lp(3, 4)
    P = random_projection(space, 3)
    assert P.idempotency_defect() < 1e-12
    assert 0 < P.rank < 4
    assert np.array_equal(P.matrix, random_projection(space, 3).matrix)
    with pytest.raises(GeometryError):
        random_projection(NormedSpace.lp(2, 1), 0)


def test_per_vector_trivial_when_kernel_component_vanishes():
    P = make_projection([[1, 0]], [[1, -1]], NormedSpace.lp(4, 2))
    a = audit_projection(P, samples=8, seed=0, cbm=2.0)
    x = np.array([1.0, 0.0])
    assert np.allclose(x - P.matrix @ x, 0)
    assert a.passed
