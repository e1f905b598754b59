import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bmlab.errors import ArgumentError, SingularityError
from bmlab.opnorm import LinearMap, _grid2d, _multistart, inverse_norm, operator_norm
from bmlab.spaces import NormedSpace, sample_unit_sphere

from conftest import all_kinds


def brute_force(T, count=20000, seed=0):
    x = sample_unit_sphere(T.domain, count, seed)
    return float(np.max(T.codomain.norm(T(x))))


def test_examples():
    assert operator_norm(LinearMap(np.eye(3), NormedSpace.lp(2, 3), NormedSpace.lp(2, 3))).lower == pytest.approx(1)
    e2 = NormedSpace.lp(2, 2)
    est = operator_norm(LinearMap(np.diag([2.0, 3.0]), e2, e2))
    assert est.lower == pytest.approx(3) and est.method == "exact_svd"
    linf = NormedSpace.lp("inf", 2)
    est = operator_norm(LinearMap([[1.0, 1.0], [0.0, 0.0]], linf, linf))
    assert est.lower == est.upper == 2 and est.method == "exact_vertex"


def test_inverse_examples():
    e3 = NormedSpace.lp(2, 3)
    assert inverse_norm(LinearMap(np.eye(3), e3, e3)).lower == pytest.approx(1)
    assert inverse_norm(LinearMap(np.diag([2.0, 1.0, 0.5]), e3, e3)).lower == pytest.approx(2)
    linf = NormedSpace.lp("inf", 2)
    assert inverse_norm(LinearMap([[1.0, 1.0], [0.0, 1.0]], linf, linf)).lower == pytest.approx(2)
    with pytest.raises(SingularityError) as info:
        inverse_norm(LinearMap([[1.0, 1.0], [1.0, 1.0]], linf, linf))
    assert info.value.condition > 1e12


def test_shape_checks():
    with pytest.raises(ArgumentError):
        LinearMap(np.eye(2), NormedSpace.lp(2, 3), NormedSpace.lp(2, 2))
    with pytest.raises(ArgumentError):
        LinearMap([[np.inf, 0], [0, 1]], NormedSpace.lp(2, 2), NormedSpace.lp(2, 2))


@pytest.mark.parametrize("p,q", [(1, 2), (1.5, 3), (3, 1.5), (4, "inf"), ("inf", 1), (2, 4)])
def test_2d_grid_against_brute_force(p, q):
    rng = np.random.default_rng(7)
    T = LinearMap(rng.standard_normal((2, 2)), NormedSpace.lp(p, 2), NormedSpace.lp(q, 2))
    est = operator_norm(T)
    oracle = brute_force(T, 200_000)
    assert est.lower >= oracle - 1e-12
    assert est.lower <= est.upper
    assert est.upper - est.lower <= 1e-5 * est.lower
    # the witness attains the lower value
    w = est.witness
    assert T.codomain.norm(T(w)) / T.domain.norm(w) == pytest.approx(est.lower, rel=1e-12)


@pytest.mark.parametrize("p,q", [(1.5, 3), (3, 2), (4, 1.5), (2, 3)])
def test_multistart_against_brute_force(p, q):
    for seed in range(5):
        rng = np.random.default_rng(seed)
        T = LinearMap(rng.standard_normal((4, 4)), NormedSpace.lp(p, 4), NormedSpace.lp(q, 4))
        est = operator_norm(T, seed=seed)
        assert est.heuristic and est.upper == np.inf
        assert est.lower >= brute_force(T, 20000, seed) - 1e-9


def test_quadratic_exact_agreement():
    rng = np.random.default_rng(3)
    for dim in (2, 3):
        b, c = rng.standard_normal((2, dim, dim))
        g = NormedSpace.quadratic(b @ b.T + np.eye(dim))
        h = NormedSpace.quadratic(c @ c.T + np.eye(dim))
        m = rng.standard_normal((dim, dim))
        exact = operator_norm(LinearMap(m, g, h))
        assert exact.method == "exact_svd"
        # a generic route on the same norms must not exceed the exact value
        assert brute_force(LinearMap(m, g, h)) <= exact.lower + 1e-9
        T = LinearMap(m, g, h)
        ms = _multistart(T, 16, 0, None, 2000, 25, 8, 1e-15)
        assert ms.lower <= exact.lower + 1e-9
        assert ms.lower == pytest.approx(exact.lower, rel=1e-8)
        if dim == 2:
            gr = _grid2d(T, 4096, 8, 40)
            assert gr.lower <= exact.lower + 1e-9
            assert gr.upper >= exact.lower - 1e-9


@pytest.mark.parametrize("kind", range(10))
def test_adjoint_identity(kind):
    space = all_kinds(3, seed=5)[kind]
    other = all_kinds(3, seed=6)[(kind + 3) % 10]
    m = np.random.default_rng(kind).standard_normal((3, 3))
    T = LinearMap(m, space, other)
    a, b = operator_norm(T), operator_norm(T.adjoint)
    assert a.lower == pytest.approx(b.lower, rel=1e-6)


@pytest.mark.parametrize("kind", range(10))
def test_inverse_adjoint_identity(kind):
    space = all_kinds(3, seed=8)[kind]
    m = np.random.default_rng(kind).standard_normal((3, 3)) + 2 * np.eye(3)
    T = LinearMap(m, space, space.dual)
    assert inverse_norm(T).lower == pytest.approx(inverse_norm(T.adjoint).lower, rel=1e-6)


@given(arrays(float, (3, 3), elements=st.floats(-5, 5)), arrays(float, (3, 3), elements=st.floats(-5, 5)),
       st.sampled_from(range(10)))
def test_submultiplicative(a, b, kind):
    spaces = all_kinds(3)
    x, y, z = spaces[kind], spaces[(kind + 1) % 10], spaces[(kind + 4) % 10]
    T, S = LinearMap(a, x, y), LinearMap(b, y, z)
    st_ = operator_norm(S.compose(T))
    assert st_.lower <= operator_norm(S).bound * operator_norm(T).bound * (1 + 1e-9) + 1e-9


def test_hints_raise_lower_bound():
    rng = np.random.default_rng(0)
    T = LinearMap(rng.standard_normal((4, 4)), NormedSpace.lp(3, 4), NormedSpace.lp(1.5, 4))
    h = rng.standard_normal((3, 4))
    est = operator_norm(T, starts=1, hints=h)
    ratios = T.codomain.norm(T(h)) / T.domain.norm(h)
    assert est.lower >= ratios.max()


def test_determinism():
    rng = np.random.default_rng(1)
    T = LinearMap(rng.standard_normal((3, 3)), NormedSpace.lp(3, 3), NormedSpace.lp(4, 3))
    a, b = operator_norm(T, seed=4), operator_norm(T, seed=4)
    assert a.lower == b.lower and np.array_equal(a.witness, b.witness)


def test_one_dimensional_domain():
    T = LinearMap([[3.0], [4.0]], NormedSpace.lp(1, 1), NormedSpace.lp(2, 2))
    assert operator_norm(T).lower == pytest.approx(5)
