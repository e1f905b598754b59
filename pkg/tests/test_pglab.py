import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from bmlab.errors import ArgumentError, GenerationError, SingularityError
from bmlab.pglab import (PGProblem, assemble_fem_1d, best_approximation, continuity_constant,
                         infsup_constant, pg_projection, problem_from_spec, random_problem,
                         reports_to_csv, solve_pg, verify_bounds)
from bmlab.spaces import NormedSpace

E3 = NormedSpace.lp(2, 3)


def problem(a, x, y=None, sel=(0,), f=None):
    a = np.asarray(a, dtype=float)
    n = len(a)
    return PGProblem(a, x, y or x, np.ones(n) if f is None else f, list(sel), list(sel))


# ---- assembly ----

def test_fem_examples():
    assert np.allclose(assemble_fem_1d(2, 1.0, 0.0).A, [[4.0]])
    a = assemble_fem_1d(4, 1.0, 0.0).A
    assert np.allclose(np.diag(a), 8) and np.allclose(np.diag(a, 1), -4) and np.allclose(np.diag(a, -1), -4)
    sym = assemble_fem_1d(16, 0.3, 0.0, "galerkin").A
    assert np.max(np.abs(sym - sym.T)) <= 1e-12


def hat(x, i, h):
    return np.clip(1 - np.abs(x - i * h) / h, 0, None)


def dhat(x, i, h):
    return np.where(np.abs(x - i * h) < h, -np.sign(x - i * h) / h, 0.0)


def test_fem_assembly_against_quadrature():
    # midpoint-rule quadrature on a fine grid, independent of the closed forms
    elements, eps, beta = 6, 0.2, 1.3
    prob = assemble_fem_1d(elements, eps, beta, "petrov_shifted")
    h = 1 / elements
    alpha = prob.meta["alpha"]
    x = (np.arange(600_000) + 0.5) / 600_000
    xi = (x % h) / h
    elem = np.floor(x / h)
    bubble = 3 * xi * (1 - xi)
    dbubble = 3 * (1 - 2 * xi) / h
    a = np.zeros((elements - 1, elements - 1))
    for i in range(1, elements):
        sign = np.where(elem == i - 1, 1.0, np.where(elem == i, -1.0, 0.0))
        psi = hat(x, i, h) + alpha * sign * bubble
        dpsi = dhat(x, i, h) + alpha * sign * dbubble
        for j in range(1, elements):
            a[i - 1, j - 1] = np.mean(eps * dhat(x, j, h) * dpsi + beta * dhat(x, j, h) * psi)
        assert np.mean(psi) == pytest.approx(prob.f[i - 1], abs=1e-9)
    assert np.allclose(a, prob.A, atol=1e-6)


def test_fem_nodal_exactness():
    u, _ = solve_pg(assemble_fem_1d(4, 1.0, 0.0))
    x = np.arange(1, 4) / 4
    assert np.max(np.abs(u - x * (1 - x) / 2)) <= 1e-12


def test_fem_advection_nodal_exactness():
    # with exact upwinding the nodal values match the exact solution of -eps u'' + beta u' = 1
    eps, beta, el = 0.1, 1.0, 8
    u, _ = solve_pg(assemble_fem_1d(el, eps, beta, "petrov_shifted"))
    x = np.arange(1, el) / el
    exact = (x - (np.exp(beta * x / eps) - 1) / (np.exp(beta / eps) - 1)) / beta
    assert np.max(np.abs(u - exact)) <= 1e-10


def test_fem_errors():
    with pytest.raises(ArgumentError):
        assemble_fem_1d(1, 1.0, 0.0)
    with pytest.raises(ArgumentError):
        assemble_fem_1d(4, 0.0, 0.0)
    with pytest.raises(ArgumentError):
        assemble_fem_1d(4, 1.0, 0.0, "upwind")
    with pytest.raises(ArgumentError):
        assemble_fem_1d(6, 1.0, 0.0, coarsen=4)


def test_refinement_monotone():
    errs = []
    for k in (16, 8, 4, 2):
        prob = assemble_fem_1d(64, 1.0, 0.0, coarsen=k)
        u, uh = solve_pg(prob)
        errs.append(prob.X_space.norm(u - uh))
    assert all(b <= a * (1 + 1e-12) for a, b in zip(errs, errs[1:]))
    assert errs[-1] < errs[0]


# ---- random problems ----

def test_random_problem_determinism_and_bounds():
    x = NormedSpace.lp(3, 4)
    a = random_problem(4, 3, x, x, 2)
    b = random_problem(4, 3, x, x, 2)
    assert np.array_equal(a.A, b.A) and np.array_equal(a.f, b.f)
    edge = random_problem(5, 1, coarse_dim=4)
    assert edge.n_h == 4 and edge.well_posed
    assert np.linalg.norm(np.linalg.inv(edge.A), 2) < 1e6
    with pytest.raises(ArgumentError):
        random_problem(4, 0, coarse_dim=4)
    with pytest.raises(GenerationError):
        random_problem(4, 0, max_inverse_norm=1e-3, budget=3)


def test_selector_validation():
    with pytest.raises(ArgumentError):
        PGProblem(np.eye(3), E3, E3, np.ones(3), [0, 1], [0])
    with pytest.raises(ArgumentError):
        PGProblem(np.eye(3), E3, E3, np.ones(3), [0, 3], [0, 1])


# ---- constants ----

def test_continuity_examples():
    assert continuity_constant(problem(np.eye(3), E3)).lower == pytest.approx(1)
    assert continuity_constant(problem(np.diag([2, 1, 0.5]), E3)).lower == pytest.approx(2)
    p = problem([[1, 1], [0, 1]], NormedSpace.lp(1, 2), NormedSpace.lp("inf", 2))
    assert continuity_constant(p).lower == pytest.approx(2)


def test_infsup_examples():
    assert infsup_constant(problem(np.eye(3), E3), restricted=False).lower == pytest.approx(1)
    d = problem(np.diag([2, 1, 0.5]), E3, sel=(0, 1))
    assert infsup_constant(d, restricted=False).lower == pytest.approx(0.5)
    assert infsup_constant(d, restricted=True).lower == pytest.approx(1)


def test_infsup_singular_is_zero():
    p = PGProblem(np.array([[0.0, 1], [1, 0]]), NormedSpace.lp(2, 2), NormedSpace.lp(2, 2),
                  np.ones(2), [0], [0])
    assert infsup_constant(p).lower == 0.0
    with pytest.raises(SingularityError):
        solve_pg(p)


def test_infsup_matches_sigma_min_on_euclidean():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((5, 5))
    p = PGProblem(a, NormedSpace.lp(2, 5), NormedSpace.lp(2, 5), np.ones(5), [0, 1, 2], [1, 2, 4])
    s = np.linalg.svd(a[np.ix_([1, 2, 4], [0, 1, 2])], compute_uv=False)
    assert infsup_constant(p).lower == pytest.approx(s[-1], rel=1e-12)


# ---- solutions and projection ----

def test_solve_examples():
    p = PGProblem(np.eye(3), E3, E3, np.array([1.0, 0, 0]), [0, 2], [0, 2])
    u, uh = solve_pg(p)
    assert np.allclose(u, [1, 0, 0]) and np.allclose(uh, [1, 0, 0])
    rng = np.random.default_rng(0)
    a = rng.standard_normal((4, 4)) + 3 * np.eye(4)
    full = PGProblem(a, NormedSpace.lp(2, 4), NormedSpace.lp(2, 4), rng.standard_normal(4), range(4), range(4))
    u, uh = solve_pg(full)
    assert np.allclose(u, uh, atol=1e-12)


def test_pg_projection_examples():
    full = PGProblem(np.eye(2), NormedSpace.lp(2, 2), NormedSpace.lp(2, 2), np.ones(2), [0, 1], [0, 1])
    P = pg_projection(full)
    assert np.allclose(P.matrix, np.eye(2)) and not P.nontrivial
    assert np.allclose(pg_projection(problem(np.eye(2), NormedSpace.lp(2, 2))).matrix, np.diag([1, 0]))
    P = pg_projection(problem([[2, 1], [1, 2]], NormedSpace.lp(2, 2)))
    assert np.allclose(P.matrix, [[1, 0.5], [0, 0]])
    assert np.allclose(P.matrix @ P.matrix, P.matrix)


@given(st.integers(0, 10_000))
def test_projection_fixes_subspace_and_matches_solution(seed):
    prob = random_problem(5, seed, coarse_dim=2)
    P = pg_projection(prob)
    e = prob.trial_selector
    assert np.allclose(P.matrix @ e, e, atol=1e-9)
    u, uh = solve_pg(prob)
    assert np.linalg.norm(P.matrix @ u - uh) <= 1e-10 * max(np.linalg.norm(u), 1.0)
    assert P.idempotency_defect() < 1e-9


# ---- best approximation ----

def test_best_examples():
    e2 = NormedSpace.lp(2, 2)
    val, arg = best_approximation(np.array([3.0, 4.0]), problem(np.eye(2), e2))
    assert val == pytest.approx(4) and np.allclose(arg, [3, 0])
    val, arg = best_approximation(np.array([2.0, 0.0]), problem(np.eye(2), e2))
    assert val == pytest.approx(0, abs=1e-15) and np.allclose(arg, [2, 0])
    linf = NormedSpace.lp("inf", 2)
    val, arg = best_approximation(np.array([0.0, 1.0]), problem(np.eye(2), linf))
    scan = min(max(abs(t), 1.0) for t in np.linspace(-3, 3, 6001))
    assert val == pytest.approx(scan) and np.allclose(arg, [0, 0], atol=1e-9)


@pytest.mark.parametrize("p", [1.0, 1.5, 3.0, 4.0, "inf"])
def test_best_one_dimensional_against_scan(p):
    rng = np.random.default_rng(5)
    space = NormedSpace.lp(p, 3)
    e = rng.standard_normal((3, 1))
    prob = PGProblem(np.eye(3), space, space, np.ones(3), e, e)
    for u in rng.standard_normal((5, 3)):
        val, arg = best_approximation(u, prob)
        res = minimize_scalar(lambda t: space.norm(u - t * e[:, 0]), bounds=(-50, 50), method="bounded",
                              options={"xatol": 1e-12})
        assert val <= res.fun + 1e-9
        assert val == pytest.approx(res.fun, rel=1e-6)
        assert space.norm(u - arg) == pytest.approx(val, rel=1e-12)


@pytest.mark.parametrize("p", [1.0, 1.5, 3.0, "inf"])
def test_best_is_below_every_candidate(p):
    rng = np.random.default_rng(9)
    space = NormedSpace.lp(p, 5)
    prob = PGProblem(np.eye(5), space, space, np.ones(5), [0, 1, 2], [0, 1, 2])
    for u in rng.standard_normal((4, 5)):
        val, _ = best_approximation(u, prob)
        for c in rng.standard_normal((200, 3)):
            cand = u.copy()
            cand[:3] -= c
            assert val <= space.norm(cand) + 1e-12


def test_best_weighted_and_polytope():
    rng = np.random.default_rng(3)
    v = rng.standard_normal((5, 3))
    for space in (NormedSpace.weighted_lp(3, [1.0, 2.0, 0.5]), NormedSpace.polytope(np.vstack([v, -v]))):
        prob = PGProblem(np.eye(3), space, space, np.ones(3), [0], [0])
        u = np.array([1.0, -2.0, 0.5])
        val, arg = best_approximation(u, prob)
        ts = np.linspace(-10, 10, 200_001)
        scan = np.min(space.norm(u[None, :] - ts[:, None] * np.array([1.0, 0, 0])))
        assert val <= scan + 1e-12 and val == pytest.approx(scan, abs=1e-6)


# ---- bound chain ----

def test_verify_identity_problem():
    rep = verify_bounds(problem(np.eye(3), E3, sel=(0, 2), f=np.array([1.0, 2.0, 3.0])), cbm=1.0)
    assert rep.passed
    assert rep.err == pytest.approx(rep.best) and rep.effectivity == pytest.approx(1)
    assert rep.slack_babuska >= 0 and rep.slack_sharp >= 0 and rep.slack_xz >= 0


def test_verify_fem_xz_bound():
    rep = verify_bounds(assemble_fem_1d(8, 1.0, 0.0), cbm=1.0)
    assert rep.passed
    assert rep.err <= rep.M / rep.m_h * rep.best + 1e-9
    assert not math.isnan(rep.slack_cea)


def test_verify_random_l4():
    x = NormedSpace.lp(4, 6)
    rep = verify_bounds(random_problem(6, 11, x, x, 3), cbm=2.0)
    assert rep.passed, rep.violations
    assert rep.effectivity >= 1 - 1e-12
    assert math.isnan(rep.bound_xz)
    assert rep.norm_Ph.lower <= rep.M / rep.m_h * (1 + 1e-6)


@pytest.mark.parametrize("p", [1.0, 1.5, 3.0, "inf"])
def test_verify_random_lp_sweep(p):
    for seed in range(4):
        n = 3 + seed
        x = NormedSpace.lp(p, n)
        rep = verify_bounds(random_problem(n, seed, x, x, 1 + seed % (n - 1)), cbm=2.0, seed=seed)
        assert rep.passed, rep.violations
        assert rep.best <= rep.err + 1e-12
        assert rep.M >= rep.m_h - 1e-9


def test_verify_flags_false_constant():
    # cbm = 1 is false for l1; some problem must then break the sharpened bound
    broken = 0
    for seed in range(30):
        x = NormedSpace.lp(1, 3)
        rep = verify_bounds(random_problem(3, seed, x, x, 1), cbm=1.0)
        broken += any(v["check"] == "sharpened" for v in rep.violations)
    assert broken > 0


def test_report_csv():
    rep = verify_bounds(assemble_fem_1d(4, 1.0, 0.0), cbm=1.0, problem_id="p0")
    text = reports_to_csv([rep])
    header, row = text.strip().split("\n")
    cols = header.split(",")
    for c in ("problem_id", "n", "n_h", "M", "m", "m_h", "err", "best", "effectivity", "C_used",
              "bound_babuska", "bound_sharp", "bound_xz", "slack_babuska", "slack_sharp", "slack_xz"):
        assert c in cols
    assert row.split(",")[0] == "p0"


def test_problem_from_spec():
    p = problem_from_spec({"fem1d": {"elements": 8, "epsilon": 0.5, "beta": 1, "variant": "petrov_shifted",
                                     "coarsen": 4}})
    assert p.n == 7 and p.n_h == 1
    q = problem_from_spec({"random": {"n": 4, "seed": 2, "coarse_dim": 2}, "trial_norm": "lp:3",
                           "test_norm": {"kind": "lp", "p": "inf"}})
    assert q.X_space.p == 3 and q.Y_space.p == math.inf
    with pytest.raises(ArgumentError):
        problem_from_spec({"random": {"n": 4}})
    with pytest.raises(ArgumentError):
        problem_from_spec({"mesh": {}})
