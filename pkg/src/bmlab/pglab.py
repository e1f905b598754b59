"""Petrov-Galerkin problems in finite dimensions and their error bounds.

A problem is a square matrix ``A[i, j] = a(phi_j, psi_i)`` on a fine space
``X x Y`` together with inclusion matrices ``E`` (trial) and ``F`` (test) of
the discrete subspaces ``X_h = E R^k`` and ``Y_h = F R^k``. The fine problem
plays the role of the continuous one, so every quantity below is computable.

    A_h = F^T A E          u_h = E A_h^-1 F^T f          P_h = E A_h^-1 F^T A

``M`` is the norm of ``x -> a(x, .)`` from X to Y*, ``m_h`` the inverse norm
of ``A_h`` from X_h to Y_h* with the inherited norms.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, null_space
from scipy.optimize import linprog, minimize

from .errors import ArgumentError, GenerationError, NumericalError, SingularityError
from .opnorm import LinearMap, NormEstimate, condition_estimate, inverse_map, operator_norm
from .projlab import Projection
from .spaces import NormedSpace, induced_space, parse_norm

MAX_CONDITION = 1e12


def _selector_matrix(sel, n):
    s = np.asarray(sel)
    if s.ndim == 1 and (s.size == 0 or np.issubdtype(s.dtype, np.integer)):
        idx = [int(i) for i in s]
        if len(set(idx)) != len(idx) or any(i < 0 or i >= n for i in idx):
            raise ArgumentError("selector indices must be distinct and in range")
        return np.eye(n)[:, idx]
    m = np.asarray(sel, dtype=float)
    if m.ndim != 2 or m.shape[0] != n:
        raise ArgumentError(f"inclusion matrix must have shape ({n}, k)")
    if np.linalg.matrix_rank(m) < m.shape[1]:
        raise ArgumentError("inclusion matrix has dependent columns")
    return m


@dataclass(frozen=True, eq=False)
class PGProblem:
    A: np.ndarray
    X_space: NormedSpace
    Y_space: NormedSpace
    f: np.ndarray
    trial_selector: np.ndarray  # (n, k) inclusion matrix E
    test_selector: np.ndarray  # (n, k) inclusion matrix F
    well_posed: bool = True
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = a.shape[0]
        if a.shape != (n, n) or not np.all(np.isfinite(a)):
            raise ArgumentError("A must be a finite square matrix")
        if self.X_space.dim != n or self.Y_space.dim != n:
            raise ArgumentError("trial and test spaces must have the dimension of A")
        f = np.asarray(self.f, dtype=float)
        if f.shape != (n,):
            raise ArgumentError("f must have length n")
        e = _selector_matrix(self.trial_selector, n)
        g = _selector_matrix(self.test_selector, n)
        if e.shape[1] != g.shape[1]:
            raise ArgumentError("trial and test subspaces must have equal dimension")
        if e.shape[1] < 1:
            raise ArgumentError("discrete subspaces must be nonempty")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "trial_selector", e)
        object.__setattr__(self, "test_selector", g)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def n_h(self) -> int:
        return self.trial_selector.shape[1]

    @property
    def A_h(self):
        return self.test_selector.T @ self.A @ self.trial_selector

    @property
    def f_h(self):
        return self.test_selector.T @ self.f

    def discrete_spaces(self):
        """Inherited norms on the coefficient spaces of X_h and Y_h."""
        xh = induced_space(self.X_space, self.trial_selector)
        yh = induced_space(self.Y_space, self.test_selector)
        if xh is None or yh is None:
            raise ArgumentError("inherited subspace norm is not representable for this norm/selector")
        return xh, yh


# ---- assembly -------------------------------------------------------------

def _upwind_alpha(epsilon, beta, h):
    if beta == 0:
        return 0.0
    pe = abs(beta) * h / (2.0 * epsilon)
    a = 1.0 / math.tanh(pe) - 1.0 / pe if pe > 1e-6 else pe / 3.0
    return math.copysign(a, beta)


def _tridiag(n, lower, diag, upper):
    return np.diag(np.full(n, diag)) + np.diag(np.full(n - 1, lower), -1) + np.diag(np.full(n - 1, upper), 1)


def _prolongation(elements, coarsen):
    h = 1.0 / elements
    H = coarsen * h
    x = h * np.arange(1, elements)
    centers = H * np.arange(1, elements // coarsen)
    return np.clip(1.0 - np.abs(x[:, None] - centers[None, :]) / H, 0.0, None)


def assemble_fem_1d(elements: int, epsilon: float, beta: float, variant: str = "galerkin", *,
                    coarsen: int | None = None, trial_norm: NormedSpace | None = None,
                    test_norm: NormedSpace | None = None) -> PGProblem:
    """-eps u'' + beta u' = 1 on (0, 1), u(0) = u(1) = 0, with hat trial functions.

    ``petrov_shifted`` tests with ``psi_i = phi_i + alpha * b_i`` where ``b_i``
    is the quadratic bubble ``3 xi (1 - xi)`` on the element left of node i
    minus the one on the right (classical upwinding, alpha = coth Pe - 1/Pe).
    The discrete spaces are the hats of the mesh with ``elements / coarsen``
    elements, written in the fine basis, tested with the same combinations
    of the fine test functions. By default ``coarsen`` is 2 when that leaves
    an interior coarse node and 1 (X_h = X) otherwise.
    """
    if coarsen is None:
        coarsen = 2 if isinstance(elements, (int, np.integer)) and elements % 2 == 0 and elements >= 4 else 1
    if not isinstance(elements, (int, np.integer)) or elements < 2:
        raise ArgumentError("elements must be an integer >= 2")
    if not epsilon > 0:
        raise ArgumentError("epsilon must be positive")
    if not math.isfinite(beta):
        raise ArgumentError("beta must be finite")
    if variant not in ("galerkin", "petrov_shifted"):
        raise ArgumentError(f"unknown variant {variant!r}")
    if not isinstance(coarsen, (int, np.integer)) or coarsen < 1 or elements % coarsen:
        raise ArgumentError("coarsen must be a positive divisor of elements")
    if elements // coarsen < 2:
        raise ArgumentError("coarse mesh needs at least two elements")
    n = elements - 1
    h = 1.0 / elements
    alpha = _upwind_alpha(epsilon, beta, h) if variant == "petrov_shifted" else 0.0
    a = _tridiag(n, -epsilon / h - beta / 2 - alpha * beta / 2, 2 * epsilon / h + alpha * beta,
                 -epsilon / h + beta / 2 - alpha * beta / 2)
    f = np.full(n, h)
    stiff = _tridiag(n, -1.0 / h, 2.0 / h, -1.0 / h)
    x_space = trial_norm if trial_norm is not None else NormedSpace.quadratic(stiff)
    # bubbles are H1-orthogonal to hats and have Gram 3 * stiff
    y_space = test_norm if test_norm is not None else NormedSpace.quadratic((1 + 3 * alpha ** 2) * stiff)
    e = _prolongation(elements, coarsen)
    meta = {"kind": "fem1d", "elements": int(elements), "epsilon": float(epsilon), "beta": float(beta),
            "variant": variant, "coarsen": int(coarsen), "alpha": alpha}
    return PGProblem(a, x_space, y_space, f, e, e.copy(), True, meta)


def random_problem(n: int, seed: int, trial_norm: NormedSpace | None = None,
                   test_norm: NormedSpace | None = None, coarse_dim: int = 1, *,
                   max_inverse_norm: float = 1e6, budget: int = 100) -> PGProblem:
    """Seeded Gaussian problem with nested coordinate subspaces ``[0, coarse_dim)``."""
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ArgumentError("n must be an integer >= 2")
    if not 1 <= coarse_dim < n:
        raise ArgumentError("need 1 <= coarse_dim < n")
    x_space = trial_norm if trial_norm is not None else NormedSpace.lp(2, n)
    y_space = test_norm if test_norm is not None else NormedSpace.lp(2, n)
    rng = np.random.default_rng(seed)
    sel = np.arange(coarse_dim)
    for _ in range(budget):
        a = rng.standard_normal((n, n))
        f = rng.standard_normal(n)
        s = np.linalg.svd(a, compute_uv=False)
        if s[-1] <= 0 or 1.0 / s[-1] >= max_inverse_norm:
            continue
        if condition_estimate(a[np.ix_(sel, sel)]) >= MAX_CONDITION:
            continue
        meta = {"kind": "random", "n": int(n), "seed": int(seed), "coarse_dim": int(coarse_dim)}
        return PGProblem(a, x_space, y_space, f, sel, sel, True, meta)
    raise GenerationError("no well-conditioned problem within the resample budget")


# ---- constants -----------------------------------------------------------

def continuity_constant(prob: PGProblem, **opts) -> NormEstimate:
    """M = ||A|| as a map X -> Y*."""
    return operator_norm(LinearMap(prob.A, prob.X_space, prob.Y_space.dual), **opts)


def _inverse_as_infsup(inv: NormEstimate | None, method_if_none="singular") -> NormEstimate:
    if inv is None:
        return NormEstimate(0.0, 0.0, np.zeros(0), method_if_none)
    lower = 1.0 / inv.bound
    upper = 1.0 / inv.lower if inv.lower > 0 else math.inf
    return NormEstimate(lower, max(upper, lower), inv.witness, inv.method)


def infsup_constant(prob: PGProblem, restricted: bool = True, **opts) -> NormEstimate:
    """Inf-sup constant (``m_h`` or ``m``) as ``1 / ||A^-1||``.

    ``lower`` is the conservative value used in bounds; the witness is the
    dual-space functional attaining ``||A^-1||``. A singular system gives 0.
    """
    if restricted:
        xs, ys = prob.discrete_spaces()
        mat = prob.A_h
    else:
        xs, ys, mat = prob.X_space, prob.Y_space, prob.A
    try:
        inv = inverse_map(LinearMap(mat, xs, ys.dual), MAX_CONDITION)
    except SingularityError:
        return _inverse_as_infsup(None)
    return _inverse_as_infsup(operator_norm(inv, **opts))


# ---- solutions and projections --------------------------------------------

def _solve(mat, rhs, what):
    cond = condition_estimate(mat)
    if not cond < MAX_CONDITION:
        raise SingularityError(f"{what} system is numerically singular (cond ~ {cond:.3g})", cond)
    return np.linalg.solve(mat, rhs)


def solve_pg(prob: PGProblem):
    """Fine solution ``u`` and discrete solution ``u_h`` in fine coordinates."""
    u = _solve(prob.A, prob.f, "full")
    c = _solve(prob.A_h, prob.f_h, "discrete")
    return u, prob.trial_selector @ c


def pg_projection(prob: PGProblem) -> Projection:
    e, g = prob.trial_selector, prob.test_selector
    a_h = prob.A_h
    cond = condition_estimate(a_h)
    if not cond < MAX_CONDITION:
        raise SingularityError(f"discrete system is numerically singular (cond ~ {cond:.3g})", cond)
    coupling = g.T @ prob.A
    p = e @ np.linalg.solve(a_h, coupling)
    kernel = null_space(coupling)
    n, k = prob.n, prob.n_h
    return Projection(LinearMap(p, prob.X_space, prob.X_space), e.copy(), kernel, 0 < k < n)


# ---- best approximation ---------------------------------------------------

_HIGHS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


def _lp_best(u, e, polar, ls):
    """min over c of max_k polar_k . (u - E c); ties go to the c closest to ``ls`` in l1."""
    k = e.shape[1]
    pe = polar @ e
    pu = polar @ u
    # variables (c, s): minimize s subject to pu - pe c <= s
    a_ub = np.hstack([-pe, -np.ones((len(polar), 1))])
    res = linprog(np.r_[np.zeros(k), 1.0], A_ub=a_ub, b_ub=-pu, bounds=[(None, None)] * (k + 1),
                  method="highs", options=_HIGHS)
    if res.status != 0:
        raise NumericalError(f"best-approximation LP failed: {res.message}", {"status": res.status})
    c1 = res.x[:k]
    s_opt = float(np.max(pu - pe @ c1))
    cap = s_opt + 1e-12 * max(s_opt, float(np.max(np.abs(pu))))
    # variables (c, t): minimize sum t subject to |c - ls| <= t and optimality
    eye = np.eye(k)
    a2 = np.vstack([
        np.hstack([eye, -eye]),
        np.hstack([-eye, -eye]),
        np.hstack([-pe, np.zeros((len(polar), k))]),
    ])
    b2 = np.r_[ls, -ls, cap - pu]
    res2 = linprog(np.r_[np.zeros(k), np.ones(k)], A_ub=a2, b_ub=b2,
                   bounds=[(None, None)] * k + [(0, None)] * k, method="highs", options=_HIGHS)
    if res2.status == 0 and np.max(pu - pe @ res2.x[:k]) <= cap:
        return res2.x[:k]
    return c1


def _smooth_best(space, u, e, starts, gtol=1e-7):
    def fun(c):
        r = u - e @ c
        val = float(space.norm(r))
        if val == 0:
            return 0.0, np.zeros_like(c)
        return val, -(space.subgradient(r[None, :])[0] @ e)

    best = None
    diags = []
    for c0 in starts:
        res = minimize(fun, c0, jac=True, method="BFGS", options={"gtol": 1e-12, "maxiter": 2000})
        gnorm = float(np.max(np.abs(res.jac))) if res.fun > 0 else 0.0
        diags.append({"value": float(res.fun), "grad": gnorm, "message": str(res.message)})
        if gnorm <= gtol and (best is None or res.fun < best[0]):
            best = (float(res.fun), res.x)
    if best is None:
        raise NumericalError("descent did not reach the gradient tolerance", {"starts": diags})
    return best[1]


def best_approximation(u, prob: PGProblem, *, start=None, seed: int = 0):
    """``(inf ||u - E c||_X, E c*)`` over coefficient vectors c.

    ``start`` is an optional extra coefficient vector for the smooth solver.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (prob.n,):
        raise ArgumentError("u must have length n")
    space, e = prob.X_space, prob.trial_selector
    scale = float(space.norm(u))
    if scale == 0:
        return 0.0, np.zeros_like(u)
    v = u / scale
    g = space.gram
    ls = np.linalg.lstsq(e, v, rcond=None)[0]
    if g is not None:
        c = np.linalg.solve(e.T @ g @ e, e.T @ g @ v)
    elif space.norm(v - e @ ls) <= 1e-14:
        c = ls
    elif space.is_polytopal:
        polar = space.polar_vertices()
        if polar is None:
            raise ArgumentError("polytope has too many facets for the LP")
        c = _lp_best(v, e, polar, ls)
    else:
        rng = np.random.default_rng(seed)
        starts = [ls]
        if start is not None:
            starts.append(np.asarray(start, dtype=float) / scale)
        starts += [ls + 0.5 * rng.standard_normal(len(ls)) for _ in range(2)]
        c = _smooth_best(space, v, e, starts)
    x = scale * (e @ c)
    return float(space.norm(u - x)), x


# ---- the bound chain -----------------------------------------------------

@dataclass(eq=False)
class BoundReport:
    M: float
    m: float
    m_h: float
    err: float
    best: float
    C_used: float
    cbm: float
    norm_Ph: NormEstimate
    norm_I_minus_Ph: NormEstimate
    bound_babuska: float
    bound_sharp: float
    bound_xz: float = math.nan
    bound_cea: float = math.nan
    slack_babuska: float = math.nan
    slack_sharp: float = math.nan
    slack_xz: float = math.nan
    slack_cea: float = math.nan
    orthogonality: float = math.nan
    projection_ratio: float = math.nan
    n: int = 0
    n_h: int = 0
    problem_id: str = ""
    violations: list = field(default_factory=list)

    @property
    def effectivity(self) -> float:
        if self.best > 0:
            return self.err / self.best
        return 1.0 if self.err == 0 else math.inf

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self):
        d = {k: getattr(self, k) for k in ROW_FIELDS}
        d["cbm"] = self.cbm
        d["orthogonality"] = self.orthogonality
        d["projection_ratio"] = self.projection_ratio
        d["norm_Ph"] = self.norm_Ph.to_dict()
        d["norm_I_minus_Ph"] = self.norm_I_minus_Ph.to_dict()
        d["violations"] = self.violations
        d["passed"] = self.passed
        return {k: _finite_or_str(v) for k, v in d.items()}

    def row(self):
        return [_fmt(getattr(self, k)) for k in ROW_FIELDS]


ROW_FIELDS = ("problem_id", "n", "n_h", "M", "m", "m_h", "err", "best", "effectivity", "C_used",
              "bound_babuska", "bound_sharp", "bound_xz", "bound_cea", "slack_babuska", "slack_sharp",
              "slack_xz", "slack_cea")


def _finite_or_str(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_FIELDS + ("passed",))
    for r in reports:
        w.writerow(r.row() + [str(r.passed).lower()])
    return buf.getvalue()


def _coercivity(prob: PGProblem):
    """Coercivity constant for conforming Galerkin problems on a Gram norm, else None."""
    g = prob.X_space.gram
    gy = prob.Y_space.gram
    if g is None or gy is None or not np.allclose(g, gy, rtol=1e-12, atol=0):
        return None
    if not np.allclose(prob.trial_selector, prob.test_selector, rtol=0, atol=0):
        return None
    sym = 0.5 * (prob.A + prob.A.T)
    lam = float(eigh(sym, g, eigvals_only=True)[0])
    return lam if lam > 0 else None


def _check(report, name, lhs, rhs, tol, absolute=0.0):
    """Record a violation when lhs > rhs beyond a relative tolerance."""
    if lhs > rhs + tol * max(abs(rhs), abs(lhs)) + absolute:
        report.violations.append({"check": name, "lhs": lhs, "rhs": rhs})


def verify_bounds(prob: PGProblem, cbm: float = 2.0, *, tol: float = 1e-6, seed: int = 0,
                  problem_id: str = "", **opts) -> BoundReport:
    """Compute the error-bound chain for ``prob`` and record every failed check.

    Bounding sides use upper estimates (``M.bound``, ``m_h`` from the upper
    estimate of the inverse norm); bounded sides use lower ones.
    """
    if not cbm >= 1.0:
        raise ArgumentError("cbm must be >= 1")
    u, u_h = solve_pg(prob)
    space = prob.X_space
    err = float(space.norm(u - u_h))
    coef_h = np.linalg.lstsq(prob.trial_selector, u_h, rcond=None)[0]
    best, x_best = best_approximation(u, prob, start=coef_h, seed=seed)
    if best > err:
        # u_h is itself a candidate
        best, x_best = err, u_h
    norm_u = float(space.norm(u))
    absolute = 1e-12 * norm_u

    proj = pg_projection(prob)
    eye = np.eye(prob.n)
    norm_ph = operator_norm(proj.map, seed=seed, hints=[u], **opts)
    hints_q = [u - x_best] if best > 0 else None
    norm_q = operator_norm(LinearMap(eye - proj.matrix, space, space), seed=seed + 1,
                           hints=hints_q, **opts)
    m_est = continuity_constant(prob, seed=seed + 2, hints=[norm_ph.witness, u - u_h], **opts)
    xs, ys = prob.discrete_spaces()
    w = norm_ph.witness
    coupling = prob.test_selector.T @ prob.A
    inv_h = operator_norm(inverse_map(LinearMap(prob.A_h, xs, ys.dual), MAX_CONDITION),
                          seed=seed + 3, hints=[coupling @ w], **opts)
    mh_est = _inverse_as_infsup(inv_h)
    m_full = infsup_constant(prob, restricted=False, seed=seed + 4, **opts)

    M, m_h = m_est.bound, mh_est.lower
    ratio = M / m_h
    C = min(1.0 + m_h / M, cbm)
    rep = BoundReport(
        M=M, m=m_full.lower, m_h=m_h, err=err, best=best, C_used=C, cbm=cbm,
        norm_Ph=norm_ph, norm_I_minus_Ph=norm_q,
        bound_babuska=(1.0 + ratio) * best, bound_sharp=C * ratio * best,
        n=prob.n, n_h=prob.n_h, problem_id=problem_id,
    )
    rep.slack_babuska = rep.bound_babuska - err
    rep.slack_sharp = rep.bound_sharp - err
    _check(rep, "babuska", err, rep.bound_babuska, tol, absolute)
    _check(rep, "sharpened", err, rep.bound_sharp, tol, absolute)
    if space.gram is not None:
        rep.bound_xz = ratio * best
        rep.slack_xz = rep.bound_xz - err
        _check(rep, "xu_zikatanov", err, rep.bound_xz, tol, absolute)
    coer = _coercivity(prob)
    if coer is not None:
        rep.bound_cea = M / coer * best
        rep.slack_cea = rep.bound_cea - err
        _check(rep, "cea", err, rep.bound_cea, tol, absolute)

    # structural invariants
    _check(rep, "best_le_err", best, err, 0.0, 1e-12 * max(norm_u, 1.0))
    if prob.n_h < prob.n:
        _check(rep, "continuity_ge_infsup", m_h, M, 0.0, 1e-9)
    resid = coupling @ (u - u_h)
    rep.orthogonality = float(np.max(np.abs(resid)))
    scale = np.linalg.norm(prob.A) * np.linalg.norm(u)
    _check(rep, "galerkin_orthogonality", rep.orthogonality, 1e-10 * scale, 0.0)
    pu = proj.matrix @ u
    _check(rep, "projection_consistency", float(np.linalg.norm(pu - u_h)),
           1e-10 * max(float(np.linalg.norm(u_h)), float(np.linalg.norm(u))), 0.0)
    rep.projection_ratio = norm_ph.lower / ratio
    _check(rep, "projection_norm", norm_ph.lower, ratio, tol)
    _check(rep, "quasi_optimality", err, norm_q.bound * best, tol, absolute)
    if cbm <= 1.0 + m_h / M:
        _check(rep, "chain_order", C * ratio, 1.0 + ratio, 1e-12)
    return rep


# ---- problem files ----------------------------------------------------------

def _norm_from_spec(spec, dim):
    if spec is None:
        return None
    if isinstance(spec, str):
        return parse_norm(spec, dim)
    if isinstance(spec, dict):
        return NormedSpace.from_dict({"dim": dim, **spec} if spec.get("kind") == "lp" else spec)
    raise ArgumentError("norm specification must be a string or an object")


def problem_from_spec(spec: dict) -> PGProblem:
    """Build a problem from ``{"fem1d": {...}}`` or ``{"random": {...}}`` plus optional norms."""
    if not isinstance(spec, dict):
        raise ArgumentError("problem specification must be an object")
    try:
        if "fem1d" in spec:
            p = spec["fem1d"]
            elements = int(p["elements"])
            n = elements - 1
            return assemble_fem_1d(elements, float(p.get("epsilon", 1.0)), float(p.get("beta", 0.0)),
                                   p.get("variant", "galerkin"), coarsen=p.get("coarsen"),
                                   trial_norm=_norm_from_spec(spec.get("trial_norm"), n),
                                   test_norm=_norm_from_spec(spec.get("test_norm"), n))
        if "random" in spec:
            p = spec["random"]
            n = int(p["n"])
            return random_problem(n, int(p["seed"]), _norm_from_spec(spec.get("trial_norm"), n),
                                  _norm_from_spec(spec.get("test_norm"), n), int(p.get("coarse_dim", 1)))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ArgumentError):
            raise
        raise ArgumentError(f"malformed problem specification: {exc!r}") from None
    raise ArgumentError("problem specification needs a 'fem1d' or 'random' entry")
