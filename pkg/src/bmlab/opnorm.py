"""Operator norms between normed spaces.

``operator_norm`` picks the cheapest sound method for the pair of spaces:

``exact_vertex``  polytopal (or 1-D) domain: maximum over the ball's vertices
``exact_svd``     Euclidean-type domain and codomain: largest singular value
``grid2d``        2-D domain: dense angle grid plus golden-section refinement;
                  the upper bound comes from an outer polygon of the ball
``multistart``    otherwise: batched generalized power iteration from seeded
                  starts; no certified upper bound (``upper = inf``)
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from ._polygon import sample_ball
from .errors import ArgumentError, SingularityError
from .spaces import NormedSpace, boundary_point_2d, sample_unit_sphere

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class LinearMap:
    matrix: np.ndarray
    domain: NormedSpace
    codomain: NormedSpace

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if m.shape != (self.codomain.dim, self.domain.dim):
            raise ArgumentError(
                f"matrix shape {m.shape} does not match spaces "
                f"({self.codomain.dim}, {self.domain.dim})"
            )
        if not np.all(np.isfinite(m)):
            raise ArgumentError("matrix has non-finite entries")
        object.__setattr__(self, "matrix", m)

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.matrix.T

    @property
    def adjoint(self) -> "LinearMap":
        return LinearMap(self.matrix.T, self.codomain.dual, self.domain.dual)

    def compose(self, other: "LinearMap") -> "LinearMap":
        """self o other."""
        return LinearMap(self.matrix @ other.matrix, other.domain, self.codomain)


@dataclass(frozen=True, eq=False)
class NormEstimate:
    lower: float
    upper: float
    witness: np.ndarray
    method: str

    @property
    def heuristic(self) -> bool:
        return self.method == "multistart"

    @property
    def bound(self) -> float:
        """Best available upper-side value: ``upper`` when certified, else ``lower``."""
        return self.upper if math.isfinite(self.upper) else self.lower

    def to_dict(self):
        return {
            "lower": self.lower,
            "upper": self.upper if math.isfinite(self.upper) else "inf",
            "method": self.method,
            "heuristic": self.heuristic,
            "witness": np.asarray(self.witness).tolist(),
        }


def _ratio(T, x):
    nx = T.domain.norm(x)
    return np.where(nx > 0, T.codomain.norm(T(x)) / np.where(nx > 0, nx, 1.0), 0.0)


def _with_hints(T, lower, witness, hints):
    if hints is None:
        return lower, witness
    h = np.atleast_2d(np.asarray(hints, dtype=float))
    if h.size == 0:
        return lower, witness
    r = _ratio(T, h)
    i = int(np.argmax(r))
    if r[i] > lower:
        return float(r[i]), h[i] / T.domain.norm(h[i])
    return lower, witness


def _exact_vertex(T, verts):
    vals = T.codomain.norm(T(verts))
    i = int(np.argmax(vals))
    return NormEstimate(float(vals[i]), float(vals[i]), verts[i].copy(), "exact_vertex")


def _exact_svd(T):
    lg = cholesky(T.domain.gram, lower=True)
    lb = cholesky(T.codomain.gram, lower=True)
    # ||Tx||_B = |lb^T T x|, x = lg^-T z with |z| = ||x||_G
    k = solve_triangular(lg, (lb.T @ T.matrix).T, lower=True).T
    u, s, vt = np.linalg.svd(k)
    x = solve_triangular(lg.T, vt[0], lower=False)
    x = x / T.domain.norm(x)
    return NormEstimate(float(s[0]), float(s[0]), x, "exact_svd")


def _grid2d(T, grid, brackets, golden_iters):
    theta = 2.0 * np.pi * np.arange(grid) / grid
    pts = boundary_point_2d(T.domain, theta)
    vals = T.codomain.norm(T(pts))
    order = np.argsort(-vals, kind="stable")[:brackets]
    step = 2.0 * np.pi / grid
    a = theta[order] - step
    b = theta[order] + step

    def f(t):
        return T.codomain.norm(T(boundary_point_2d(T.domain, t)))

    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(golden_iters):
        left = fc > fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        c_next = np.where(left, b - GOLDEN * (b - a), d)
        d_next = np.where(left, c, a + GOLDEN * (b - a))
        f_new = f(np.where(left, c_next, d_next))
        fc, fd = np.where(left, f_new, fd), np.where(left, fc, f_new)
        c, d = c_next, d_next
    cand_t = np.concatenate([theta, c, d])
    cand_v = np.concatenate([vals, fc, fd])
    i = int(np.argmax(cand_v))
    lower = float(cand_v[i])
    witness = boundary_point_2d(T.domain, cand_t[i])
    outer = sample_ball(T.domain, grid).outer
    upper = max(float(np.max(T.codomain.norm(T(outer)))), lower)
    return NormEstimate(lower, upper, witness, "grid2d")


def _multistart(T, starts, seed, hints, max_iter, warm, keep, tol):
    n = T.domain.dim
    x = sample_unit_sphere(T.domain, starts, seed)
    extra = [np.eye(n)]
    if hints is not None and np.size(hints):
        extra.append(np.atleast_2d(np.asarray(hints, dtype=float)))
    extra = np.vstack(extra)
    nx = T.domain.norm(extra)
    extra = extra[nx > 0] / nx[nx > 0, None]
    x = np.vstack([x, extra])
    vals = T.codomain.norm(T(x))
    dual_dom = T.domain.dual
    for it in range(max_iter):
        if it == warm and len(x) > keep:
            top = np.argsort(-vals, kind="stable")[:keep]
            x, vals = x[top], vals[top]
        g = T.codomain.subgradient(T(x)) @ T.matrix
        xn = dual_dom.subgradient(g)
        ok = np.any(g != 0, axis=1)
        new_vals = np.where(ok, T.codomain.norm(T(xn)), -1.0)
        better = new_vals > vals
        gain = np.where(better, new_vals - vals, 0.0)
        x = np.where(better[:, None], xn, x)
        vals = np.where(better, new_vals, vals)
        if it >= warm and np.all(gain <= tol * np.maximum(vals, 1e-300)):
            break
    i = int(np.argmax(vals))
    w = x[i] / T.domain.norm(x[i])
    return NormEstimate(float(vals[i]), math.inf, w, "multistart")


def operator_norm(
    T: LinearMap,
    *,
    grid: int = 4096,
    brackets: int = 8,
    golden_iters: int = 40,
    starts: int = 64,
    seed: int = 0,
    hints=None,
    max_iter: int = 2000,
    warm: int = 25,
    keep: int = 8,
    tol: float = 1e-15,
) -> NormEstimate:
    """sup ||Tx|| over the domain unit sphere.

    ``hints`` are extra candidate directions; the returned lower bound is
    never below their ratios ``||Th|| / ||h||``.
    """
    dom = T.domain
    if dom.dim < 1:
        raise ArgumentError("zero-dimensional domain")
    if dom.dim == 1:
        x = np.array([[1.0]]) / dom.norm(np.array([1.0]))
        return _exact_vertex(T, x)
    verts = dom.ball_vertices()
    if verts is not None:
        return _exact_vertex(T, verts)
    if dom.gram is not None and T.codomain.gram is not None:
        return _exact_svd(T)
    if dom.dim == 2:
        est = _grid2d(T, grid, brackets, golden_iters)
        lower, w = _with_hints(T, est.lower, est.witness, hints)
        return NormEstimate(lower, max(est.upper, lower), w, est.method)
    return _multistart(T, starts, seed, hints, max_iter, warm, keep, tol)


def condition_estimate(matrix) -> float:
    m = np.asarray(matrix, dtype=float)
    try:
        c = float(np.linalg.cond(m))
    except np.linalg.LinAlgError:
        return math.inf
    return c if math.isfinite(c) else math.inf


def inverse_map(T: LinearMap, max_condition: float = 1e12) -> LinearMap:
    m = T.matrix
    if m.shape[0] != m.shape[1]:
        raise ArgumentError("inverse needs a square map")
    cond = condition_estimate(m)
    if not cond < max_condition:
        raise SingularityError(f"matrix is numerically singular (cond ~ {cond:.3g})", cond)
    return LinearMap(np.linalg.inv(m), T.codomain, T.domain)


def inverse_norm(T: LinearMap, **kwargs) -> NormEstimate:
    """||T^-1||; the inf-sup constant is ``1 / estimate.bound``."""
    return operator_norm(inverse_map(T), **kwargs)
