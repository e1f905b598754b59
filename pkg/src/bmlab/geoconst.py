"""Banach-Mazur and von Neumann-Jordan constants.

The Banach-Mazur distance from a plane ``V`` to Euclidean ``R^2`` is

    d(V) = min over ellipses A of  max_{||x||<=1} |x|_A * max_{|x|_A<=1} ||x||

Both factors are maxima of a quadratic form over a convex body, so they are
attained at extreme points: of the unit ball for the first factor and of the
dual ball (with ``A^-1``) for the second. For polytopal planes the extreme
points are exact; otherwise we use outer polygons of both balls, which makes
every returned distance an upper bound on the true one. Ellipses are searched
over unit-determinant SPD matrices ``A = expm([[a, b], [b, -a]])``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.optimize import minimize

from ._polygon import exact_ball, sample_ball
from .errors import ArgumentError
from .spaces import NormedSpace, TwoDimSubspace, boundary_point_2d, sample_unit_sphere

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class EllipseParam:
    """Unit-determinant SPD matrix ``R(phi) diag(t, 1/t) R(phi)^T``."""

    phi: float
    t: float

    @property
    def matrix(self):
        c, s = math.cos(self.phi), math.sin(self.phi)
        r = np.array([[c, -s], [s, c]])
        return r @ np.diag([self.t, 1.0 / self.t]) @ r.T

    @classmethod
    def from_matrix(cls, a):
        a = 0.5 * (np.asarray(a, dtype=float) + np.asarray(a, dtype=float).T)
        a = a / math.sqrt(np.linalg.det(a))
        w, v = np.linalg.eigh(a)
        t = float(w[1])
        phi = math.atan2(v[1, 1], v[0, 1]) % math.pi
        return cls(phi, max(t, 1.0))

    def to_dict(self):
        return {"phi": self.phi, "t": self.t}


@dataclass(frozen=True, eq=False)
class ConstantEstimate:
    value: float
    witness: Any
    starts: int
    seed: int
    raw: float = float("nan")
    method: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        w = self.witness
        if isinstance(w, DbmWitness):
            w = w.to_dict()
        elif isinstance(w, tuple):
            w = [np.asarray(v).tolist() for v in w]
        return {
            "value": self.value,
            "raw": self.raw,
            "method": self.method,
            "starts": self.starts,
            "seed": self.seed,
            "witness": w,
        }


@dataclass(frozen=True, eq=False)
class DbmWitness:
    plane: Any  # 2-D NormedSpace or TwoDimSubspace
    ellipse: EllipseParam
    resolution: int | None  # None: exact extreme points

    def to_dict(self):
        d = {"ellipse": self.ellipse.to_dict(), "resolution": self.resolution}
        if isinstance(self.plane, TwoDimSubspace):
            d["basis"] = self.plane.basis.tolist()
        return d


# ---- plane representations ----------------------------------------------

def _classify(plane):
    if isinstance(plane, TwoDimSubspace):
        space = plane.as_space()
        norm2d = plane
    elif isinstance(plane, NormedSpace):
        space = plane
        norm2d = plane
    else:
        raise ArgumentError("expected a 2-D NormedSpace or TwoDimSubspace")
    if norm2d.dim != 2:
        raise ArgumentError(f"Banach-Mazur distance to R^2 needs dim 2, got {norm2d.dim}")
    if space is not None and space.gram is not None:
        return "quadratic", space
    if space is not None and space.is_polytopal:
        return "exact", exact_ball(space.ball_vertices(), space.polar_vertices())
    return "sampled", norm2d


def _half(points):
    # quadratic forms are even; keep one of each +-pair
    ang = np.arctan2(points[:, 1], points[:, 0])
    return points[(ang >= 0) & (ang < math.pi)] if len(points) > 2 else points


def _features(points):
    p = _half(points)
    return np.stack([p[:, 0] ** 2 + p[:, 1] ** 2, p[:, 0] ** 2 - p[:, 1] ** 2, 2 * p[:, 0] * p[:, 1]])


def _coeffs(ab):
    a, b = ab[..., 0], ab[..., 1]
    r = np.hypot(a, b)
    sr = np.where(r > 1e-8, np.sinh(r) / np.where(r > 1e-8, r, 1.0), 1.0 + r * r / 6.0)
    return np.cosh(r), sr * a, sr * b


def _objective(ab, fv, ff):
    """d(N, A)^2 for each row of ab (whitened coordinates)."""
    ch, sa, sb = _coeffs(np.atleast_2d(ab))
    primal = np.stack([ch, sa, sb], axis=1) @ fv
    dual = np.stack([ch, -sa, -sb], axis=1) @ ff
    return np.max(primal, axis=1) * np.max(dual, axis=1)


def _pattern_search(f, center, fc, radius, min_radius=1e-13, max_iter=400):
    offsets = np.array([(i, j) for i in range(-2, 3) for j in range(-2, 3) if (i, j) != (0, 0)]) / 2.0
    for _ in range(max_iter):
        if radius < min_radius:
            break
        cand = center + radius * offsets
        vals = f(cand)
        i = int(np.argmin(vals))
        if vals[i] < fc:
            center, fc = cand[i], float(vals[i])
        else:
            radius *= 0.25
    return center, fc


def _whitening(points):
    m = points.T @ points / len(points)
    w, v = np.linalg.eigh(m)
    return v @ np.diag(w ** -0.5) @ v.T


def _minimize_ellipse(fv, ff, grid, t_cap, start=None, radius=None):
    f = lambda ab: _objective(ab, fv, ff)  # noqa: E731
    if start is None:
        phi = math.pi * np.arange(grid) / grid
        logt = np.linspace(0.0, math.log(t_cap), grid)
        pp, ll = np.meshgrid(phi, logt, indexing="ij")
        ab = np.stack([(ll * np.cos(2 * pp)).ravel(), (ll * np.sin(2 * pp)).ravel()], axis=1)
        vals = np.concatenate([f(chunk) for chunk in np.array_split(ab, max(1, len(ab) // 1024))])
        i = int(np.argmin(vals))
        start, fstart = ab[i], float(vals[i])
        radius = math.log(t_cap) / max(grid - 1, 1) if t_cap > 1 else 0.1
    else:
        fstart = float(f(start)[0])
    return _pattern_search(f, np.asarray(start, dtype=float), fstart, max(radius, 1e-3))


def _ellipse_in_original(ab, w):
    ch, sa, sb = _coeffs(np.asarray(ab, dtype=float))
    a_white = np.array([[ch + sa, sb], [sb, ch - sa]])
    return EllipseParam.from_matrix(w @ a_white @ w)


def dbm_to_euclidean(plane, *, resolution: int = 4096, grid: int = 64, t_cap: float = 2.0,
                     base_resolution: int = 256) -> ConstantEstimate:
    """Banach-Mazur distance from a 2-D norm to the Euclidean plane.

    Sampled (non-polytopal, non-Euclidean) planes are processed on the level
    sequence ``base_resolution, 2*base_resolution, ..., resolution``; each
    level starts from the previous optimum and the minimum over levels is
    returned, so doubling ``resolution`` can only lower the result.
    """
    kind, data = _classify(plane)
    if kind == "quadratic":
        e = EllipseParam.from_matrix(data.gram)
        return ConstantEstimate(1.0, DbmWitness(plane, e, None), 0, 0, raw=1.0, method="exact_quadratic")
    if kind == "exact":
        w = _whitening(data.outer)
        fv, ff = _features(data.outer @ w), _features(data.dual_outer @ np.linalg.inv(w))
        ab, val = _minimize_ellipse(fv, ff, grid, t_cap)
        best = (val, ab, None)
        method = "exact_polygon"
    else:
        levels = []
        k = min(base_resolution, resolution)
        while k < resolution:
            levels.append(k)
            k *= 2
        levels.append(resolution)
        w = None
        best = None
        ab = None
        for res in levels:
            balls = sample_ball(data, res)
            if w is None:
                w = _whitening(balls.inner)
                winv = np.linalg.inv(w)
            fv, ff = _features(balls.outer @ w), _features(balls.dual_outer @ winv)
            if ab is None:
                ab, val = _minimize_ellipse(fv, ff, grid, t_cap)
            else:
                ab, val = _minimize_ellipse(fv, ff, grid, t_cap, start=ab, radius=1e-2)
            if best is None or val < best[0]:
                best = (val, ab, res)
        method = "sampled_polygon"
    val, ab, res = best
    raw = math.sqrt(val)
    ellipse = _ellipse_in_original(ab, w)
    return ConstantEstimate(max(raw, 1.0), DbmWitness(plane, ellipse, res), 0, 0, raw=raw, method=method)


def dbm_for_ellipse(plane, ellipse: EllipseParam, resolution: int | None = None) -> float:
    """Re-evaluate ``max|x|_A * max||y||`` for a fixed ellipse (witness check)."""
    kind, data = _classify(plane)
    a = ellipse.matrix
    if kind == "quadratic":
        g = data.gram
        ev = np.linalg.eigvals(np.linalg.solve(g, a)).real
        return math.sqrt(ev.max() / ev.min())
    balls = data if kind == "exact" else sample_ball(data, resolution or 4096)
    prim = np.einsum("ij,jk,ik->i", balls.outer, a, balls.outer).max()
    dual = np.einsum("ij,jk,ik->i", balls.dual_outer, np.linalg.inv(a), balls.dual_outer).max()
    return math.sqrt(prim * dual)


# ---- von Neumann-Jordan --------------------------------------------------

def _nj(space, x, y):
    nx, ny = space.norm(x), space.norm(y)
    num = space.norm(x + y) ** 2 + space.norm(x - y) ** 2
    return num / (2.0 * (nx ** 2 + ny ** 2))


def nj_ratio(space, x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (space.dim,) or y.shape != (space.dim,):
        raise ArgumentError("x and y must be vectors of the space's dimension")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ArgumentError("non-finite entries")
    if space.norm(x) == 0 and space.norm(y) == 0:
        raise ArgumentError("x and y are both zero")
    return float(_nj(space, x, y))


def _nm_maximize(fun, x0, xatol=1e-10, fatol=1e-14, maxiter=2000):
    res = minimize(lambda z: -fun(z), x0, method="Nelder-Mead",
                   options={"xatol": xatol, "fatol": fatol, "maxiter": maxiter, "maxfev": maxiter})
    return res.x, -float(res.fun)


def cnj_estimate(space: NormedSpace, starts: int = 64, seed: int = 0, *, grid: int = 256,
                 refine: int = 4) -> ConstantEstimate:
    """Lower bound on C_NJ with a witness pair."""
    if starts < 1:
        raise ArgumentError("starts must be >= 1")
    n = space.dim
    e0 = np.zeros(n)
    e0[0] = 1.0
    best_val, best_pair = 1.0, (e0 / space.norm(e0), np.zeros(n))
    if n == 1:
        return ConstantEstimate(1.0, best_pair, starts, seed, raw=1.0, method="exact_1d")
    if n == 2:
        theta = 2.0 * np.pi * np.arange(grid) / grid
        pts = boundary_point_2d(space, theta)
        x = np.repeat(pts, grid, axis=0)
        y = np.tile(pts, (grid, 1))
        vals = _nj(space, x, y)
        order = np.argsort(-vals, kind="stable")[:refine]

        def pair(z):
            u = boundary_point_2d(space, z[0])
            v = boundary_point_2d(space, z[1]) * math.exp(min(z[2], 0.0))
            return u, v

        def fun(z):
            u, v = pair(z)
            return float(_nj(space, u, v))

        for idx in order:
            i, j = divmod(int(idx), grid)
            if vals[idx] > best_val:
                best_val, best_pair = float(vals[idx]), (pts[i], pts[j])
            z, v = _nm_maximize(fun, np.array([theta[i], theta[j], 0.0]))
            if v > best_val:
                best_val, best_pair = v, pair(z)
        method = "grid2d"
    else:
        cands = []
        for i in range(n):
            for j in range(i + 1, n):
                ei, ej = np.eye(n)[i], np.eye(n)[j]
                cands.append((ei, ej))
                cands.append((ei + ej, ei - ej))
        pts = sample_unit_sphere(space, 2 * starts, seed)
        cands += [(pts[2 * k], pts[2 * k + 1]) for k in range(starts)]
        x = np.array([c[0] for c in cands])
        y = np.array([c[1] for c in cands])
        vals = _nj(space, x, y)
        order = np.argsort(-vals, kind="stable")[:refine]

        def fun(z):
            u, v = z[:n], z[n:]
            if space.norm(u) == 0 and space.norm(v) == 0:
                return 0.0
            return float(_nj(space, u, v))

        for idx in order:
            if vals[idx] > best_val:
                best_val, best_pair = float(vals[idx]), (x[idx], y[idx])
            z, v = _nm_maximize(fun, np.concatenate([x[idx], y[idx]]))
            if v > best_val:
                best_val, best_pair = v, (z[:n], z[n:])
        method = "multistart"
    u, v = best_pair
    raw = float(_nj(space, np.asarray(u), np.asarray(v)))
    return ConstantEstimate(min(max(raw, 1.0), 2.0), (np.asarray(u), np.asarray(v)), starts, seed,
                            raw=raw, method=method)


# ---- Banach-Mazur constant ------------------------------------------------

def _orthonormal_pair(b):
    q, _ = np.linalg.qr(np.asarray(b, dtype=float).T)
    return q[:, :2].T


def cbm_estimate(space: NormedSpace, starts: int = 32, seed: int = 0, *, resolution: int = 4096,
                 grid: int = 64, search_resolution: int = 256, search_grid: int = 16,
                 keep: int = 3, rounds: int = 12, perturbations: int = 4) -> ConstantEstimate:
    """Estimate of C_BM = sup over planes V of d(V, R^2)^2, with a witness plane."""
    if space.dim < 2:
        raise ArgumentError("C_BM needs dim >= 2")
    if starts < 1:
        raise ArgumentError("starts must be >= 1")
    if space.dim == 2:
        d = dbm_to_euclidean(space, resolution=resolution, grid=grid)
        return ConstantEstimate(min(d.value ** 2, 2.0), d.witness, starts, seed, raw=d.raw ** 2,
                                method=d.method)
    n = space.dim
    if space.gram is not None:
        plane = TwoDimSubspace(space, np.eye(n)[:2])
        d = dbm_to_euclidean(plane)
        return ConstantEstimate(1.0, d.witness, starts, seed, raw=1.0, method="exact_quadratic")

    def score(basis):
        d = dbm_to_euclidean(TwoDimSubspace(space, basis), resolution=search_resolution,
                             grid=search_grid)
        return d.raw ** 2

    cands = [np.eye(n)[[i, j]] for i in range(n) for j in range(i + 1, n)]
    rng = np.random.default_rng([seed, 0])
    cands += [_orthonormal_pair(rng.standard_normal((2, n))) for _ in range(starts)]
    scores = np.array([score(b) for b in cands])
    order = np.argsort(-scores, kind="stable")[:keep]
    finalists = [cands[i] for i in order]
    for rank, idx in enumerate(order):
        basis, s = cands[idx], float(scores[idx])
        prng = np.random.default_rng([seed, 1, rank])
        for r in range(rounds):
            eps = 0.3 * 0.5 ** r
            trial = [_orthonormal_pair(basis + eps * prng.standard_normal((2, n)))
                     for _ in range(perturbations)]
            ts = [score(b) for b in trial]
            k = int(np.argmax(ts))
            if ts[k] > s:
                basis, s = trial[k], ts[k]
        finalists.append(basis)
    # coarse scores are noisy upper bounds; rank finalists at full resolution
    fine = [dbm_to_euclidean(TwoDimSubspace(space, b), resolution=resolution, grid=grid)
            for b in finalists]
    d = fine[int(np.argmax([f.raw for f in fine]))]
    raw = d.raw ** 2
    return ConstantEstimate(min(max(raw, 1.0), 2.0), d.witness, starts, seed, raw=raw,
                            method="subspace_search")
