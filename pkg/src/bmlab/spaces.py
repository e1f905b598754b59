"""Finite-dimensional real normed spaces.

Four norm kinds are supported:

* ``lp``        -- ``(sum |x_i|^p)^(1/p)``, ``p`` in ``[1, inf]``
* ``wlp``       -- ``(sum w_i |x_i|^p)^(1/p)``; for ``p = inf`` it is ``max w_i |x_i|``
* ``polytope``  -- gauge of the convex hull of a centrally symmetric vertex set
* ``quadratic`` -- ``sqrt(x^T G x)`` with ``G`` symmetric positive definite

Every evaluator works on the last axis, so ``space.norm(X)`` with ``X`` of
shape ``(k, dim)`` returns ``k`` norms. Weighted duals use the convention
``w*_i = w_i^(-q/p)`` (``1/w_i`` when either exponent is 1 or inf).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.spatial import ConvexHull, QhullError

from .errors import ArgumentError, GeometryError

INF = math.inf
KINDS = ("lp", "wlp", "polytope", "quadratic")


def conjugate_exponent(p: float) -> float:
    if p == 1:
        return INF
    if p == INF:
        return 1.0
    return p / (p - 1.0)


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _dedupe(points, tol=1e-10):
    """Drop near-duplicate rows, keeping first occurrences in lexicographic order."""
    if len(points) == 0:
        return points
    order = np.lexsort(points.T[::-1])
    pts = points[order]
    keep = [0]
    for i in range(1, len(pts)):
        if np.max(np.abs(pts[i] - pts[keep[-1]])) > tol * (1.0 + np.max(np.abs(pts[i]))):
            # lexicographic neighbours are not always the nearest; compare to all kept
            diffs = np.max(np.abs(pts[keep] - pts[i]), axis=1)
            if np.all(diffs > tol * (1.0 + np.max(np.abs(pts[i])))):
                keep.append(i)
    return pts[keep]


@dataclass(frozen=True, eq=False)
class NormedSpace:
    dim: int
    kind: str
    p: float = 2.0
    weights: np.ndarray | None = field(default=None, repr=False)
    vertices: np.ndarray | None = field(default=None, repr=False)
    matrix: np.ndarray | None = field(default=None, repr=False)

    # ---- constructors -------------------------------------------------
    @classmethod
    def lp(cls, p, dim):
        return cls(dim=int(dim), kind="lp", p=_parse_p(p))

    @classmethod
    def weighted_lp(cls, p, weights):
        w = np.asarray(weights, dtype=float)
        return cls(dim=len(w), kind="wlp", p=_parse_p(p), weights=w)

    @classmethod
    def polytope(cls, vertices):
        v = np.atleast_2d(np.asarray(vertices, dtype=float))
        return cls(dim=v.shape[1], kind="polytope", p=INF, vertices=v)

    @classmethod
    def quadratic(cls, matrix):
        g = np.atleast_2d(np.asarray(matrix, dtype=float))
        return cls(dim=g.shape[0], kind="quadratic", p=2.0, matrix=g)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ArgumentError(f"unknown norm kind {self.kind!r}")
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise ArgumentError(f"dim must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        if self.kind in ("lp", "wlp"):
            p = float(self.p)
            if not (p >= 1.0):
                raise ArgumentError(f"p must lie in [1, inf], got {p}")
            object.__setattr__(self, "p", p)
        if self.kind == "wlp":
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (self.dim,) or not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise ArgumentError("weights must be positive, finite, length dim")
            object.__setattr__(self, "weights", _readonly(w))
        if self.kind == "polytope":
            v = np.asarray(self.vertices, dtype=float)
            if v.ndim != 2 or v.shape[1] != self.dim or not np.all(np.isfinite(v)):
                raise ArgumentError("vertices must be a finite (k, dim) array")
            _check_symmetric(v)
            if np.linalg.matrix_rank(v) < self.dim:
                raise GeometryError("polytope vertices do not span the space")
            object.__setattr__(self, "vertices", _readonly(v))
        if self.kind == "quadratic":
            g = np.asarray(self.matrix, dtype=float)
            if g.shape != (self.dim, self.dim) or not np.all(np.isfinite(g)):
                raise ArgumentError("matrix must be a finite (dim, dim) array")
            if np.max(np.abs(g - g.T)) > 1e-12 * max(1.0, np.max(np.abs(g))):
                raise ArgumentError("quadratic matrix must be symmetric")
            g = 0.5 * (g + g.T)
            if np.min(np.linalg.eigvalsh(g)) <= 0:
                raise ArgumentError("quadratic matrix must be positive definite")
            object.__setattr__(self, "matrix", _readonly(g))

    def __repr__(self):
        extra = f", p={self.p}" if self.kind in ("lp", "wlp") else ""
        return f"NormedSpace({self.kind}, dim={self.dim}{extra})"

    # ---- derived data -------------------------------------------------
    @cached_property
    def _scale(self):
        # wlp norm is ||s * x||_p with s = w^(1/p) (s = w for p = inf)
        if self.kind == "lp":
            return None
        if self.p == INF:
            return self.weights
        return self.weights ** (1.0 / self.p)

    @cached_property
    def _chol(self):
        return cho_factor(self.matrix, lower=True)

    @cached_property
    def _hull(self):
        """(extreme vertices, polar vertices) of the unit ball."""
        v = self.vertices
        if self.dim == 1:
            r = np.max(np.abs(v[:, 0]))
            return np.array([[r], [-r]]), np.array([[1.0 / r], [-1.0 / r]])
        try:
            hull = ConvexHull(v)
        except QhullError as exc:
            raise GeometryError(f"degenerate polytope hull: {exc}") from None
        offsets = -hull.equations[:, -1]
        if np.any(offsets <= 1e-12 * np.max(np.abs(v))):
            raise GeometryError("origin is not interior to the vertex hull")
        polar = _dedupe(hull.equations[:, :-1] / offsets[:, None])
        ext = v[np.sort(hull.vertices)]
        return ext, polar

    @property
    def gram(self):
        """Gram matrix if the norm is Euclidean-type, else None."""
        if self.kind == "quadratic":
            return self.matrix
        if self.kind == "lp" and self.p == 2:
            return np.eye(self.dim)
        if self.kind == "wlp" and self.p == 2:
            return np.diag(self.weights)
        return None

    @property
    def is_polytopal(self):
        return self.kind == "polytope" or (self.kind in ("lp", "wlp") and self.p in (1.0, INF))

    # ---- evaluation ---------------------------------------------------
    def norm(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "quadratic":
            q = np.einsum("...i,ij,...j->...", x, self.matrix, x)
            return np.sqrt(np.maximum(q, 0.0))
        if self.kind == "polytope":
            _, polar = self._hull
            return np.maximum(np.max(x @ polar.T, axis=-1), 0.0)
        y = x if self._scale is None else x * self._scale
        return _lp_norm(y, self.p)

    def subgradient(self, x):
        """Norming functional J(x): <J, x> = ||x||, ||J||_* = 1 (zero at x = 0)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x2 = np.atleast_2d(x)
        if self.kind == "quadratic":
            gx = x2 @ self.matrix
            n = self.norm(x2)
            out = np.divide(gx, n[:, None], out=np.zeros_like(gx), where=n[:, None] > 0)
        elif self.kind == "polytope":
            _, polar = self._hull
            out = polar[np.argmax(x2 @ polar.T, axis=-1)]
            out = np.where(np.any(x2 != 0, axis=-1)[:, None], out, 0.0)
        else:
            s = np.ones(self.dim) if self._scale is None else self._scale
            out = s * _lp_subgradient(x2 * s, self.p)
        return out[0] if single else out

    @cached_property
    def dual(self) -> "NormedSpace":
        """Space carrying the dual norm under the pairing <f, x> = f . x."""
        if self.kind == "lp":
            return NormedSpace.lp(conjugate_exponent(self.p), self.dim)
        if self.kind == "wlp":
            q = conjugate_exponent(self.p)
            inv = 1.0 / self._scale
            w = inv if q == INF else inv ** q
            return NormedSpace.weighted_lp(q, w)
        if self.kind == "quadratic":
            ginv = cho_solve(self._chol, np.eye(self.dim))
            return NormedSpace.quadratic(0.5 * (ginv + ginv.T))
        _, polar = self._hull
        return NormedSpace.polytope(polar)

    def ball_vertices(self, max_count=1 << 16):
        """Extreme points of the closed unit ball when it is a polytope, else None."""
        if self.kind == "polytope":
            return self._hull[0]
        if self.kind in ("lp", "wlp") and self.p in (1.0, INF):
            s = np.ones(self.dim) if self._scale is None else self._scale
            if self.p == 1.0:
                eye = np.diag(1.0 / s)
                return np.vstack([eye, -eye])
            if 2 ** self.dim > max_count:
                return None
            signs = np.array(np.meshgrid(*[[1.0, -1.0]] * self.dim, indexing="ij"))
            return signs.reshape(self.dim, -1).T / s
        return None

    def polar_vertices(self, max_count=1 << 16):
        """Extreme points of the dual unit ball when polytopal, else None."""
        if self.kind == "polytope":
            return self._hull[1]
        if not self.is_polytopal:
            return None
        return self.dual.ball_vertices(max_count)

    # ---- serialization ------------------------------------------------
    def to_dict(self):
        d = {"dim": self.dim, "kind": self.kind}
        if self.kind in ("lp", "wlp"):
            d["p"] = "inf" if self.p == INF else self.p
        if self.kind == "wlp":
            d["weights"] = self.weights.tolist()
        if self.kind == "polytope":
            d["vertices"] = self.vertices.tolist()
        if self.kind == "quadratic":
            d["matrix"] = self.matrix.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        try:
            kind = d["kind"]
            if kind == "lp":
                return cls.lp(d["p"], d["dim"])
            if kind == "wlp":
                space = cls.weighted_lp(d["p"], d["weights"])
            elif kind == "polytope":
                space = cls.polytope(d["vertices"])
            elif kind == "quadratic":
                space = cls.quadratic(d["matrix"])
            else:
                raise ArgumentError(f"unknown norm kind {kind!r}")
        except (KeyError, TypeError) as exc:
            raise ArgumentError(f"malformed space specification: {exc}") from None
        if "dim" in d and int(d["dim"]) != space.dim:
            raise ArgumentError("declared dim disagrees with data")
        return space


def _parse_p(p):
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity", "oo"):
            return INF
        p = float(p)
    return float(p)


def _check_symmetric(v, tol=1e-9):
    scale = max(1.0, float(np.max(np.abs(v))))
    for row in v:
        if np.min(np.max(np.abs(v + row), axis=1)) > tol * scale:
            raise GeometryError("polytope vertex set is not centrally symmetric")


def _lp_norm(y, p):
    a = np.abs(y)
    if p == INF:
        return np.max(a, axis=-1)
    if p == 1.0:
        return np.sum(a, axis=-1)
    if p == 2.0:
        return np.linalg.norm(y, axis=-1)
    m = np.max(a, axis=-1)
    safe = np.where(m > 0, m, 1.0)
    return m * np.sum((a / safe[..., None]) ** p, axis=-1) ** (1.0 / p)


def _lp_subgradient(y, p):
    # rows of y are nonzero or all-zero; returns rows of the dual unit sphere
    if p == 1.0:
        return np.sign(y)
    if p == INF:
        out = np.zeros_like(y)
        idx = np.argmax(np.abs(y), axis=-1)
        rows = np.arange(len(y))
        out[rows, idx] = np.sign(y[rows, idx])
        return out
    n = _lp_norm(y, p)
    safe = np.where(n > 0, n, 1.0)
    z = y / safe[:, None]
    return np.sign(z) * np.abs(z) ** (p - 1.0)


# ---- public operations --------------------------------------------------

def eval_norm(space: NormedSpace, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (space.dim,):
        raise ArgumentError(f"expected a vector of length {space.dim}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ArgumentError("vector has non-finite entries")
    return float(space.norm(x))


def dual_space(space: NormedSpace) -> NormedSpace:
    return space.dual


def sample_unit_sphere(space, count: int, seed: int):
    """``count`` points on the unit sphere of ``space``.

    Directions are standard normal draws from ``numpy.random.default_rng(seed)``
    (PCG64 seeded through SeedSequence), rescaled radially.
    """
    if count < 1:
        raise ArgumentError("count must be >= 1")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((count, space.dim))
    n = space.norm(z)
    while np.any(n == 0):  # measure-zero, but keep the contract
        bad = n == 0
        z[bad] = rng.standard_normal((int(bad.sum()), space.dim))
        n = space.norm(z)
    return z / n[:, None]


def boundary_point_2d(space, theta):
    """Point of the unit sphere in direction theta; vectorized over theta."""
    if space.dim != 2:
        raise ArgumentError("boundary_point_2d needs a 2-dimensional norm")
    theta = np.asarray(theta, dtype=float)
    u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    return u / space.norm(u)[..., None]


@dataclass(frozen=True, eq=False)
class TwoDimSubspace:
    """Plane span{b1, b2} of an ambient space, in coefficient coordinates."""

    ambient: NormedSpace
    basis: np.ndarray  # shape (2, ambient.dim)

    dim = 2

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.shape != (2, self.ambient.dim) or not np.all(np.isfinite(b)):
            raise ArgumentError("basis must be two finite ambient vectors")
        nb = b / np.linalg.norm(b, axis=1, keepdims=True)
        if np.linalg.det(nb @ nb.T) < 1e-10:
            raise GeometryError("basis vectors are (numerically) dependent")
        object.__setattr__(self, "basis", _readonly(b))

    def norm(self, c):
        return self.ambient.norm(np.asarray(c, dtype=float) @ self.basis)

    def subgradient(self, c):
        # restriction of an ambient norming functional norms the plane too
        return self.ambient.subgradient(np.asarray(c, dtype=float) @ self.basis) @ self.basis.T

    def as_space(self):
        """Exact 2-D NormedSpace for the induced norm, or None if not closed-form."""
        return induced_space(self.ambient, self.basis.T)


def _is_coordinate_selector(basis):
    nz = basis != 0
    if not np.all(nz.sum(axis=0) == 1):
        return None
    rows = np.argmax(nz, axis=0)
    if len(set(rows.tolist())) != basis.shape[1]:
        return None
    if not np.all(basis[rows, np.arange(basis.shape[1])] == 1.0):
        return None
    return rows


def induced_space(space: NormedSpace, basis) -> NormedSpace | None:
    """Norm ``c -> ||basis @ c||`` as a NormedSpace, when representable.

    ``basis`` has shape ``(dim, k)``. Euclidean-type norms and polytopal norms
    are closed under sections; lp/wlp are closed under coordinate selection.
    """
    basis = np.asarray(basis, dtype=float)
    if basis.ndim != 2 or basis.shape[0] != space.dim:
        raise ArgumentError("basis must have shape (dim, k)")
    k = basis.shape[1]
    if np.linalg.matrix_rank(basis) < k:
        raise GeometryError("basis columns are dependent")
    g = space.gram
    if g is not None:
        return NormedSpace.quadratic(basis.T @ g @ basis)
    rows = _is_coordinate_selector(basis)
    if rows is not None and space.kind in ("lp", "wlp"):
        if space.kind == "lp":
            return NormedSpace.lp(space.p, k)
        return NormedSpace.weighted_lp(space.p, space.weights[rows])
    polar = space.polar_vertices()
    if polar is not None:
        # a section of the ball is polar to the projection of the polar body
        return NormedSpace.polytope(polar @ basis).dual
    return None


def parse_norm(text: str, dim: int) -> NormedSpace:
    """Parse ``lp:P``, ``wlp:P:w1,w2,...``, ``quadratic:identity`` or ``quadratic:diag:d1,...``."""
    parts = text.strip().split(":")
    try:
        if parts[0] == "lp" and len(parts) == 2:
            return NormedSpace.lp(parts[1], dim)
        if parts[0] == "wlp" and len(parts) == 3:
            w = [float(t) for t in parts[2].split(",")]
            if len(w) != dim:
                raise ArgumentError("weight count differs from dim")
            return NormedSpace.weighted_lp(parts[1], w)
        if parts[0] == "quadratic" and parts[1:] == ["identity"]:
            return NormedSpace.quadratic(np.eye(dim))
        if parts[0] == "quadratic" and len(parts) == 3 and parts[1] == "diag":
            d = [float(t) for t in parts[2].split(",")]
            if len(d) != dim:
                raise ArgumentError("diagonal length differs from dim")
            return NormedSpace.quadratic(np.diag(d))
    except ValueError as exc:
        raise ArgumentError(f"cannot parse norm {text!r}: {exc}") from None
    raise ArgumentError(f"cannot parse norm {text!r}")
