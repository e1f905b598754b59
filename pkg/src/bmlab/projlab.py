"""Oblique projections and audits of the projection-norm estimate.

For a nontrivial projection P the audit checks

    ||I - P|| <= min(1 + ||P||, cbm * ||P||)

at operator level, and per sampled vector x with Px != 0 != (I - P)x

    ||(I - P)x|| <= d(span{Px, (I - P)x})^2 * ||P|| * ||x||

where d is the Banach-Mazur distance of that plane to Euclidean R^2.
"""
from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, GenerationError, GeometryError
from .geoconst import dbm_to_euclidean
from .opnorm import LinearMap, NormEstimate, operator_norm
from .spaces import NormedSpace, TwoDimSubspace, sample_unit_sphere


@dataclass(frozen=True, eq=False)
class Projection:
    map: LinearMap
    range_basis: np.ndarray  # (dim, r)
    kernel_basis: np.ndarray  # (dim, dim - r)
    nontrivial: bool

    @property
    def matrix(self):
        return self.map.matrix

    @property
    def space(self) -> NormedSpace:
        return self.map.domain

    @property
    def rank(self) -> int:
        return self.range_basis.shape[1]

    def complement(self) -> "Projection":
        n = self.space.dim
        return Projection(LinearMap(np.eye(n) - self.matrix, self.space, self.space),
                          self.kernel_basis, self.range_basis, self.nontrivial)

    def idempotency_defect(self) -> float:
        p = self.matrix
        return float(np.linalg.norm(p @ p - p) / (1.0 + np.linalg.norm(p)))


def _as_columns(basis, n):
    b = np.asarray(basis, dtype=float)
    if b.size == 0:
        return np.zeros((n, 0))
    if b.ndim == 1:
        b = b[:, None]
    if b.shape[0] != n:
        b = b.T
    if b.shape[0] != n:
        raise GeometryError("basis vectors must have the space's dimension")
    return b


def make_projection(range_basis, kernel_basis, space: NormedSpace, max_condition=1e12) -> Projection:
    """Projection onto span(range_basis) along span(kernel_basis).

    Bases may be given as lists of vectors or as column matrices.
    """
    n = space.dim
    r = _as_columns(range_basis, n)
    k = _as_columns(kernel_basis, n)
    if r.shape[1] + k.shape[1] != n:
        raise GeometryError("range and kernel dimensions must add up to dim")
    b = np.hstack([r, k])
    if np.linalg.matrix_rank(b) < n or np.linalg.cond(b) > max_condition:
        raise GeometryError("range and kernel are not complementary")
    # P = B diag(I_r, 0) B^-1
    binv = np.linalg.inv(b)
    p = r @ binv[: r.shape[1]]
    nontrivial = 0 < r.shape[1] < n
    return Projection(LinearMap(p, space, space), r, k, nontrivial)


def random_projection(space: NormedSpace, seed: int, rank: int | None = None,
                      max_condition: float = 1e6, budget: int = 100) -> Projection:
    """Seeded projection between Gaussian complementary subspaces."""
    n = space.dim
    if n < 2:
        raise GeometryError("nontrivial projections need dim >= 2")
    rng = np.random.default_rng(seed)
    for _ in range(budget):
        r = int(rng.integers(1, n)) if rank is None else rank
        b = rng.standard_normal((n, n))
        if np.linalg.cond(b) <= max_condition:
            return make_projection(b[:, :r], b[:, r:], space)
    raise GenerationError("could not draw a well-conditioned subspace pair")


@dataclass(eq=False)
class ProjectionAudit:
    norm_P: NormEstimate
    norm_I_minus_P: NormEstimate
    bound_C: float = math.nan
    cbm: float = math.nan
    operator_slack: float = math.nan
    per_vector_worst_slack: float = math.inf
    samples_checked: int = 0
    dbm_evaluations: int = 0
    witness_operator: np.ndarray | None = None
    witness_vector: np.ndarray | None = None
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def ratio(self) -> float:
        """Observed ||I - P|| / ||P||."""
        return self.norm_I_minus_P.lower / self.norm_P.bound

    def to_dict(self):
        return {
            "norm_P": self.norm_P.to_dict(),
            "norm_I_minus_P": self.norm_I_minus_P.to_dict(),
            "bound_C": self.bound_C,
            "cbm": self.cbm,
            "ratio": self.ratio,
            "operator_slack": self.operator_slack,
            "per_vector_worst_slack": self.per_vector_worst_slack,
            "samples_checked": self.samples_checked,
            "dbm_evaluations": self.dbm_evaluations,
            "witness_vector": None if self.witness_vector is None else self.witness_vector.tolist(),
            "violations": self.violations,
            "passed": self.passed,
        }


def projection_norms(P: Projection, seed: int = 0, **opts) -> ProjectionAudit:
    if not P.nontrivial:
        raise ContractError("projection is trivial (P = 0 or P = I)")
    n = P.space.dim
    q = LinearMap(np.eye(n) - P.matrix, P.space, P.space)
    norm_p = operator_norm(P.map, seed=seed, **opts)
    norm_q = operator_norm(q, seed=seed + 1, **opts)
    return ProjectionAudit(norm_p, norm_q, witness_operator=norm_q.witness)


def audit_projection(P: Projection, samples: int = 512, seed: int = 0, cbm: float = 2.0, *,
                     tol: float = 1e-6, dbm_evals: int = 8, dbm_opts: dict | None = None,
                     norms: ProjectionAudit | None = None, **opts) -> ProjectionAudit:
    """Audit the projection estimate; failures are recorded, never raised.

    ``cbm`` must be a trusted value or an upper bound of C_BM for the space.
    The per-vector inequality is evaluated exactly (with a Banach-Mazur
    distance) for the ``dbm_evals`` hardest samples and for every sample that
    the trivial bound ``d >= 1`` cannot settle.
    """
    audit = norms if norms is not None else projection_norms(P, seed=seed, **opts)
    space = P.space
    n = space.dim
    np_up = audit.norm_P.bound
    nq_lo = audit.norm_I_minus_P.lower
    audit.cbm = cbm
    audit.bound_C = min(1.0 + 1.0 / audit.norm_P.lower, cbm)

    rhs = min(1.0 + np_up, cbm * np_up)
    audit.operator_slack = rhs - nq_lo
    if nq_lo > rhs + tol * (1.0 + rhs):
        audit.violations.append({
            "check": "operator", "lhs": nq_lo, "rhs": rhs,
            "witness": audit.norm_I_minus_P.witness.tolist(),
        })
    if audit.norm_P.bound < 1.0 - 1e-9:
        audit.violations.append({"check": "norm_P_at_least_one", "lhs": audit.norm_P.bound, "rhs": 1.0})

    # per-vector check; include the operator witnesses as samples
    xs = [sample_unit_sphere(space, samples, seed + 2)]
    for w in (audit.norm_I_minus_P.witness, audit.norm_P.witness):
        xs.append(np.atleast_2d(w) / space.norm(w))
    x = np.vstack(xs)
    px = x @ P.matrix.T
    qx = x - px
    nx, npx, nqx = space.norm(x), space.norm(px), space.norm(qx)
    split = (npx > 1e-12 * nx) & (nqx > 1e-12 * nx)
    # with d >= 1 the bound is at least ||P|| ||x||
    base_slack = (np_up * nx - nqx) / nx
    d2 = np.ones(len(x))
    hard = np.flatnonzero(split & (base_slack <= tol))
    ranked = [i for i in np.argsort(base_slack, kind="stable") if split[i]][:dbm_evals]
    todo = sorted(set(hard.tolist()) | set(int(i) for i in ranked))
    dopts = {"resolution": 1024, "grid": 16}
    dopts.update(dbm_opts or {})
    if n == 2:
        todo = np.flatnonzero(split).tolist()
        d2[split] = _plane_dbm2(space, tuple(sorted(dopts.items())))
    else:
        for i in todo:
            plane = TwoDimSubspace(space, np.vstack([px[i] / np.linalg.norm(px[i]),
                                                     qx[i] / np.linalg.norm(qx[i])]))
            d2[i] = dbm_to_euclidean(plane, **dopts).raw ** 2
    slack = (d2 * np_up * nx - nqx) / nx
    audit.samples_checked = len(x)
    audit.dbm_evaluations = len(todo)
    j = int(np.argmin(slack))
    audit.per_vector_worst_slack = float(slack[j])
    audit.witness_vector = x[j]
    bad = np.flatnonzero(slack < -tol)
    for i in bad[:10]:
        audit.violations.append({
            "check": "per_vector", "x": x[i].tolist(), "lhs": float(nqx[i] / nx[i]),
            "rhs": float(d2[i] * np_up), "d2": float(d2[i]),
        })
    return audit


_DBM_CACHE: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _plane_dbm2(space, opts):
    per_space = _DBM_CACHE.setdefault(space, {})
    if opts not in per_space:
        per_space[opts] = dbm_to_euclidean(space, **dict(opts)).raw ** 2
    return per_space[opts]
