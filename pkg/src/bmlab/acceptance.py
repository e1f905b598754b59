"""The acceptance battery, shared by the ``suite`` command and the test suite.

Each ``criterion_k(seed)`` returns a :class:`CriterionResult`; reports hold
no timings so that identical seeds give byte-identical output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geoconst import cbm_estimate, cnj_estimate, dbm_to_euclidean, nj_ratio
from .pglab import assemble_fem_1d, random_problem, verify_bounds
from .projlab import audit_projection, projection_norms, random_projection
from .spaces import NormedSpace, TwoDimSubspace

P_VALUES = (1.0, 1.5, 2.0, 3.0, 4.0, math.inf)
DIMS = (2, 3, 4)
SQRT2 = math.sqrt(2.0)
MAX_LISTED = 10


def subseed(seed: int, *keys: int) -> int:
    """Independent integer seed derived from ``seed`` and a key path."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


@dataclass
class CriterionResult:
    number: int
    name: str
    checked: int = 0
    violations: list = field(default_factory=list)
    details: dict = field(default_factory=dict)
    violation_count: int = 0

    @property
    def passed(self) -> bool:
        return self.violation_count == 0 and self.checked > 0

    def fail(self, record):
        self.violation_count += 1
        if len(self.violations) < MAX_LISTED:
            self.violations.append(record)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number} [{status}] {self.name}: {self.checked} checks, {self.violation_count} violations"

    def to_dict(self):
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "checked": self.checked, "violation_count": self.violation_count,
                "violations": self.violations, "details": self.details}


# ---- catalog -----------------------------------------------------------

def lp_catalog():
    return [(f"l{_pname(p)}^{d}", NormedSpace.lp(p, d)) for p in P_VALUES for d in DIMS]


def _pname(p):
    return "inf" if p == math.inf else f"{p:g}"


def random_polytope_plane(seed: int) -> NormedSpace:
    """Symmetric polygon with 2 to 6 random vertex pairs."""
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 7))
    ang = np.sort(rng.uniform(0.0, np.pi, k))
    rad = rng.uniform(0.5, 1.5, k)
    v = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
    return NormedSpace.polytope(np.vstack([v, -v]))


def polytope_catalog(seed: int, count: int = 20):
    return [(f"polygon{i}", random_polytope_plane(subseed(seed, 99, i))) for i in range(count)]


def random_gram(dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((dim, dim))
    return b @ b.T + 0.1 * np.eye(dim)


def quadratic_catalog(seed: int, dims=(2, 3, 4)):
    return [(f"quad^{d}", NormedSpace.quadratic(random_gram(d, subseed(seed, 98, d)))) for d in dims]


def trusted_cbm(space: NormedSpace) -> float:
    """Known C_BM value (Euclidean, 2-D lp) or the universal bound 2."""
    if space.gram is not None:
        return 1.0
    if space.kind == "lp" and space.dim == 2:
        p = space.p
        return 2.0 ** abs(1.0 - 2.0 / p) if p != math.inf else 2.0
    return 2.0


def _r(x):
    return float(f"{x:.12g}")


# ---- criteria ------------------------------------------------------------

def criterion_1(seed: int) -> CriterionResult:
    res = CriterionResult(1, "Euclidean-type spaces have C_NJ = C_BM = 1")
    worst = 0.0
    for dim in (2, 3, 4, 5):
        for inst in range(10):
            g = random_gram(dim, subseed(seed, 1, dim, inst))
            space = NormedSpace.quadratic(g)
            s = subseed(seed, 1, dim, inst, 1)
            for label, est in (("cnj", cnj_estimate(space, seed=s)), ("cbm", cbm_estimate(space, seed=s))):
                res.checked += 1
                dev = abs(est.raw - 1.0)
                worst = max(worst, dev)
                if dev > 1e-6:
                    res.fail({"dim": dim, "instance": inst, "constant": label, "value": est.raw})
    res.details = {"max_deviation": worst}
    return res


def criterion_2(seed: int) -> CriterionResult:
    res = CriterionResult(2, "1 <= C_NJ <= C_BM <= 2 and planes within sqrt 2 of Euclidean")
    rows = {}
    for name, space in lp_catalog() + polytope_catalog(seed):
        s = subseed(seed, 2, len(rows))
        nj = cnj_estimate(space, seed=s).raw
        bm = cbm_estimate(space, seed=s).raw
        row = {"cnj": _r(nj), "cbm": _r(bm)}
        checks = [("cnj_ge_1", nj >= 1 - 1e-9), ("cnj_le_2", nj <= 2 + 1e-6),
                  ("cbm_ge_1", bm >= 1 - 1e-9), ("cbm_le_2", bm <= 2 + 1e-6),
                  ("cnj_le_cbm", nj <= bm + 1e-6)]
        if space.dim == 2:
            d = dbm_to_euclidean(space).raw
            row["dbm"] = _r(d)
            checks.append(("john", d <= SQRT2 + 1e-6))
        for label, ok in checks:
            res.checked += 1
            if not ok:
                res.fail({"space": name, "check": label, **row})
        rows[name] = row
    res.details = {"estimates": rows}
    return res


def criterion_3(seed: int, pairs: int = 10_000) -> CriterionResult:
    res = CriterionResult(3, "nj_ratio(x, y) <= d(span{x, y})^2 per pair")
    spaces = lp_catalog() + polytope_catalog(seed)
    per = -(-pairs // len(spaces))
    worst = math.inf
    refined = 0
    for k, (name, space) in enumerate(spaces):
        rng = np.random.default_rng(subseed(seed, 3, k))
        plane_d2 = None
        if space.dim == 2:
            plane_d2 = dbm_to_euclidean(space).raw ** 2
        for _ in range(per):
            x, y = rng.standard_normal((2, space.dim))
            nj = nj_ratio(space, x, y)
            if plane_d2 is not None:
                d2 = plane_d2
            else:
                plane = TwoDimSubspace(space, np.vstack([x, y]))
                d2 = dbm_to_euclidean(plane, resolution=256, grid=16).raw ** 2
                if d2 - nj < 1e-3:
                    refined += 1
                    d2 = dbm_to_euclidean(plane).raw ** 2
            res.checked += 1
            worst = min(worst, d2 - nj)
            if nj > d2 + 1e-6:
                res.fail({"space": name, "x": x.tolist(), "y": y.tolist(), "nj": nj, "d2": d2})
    res.details = {"pairs": res.checked, "min_slack": _r(worst), "refined": refined}
    return res


def nj_grid_oracle(p: float, angles: int = 720, scales: int = 11) -> float:
    """Brute-force C_NJ of 2-D lp: unit pairs on an angle grid, y scaled by s in [0, 1]."""
    def norm(v):
        a = np.abs(v)
        return a.max(axis=-1) if p == math.inf else (a ** p).sum(axis=-1) ** (1.0 / p)

    t = 2 * np.pi * np.arange(angles) / angles
    u = np.stack([np.cos(t), np.sin(t)], axis=1)
    u = u / norm(u)[:, None]
    best = 1.0
    for s in np.linspace(0.0, 1.0, scales)[1:]:
        x = u[:, None, :]
        y = s * u[None, :, :]
        r = (norm(x + y) ** 2 + norm(x - y) ** 2) / (2.0 * (1.0 + s * s))
        best = max(best, float(r.max()))
    return best


def criterion_4(seed: int) -> CriterionResult:
    res = CriterionResult(4, "plane distances of l1, l_inf and C_NJ of 2-D lp")
    d = {}
    for p in (1.0, math.inf):
        val = dbm_to_euclidean(NormedSpace.lp(p, 2)).raw
        d[f"dbm_l{_pname(p)}"] = _r(val)
        res.checked += 1
        if abs(val - SQRT2) > 1e-3:
            res.fail({"p": _pname(p), "dbm": val, "expected": SQRT2})
    for p in P_VALUES:
        est = cnj_estimate(NormedSpace.lp(p, 2), seed=subseed(seed, 4, len(d))).raw
        oracle = nj_grid_oracle(p)
        d[f"cnj_l{_pname(p)}"] = {"estimate": _r(est), "oracle": _r(oracle)}
        res.checked += 1
        if abs(est - oracle) > 1e-3:
            res.fail({"p": _pname(p), "cnj": est, "oracle": oracle})
    res.details = d
    return res


AUDIT_OPTS = {"samples": 64, "dbm_evals": 2, "dbm_opts": {"resolution": 256, "grid": 16}}


def criterion_5(seed: int, trials: int = 200) -> CriterionResult:
    res = CriterionResult(5, "||I - P|| <= C ||P|| for random projections")
    spaces = lp_catalog() + polytope_catalog(seed) + quadratic_catalog(seed)
    worst = {}
    for k, (name, space) in enumerate(spaces):
        cbm = trusted_cbm(space)
        top = 0.0
        for t in range(trials):
            s = subseed(seed, 5, k, t)
            P = random_projection(space, s)
            audit = audit_projection(P, seed=s, cbm=cbm, tol=1e-6, **AUDIT_OPTS)
            res.checked += 1
            top = max(top, audit.ratio / cbm)
            if not audit.passed:
                res.fail({"space": name, "trial": t, "violations": audit.violations[:2]})
        worst[name] = {"cbm": _r(cbm), "max_ratio_over_cbm": _r(top)}
    res.details = {"spaces": worst}
    return res


def criterion_6(seed: int, trials: int = 200) -> CriterionResult:
    res = CriterionResult(6, "||I - P|| = ||P|| on Euclidean-type spaces")
    worst = 0.0
    for t in range(trials):
        dim = 2 + t % 5
        space = NormedSpace.quadratic(random_gram(dim, subseed(seed, 6, t)))
        P = random_projection(space, subseed(seed, 6, t, 1))
        a = projection_norms(P)
        gap = abs(a.norm_P.lower - a.norm_I_minus_P.lower)
        worst = max(worst, gap)
        res.checked += 1
        if gap > 1e-8:
            res.fail({"trial": t, "norm_P": a.norm_P.lower, "norm_I_minus_P": a.norm_I_minus_P.lower})
    res.details = {"max_gap": worst}
    return res


def pg_catalog(seed: int, random_count: int = 50):
    """(id, problem, cbm) for the FEM grid and seeded random problems."""
    out = []
    for el in (4, 8, 16, 32):
        for eps in (1.0, 0.1):
            for beta in (0.0, 1.0):
                for variant in ("galerkin", "petrov_shifted"):
                    pid = f"fem-{el}-{eps:g}-{beta:g}-{variant}"
                    out.append((pid, assemble_fem_1d(el, eps, beta, variant), 1.0))
    norms = P_VALUES + ("quadratic",)
    for i in range(random_count):
        rng = np.random.default_rng(subseed(seed, 7, i))
        n = int(rng.integers(3, 9))
        coarse = int(rng.integers(1, n))
        kind = norms[i % len(norms)]
        if kind == "quadratic":
            x = NormedSpace.quadratic(random_gram(n, subseed(seed, 7, i, 1)))
            y = NormedSpace.quadratic(random_gram(n, subseed(seed, 7, i, 2)))
        else:
            x = y = NormedSpace.lp(kind, n)
        prob = random_problem(n, subseed(seed, 7, i, 3), x, y, coarse)
        out.append((f"random-{i}-{kind if kind == 'quadratic' else 'l' + _pname(kind)}", prob,
                    trusted_cbm(x)))
    return out


def criterion_7(seed: int) -> CriterionResult:
    res = CriterionResult(7, "Petrov-Galerkin error-bound chain")
    rows = []
    for k, (pid, prob, cbm) in enumerate(pg_catalog(seed)):
        rep = verify_bounds(prob, cbm, tol=1e-6, seed=subseed(seed, 7, 1000 + k), problem_id=pid)
        res.checked += 1
        if not rep.passed:
            res.fail({"problem": pid, "violations": rep.violations})
        rows.append({"problem": pid, "effectivity": _r(rep.effectivity),
                     "projection_ratio": _r(rep.projection_ratio)})
    res.details = {"problems": rows}
    return res


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4,
            5: criterion_5, 6: criterion_6, 7: criterion_7}


def run_suite(seed: int, criteria=None, progress=None) -> dict:
    """Run the selected criteria; ``progress(result)`` is called after each one."""
    results = []
    for k in criteria or sorted(CRITERIA):
        r = CRITERIA[k](seed)
        results.append(r)
        if progress is not None:
            progress(r)
    return {"seed": seed, "criteria": [r.to_dict() for r in results],
            "passed": all(r.passed for r in results)}
