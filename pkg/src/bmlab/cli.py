"""Command-line front end.

    bmlab constants  --space SPACE.json --seed S
    bmlab dbm        --space PLANE.json
    bmlab proj-audit --dim D --norm lp:3 --trials N --seed S
    bmlab pg-verify  --problem PROBLEM.json --cbm C
    bmlab suite      --seed S

Exit status: 0 when every check passes, 1 on a mathematical violation,
2 on a usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass

from . import acceptance
from .errors import ArgumentError, ContractError, GenerationError, GeometryError, SingularityError
from .geoconst import cbm_estimate, cnj_estimate, dbm_to_euclidean
from .pglab import problem_from_spec, reports_to_csv, verify_bounds
from .projlab import audit_projection, random_projection
from .spaces import NormedSpace, parse_norm

SCHEMA = "1"
EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    space: str | None = None
    problem: str | None = None
    dim: int | None = None
    norm: str | None = None
    trials: int = 10
    starts: int | None = None
    samples: int = 512
    tol: float = 1e-6
    cbm: float | None = None
    out: str | None = None
    format: str | None = None
    criteria: str | None = None

    def validate(self):
        if self.tol <= 0:
            raise UsageError("--tol must be positive")
        if self.starts is not None and self.starts < 1:
            raise UsageError("--starts must be >= 1")
        if self.samples < 1 or self.trials < 1:
            raise UsageError("--samples and --trials must be >= 1")
        if self.cbm is not None and not 1.0 <= self.cbm <= 2.0:
            raise UsageError("--cbm must lie in [1, 2]")


# ---- helpers -----------------------------------------------------------

def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def _load_space(cfg) -> NormedSpace:
    if cfg.space is not None:
        return NormedSpace.from_dict(_load_json(cfg.space))
    if cfg.norm is not None and cfg.dim is not None:
        return parse_norm(cfg.norm, cfg.dim)
    raise UsageError("give --space FILE or both --dim and --norm")


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings (NaN becomes null)."""
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalars
        return _clean(obj.item())
    return obj


def _rows_csv(rows):
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: "" if v is None else v for k, v in _clean(r).items()})
    return buf.getvalue()


# ---- commands ------------------------------------------------------------

def cmd_constants(cfg):
    space = _load_space(cfg)
    starts = cfg.starts
    nj = cnj_estimate(space, **({"starts": starts} if starts else {}), seed=cfg.seed)
    rep = {"space": space.to_dict(), "cnj": nj.to_dict(), "violations": []}
    row = {"dim": space.dim, "kind": space.kind, "cnj": nj.value}
    if space.dim >= 2:
        bm = cbm_estimate(space, **({"starts": starts} if starts else {}), seed=cfg.seed)
        rep["cbm"] = bm.to_dict()
        row["cbm"] = bm.value
        checks = [("cnj_range", 1 - 1e-9 <= nj.raw <= 2 + cfg.tol),
                  ("cbm_range", 1 - 1e-9 <= bm.raw <= 2 + cfg.tol),
                  ("cnj_le_cbm", nj.raw <= bm.raw + cfg.tol)]
        for name, ok in checks:
            if not ok:
                rep["violations"].append({"check": name, "cnj": nj.raw, "cbm": bm.raw})
    if space.dim == 2:
        d = dbm_to_euclidean(space)
        rep["dbm"] = d.to_dict()
        row["dbm"] = d.value
        if d.raw > math.sqrt(2.0) + cfg.tol:
            rep["violations"].append({"check": "john", "dbm": d.raw})
    text = [f"space {space!r}", f"C_NJ >= {nj.value:.10g}"]
    if "cbm" in row:
        text.append(f"C_BM ~ {row['cbm']:.10g}")
    if "dbm" in row:
        text.append(f"d(V, l2^2) <= {row['dbm']:.10g}")
    return rep, [row], text


def cmd_dbm(cfg):
    space = _load_space(cfg)
    if space.dim != 2:
        raise UsageError("dbm needs a 2-dimensional space")
    d = dbm_to_euclidean(space)
    rep = {"space": space.to_dict(), "dbm": d.to_dict(), "violations": []}
    if d.raw > math.sqrt(2.0) + cfg.tol:
        rep["violations"].append({"check": "john", "dbm": d.raw})
    return rep, [{"dbm": d.value, "raw": d.raw, "method": d.method}], [f"d(V, l2^2) = {d.value:.12g} ({d.method})"]


def cmd_proj_audit(cfg):
    space = _load_space(cfg)
    cbm = cfg.cbm if cfg.cbm is not None else acceptance.trusted_cbm(space)
    rows, violations = [], []
    for t in range(cfg.trials):
        s = acceptance.subseed(cfg.seed, t)
        P = random_projection(space, s)
        a = audit_projection(P, samples=cfg.samples, seed=s, cbm=cbm, tol=cfg.tol)
        gap = abs(a.norm_P.lower - a.norm_I_minus_P.lower)
        row = {"trial": t, "rank": P.rank, "norm_P": a.norm_P.bound, "norm_I_minus_P": a.norm_I_minus_P.lower,
               "ratio": a.ratio, "bound_C": a.bound_C, "operator_slack": a.operator_slack,
               "per_vector_worst_slack": a.per_vector_worst_slack, "passed": a.passed}
        if space.gram is not None:
            row["hilbert_gap"] = gap
            if gap > 1e-8:
                a.violations.append({"check": "hilbert_identity", "gap": gap})
        rows.append(row)
        violations += [{"trial": t, **v} for v in a.violations]
    rep = {"space": space.to_dict(), "cbm": cbm, "trials": cfg.trials, "samples": cfg.samples,
           "audits": rows, "violations": violations}
    worst = max(r["ratio"] for r in rows)
    text = [f"{cfg.trials} audits on {space!r} with cbm={cbm:.6g}",
            f"max ||I-P||/||P|| = {worst:.6g}, violations = {len(violations)}"]
    return rep, rows, text


def cmd_pg_verify(cfg):
    if cfg.problem is None:
        raise UsageError("pg-verify needs --problem FILE")
    spec = _load_json(cfg.problem)
    specs = spec["problems"] if isinstance(spec, dict) and "problems" in spec else [spec]
    reports = []
    for i, sp in enumerate(specs):
        prob = problem_from_spec(sp)
        cbm = cfg.cbm if cfg.cbm is not None else acceptance.trusted_cbm(prob.X_space)
        pid = sp.get("id", str(i)) if isinstance(sp, dict) else str(i)
        reports.append(verify_bounds(prob, cbm, tol=cfg.tol, seed=acceptance.subseed(cfg.seed, i),
                                     problem_id=pid))
    rep = {"problems": [r.to_dict() for r in reports],
           "violations": [{"problem": r.problem_id, **v} for r in reports for v in r.violations]}
    text = [f"{r.problem_id}: err={r.err:.6g} best={r.best:.6g} effectivity={r.effectivity:.6g} "
            f"C={r.C_used:.6g} {'ok' if r.passed else 'VIOLATION'}" for r in reports]
    return rep, reports, text


def cmd_suite(cfg, progress=None):
    keys = None
    if cfg.criteria:
        try:
            keys = [int(k) for k in cfg.criteria.split(",")]
        except ValueError:
            raise UsageError("--criteria takes a comma-separated list of numbers") from None
        if any(k not in acceptance.CRITERIA for k in keys):
            raise UsageError(f"criteria must be among {sorted(acceptance.CRITERIA)}")

    if progress is None:
        def progress(r):
            print(r.line(), file=sys.stderr, flush=True)

    rep = acceptance.run_suite(cfg.seed, keys, progress)
    rep["violations"] = [v for c in rep["criteria"] for v in c["violations"]]
    rows = [{"criterion": c["number"], "name": c["name"], "checked": c["checked"],
             "violations": c["violation_count"], "passed": c["passed"]} for c in rep["criteria"]]
    text = [f"criterion {r['criterion']} [{'PASS' if r['passed'] else 'FAIL'}] {r['name']}: "
            f"{r['checked']} checks, {r['violations']} violations" for r in rows]
    return rep, rows, text


COMMANDS = {"constants": cmd_constants, "dbm": cmd_dbm, "proj-audit": cmd_proj_audit,
            "pg-verify": cmd_pg_verify, "suite": cmd_suite}
DEFAULT_FORMAT = {"pg-verify": "csv"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bmlab", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--format", choices=("json", "csv", "text"))
        if name in ("constants", "dbm", "proj-audit"):
            p.add_argument("--space", help="space specification (JSON)")
        if name == "proj-audit":
            p.add_argument("--dim", type=int)
            p.add_argument("--norm", help="lp:P, wlp:P:w1,..., quadratic:identity or quadratic:diag:d1,...")
            p.add_argument("--trials", type=int, default=10)
            p.add_argument("--samples", type=int, default=512)
        if name in ("proj-audit", "pg-verify"):
            p.add_argument("--cbm", type=float, help="trusted C_BM value or upper bound")
        if name == "constants":
            p.add_argument("--starts", type=int)
        if name == "pg-verify":
            p.add_argument("--problem", help="problem specification (JSON)")
        if name == "suite":
            p.add_argument("--criteria", help="comma-separated subset, e.g. 1,4")
    return parser


def render(cfg, rep, rows, text) -> str:
    fmt = cfg.format or DEFAULT_FORMAT.get(cfg.command, "json")
    if fmt == "json":
        body = {"schema": SCHEMA, "command": cfg.command, "seed": cfg.seed, **rep}
        body["passed"] = not rep["violations"]
        return json.dumps(_clean(body), indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        if cfg.command == "pg-verify":
            return reports_to_csv(rows)
        return _rows_csv(rows)
    return "\n".join(text + [f"status: {'pass' if not rep['violations'] else 'VIOLATION'}"]) + "\n"


def run(cfg: RunConfig) -> int:
    cfg.validate()
    rep, rows, text = COMMANDS[cfg.command](cfg)
    out = render(cfg, rep, rows, text)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return EXIT_VIOLATION if rep["violations"] else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(**{k.replace("-", "_"): v for k, v in vars(args).items() if v is not None})
    try:
        return run(cfg)
    except UsageError as exc:
        print(f"bmlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArgumentError, GeometryError, ContractError, SingularityError, GenerationError) as exc:
        print(f"bmlab: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"bmlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
