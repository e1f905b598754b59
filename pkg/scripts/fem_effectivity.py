"""Effectivity err / best and bound slacks for the 1-D advection-diffusion model.

    python scripts/fem_effectivity.py --elements 8 16 32 64 --epsilon 1 0.1 0.01
"""
import argparse
import sys

from bmlab.pglab import assemble_fem_1d, reports_to_csv, verify_bounds


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--elements", type=int, nargs="+", default=[4, 8, 16, 32, 64])
    ap.add_argument("--epsilon", type=float, nargs="+", default=[1.0, 0.1, 0.01])
    ap.add_argument("--beta", type=float, nargs="+", default=[0.0, 1.0])
    ap.add_argument("--coarsen", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    reports = []
    for el in args.elements:
        for eps in args.epsilon:
            for beta in args.beta:
                for variant in ("galerkin", "petrov_shifted"):
                    prob = assemble_fem_1d(el, eps, beta, variant, coarsen=args.coarsen)
                    pid = f"{variant}-N{el}-eps{eps:g}-beta{beta:g}"
                    reports.append(verify_bounds(prob, cbm=1.0, seed=args.seed, problem_id=pid))
    sys.stdout.write(reports_to_csv(reports))
    bad = [r.problem_id for r in reports if not r.passed]
    if bad:
        print(f"violations in: {', '.join(bad)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
