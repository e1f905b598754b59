"""Table of C_NJ, C_BM and planar Banach-Mazur distances over the lp catalog.

    python scripts/constants_table.py --seed 0 --dims 2 3 > constants.csv
"""
import argparse
import csv
import math
import sys

from bmlab.acceptance import P_VALUES
from bmlab.geoconst import cbm_estimate, cnj_estimate, dbm_to_euclidean
from bmlab.spaces import NormedSpace


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--starts", type=int, default=32)
    args = ap.parse_args(argv)

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["p", "dim", "cnj", "cnj_closed_form", "cbm", "dbm_plane"])
    for p in P_VALUES:
        closed = 2.0 ** abs(2.0 / p - 1.0) if p != math.inf else 2.0
        for d in args.dims:
            space = NormedSpace.lp(p, d)
            nj = cnj_estimate(space, seed=args.seed)
            bm = cbm_estimate(space, starts=args.starts, seed=args.seed)
            plane = dbm_to_euclidean(space).raw if d == 2 else ""
            w.writerow([p, d, f"{nj.raw:.10f}", f"{closed:.10f}", f"{bm.raw:.10f}",
                        plane if plane == "" else f"{plane:.10f}"])


if __name__ == "__main__":
    main()
