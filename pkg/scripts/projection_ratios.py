"""Largest observed ||I - P|| / ||P|| over random projections, against the bound C.

For Euclidean-type norms the ratio is 1; for l1 and l_inf planes it gets
close to 2; in between it stays below the planar lp constant.

    python scripts/projection_ratios.py --trials 200 --seed 0
"""
import argparse
import csv
import sys

import numpy as np

from bmlab.acceptance import P_VALUES, subseed, trusted_cbm
from bmlab.projlab import projection_norms, random_projection
from bmlab.spaces import NormedSpace


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["p", "dim", "cbm_used", "max_ratio", "median_ratio"])
    for p in P_VALUES:
        for d in args.dims:
            space = NormedSpace.lp(p, d)
            ratios = []
            for t in range(args.trials):
                a = projection_norms(random_projection(space, subseed(args.seed, d, t)), seed=t)
                ratios.append(a.ratio)
            w.writerow([p, d, f"{trusted_cbm(space):.6f}", f"{max(ratios):.6f}",
                        f"{float(np.median(ratios)):.6f}"])


if __name__ == "__main__":
    main()
