"""Proximity curves (HOW, l1, Welsch) on a grid, for a few kernel sizes."""
import argparse
import csv
import math
from pathlib import Path

import numpy as np

from nnsr.prox import prox_how, prox_l1, prox_welsch


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lam", type=float, default=1.0)
    ap.add_argument("--sigmas", default=f"0.5,1.0,{math.sqrt(2)},2.0")
    ap.add_argument("--out", default="results/prox_curves.csv")
    a = ap.parse_args()

    sigmas = [float(s) for s in a.sigmas.split(",")]
    x = np.round(np.linspace(-3, 3, 601), 12)
    cols = {"x": x, "l1": prox_l1(x, a.lam)}
    for s in sigmas:
        cols[f"how_s{s:.3f}"] = prox_how(x, a.lam, s)
        cols[f"welsch_s{s:.3f}"] = prox_welsch(x, s)

    out = Path(a.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        w.writerows(zip(*cols.values()))
    # bias of each operator at x = 2
    i = int(np.argmin(np.abs(x - 2)))
    for k, v in cols.items():
        if k != "x":
            print(f"{k:>16}: x - P(x) at 2 = {2 - v[i]:.4f}")


if __name__ == "__main__":
    main()
