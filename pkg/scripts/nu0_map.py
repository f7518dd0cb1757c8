"""Threshold viscosity nu0 over a (phi_star, c) grid, with monotonicity checks."""

import argparse
import csv
from pathlib import Path

import numpy as np

from apflow.nonlinear_gate import nu0_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    phis = np.round(np.linspace(0.25, 4.0, 16), 6)
    cs = np.round(np.linspace(0.25, 2.0, 8), 6)
    grid = nu0_grid(phis, cs)
    print("nondecreasing in phi:", bool(np.all(np.diff(grid, axis=0) >= 0)))
    print("nondecreasing in c:  ", bool(np.all(np.diff(grid, axis=1) >= 0)))
    with open(out / "nu0_map.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["phi_star", "c", "nu0"])
        for i, p in enumerate(phis):
            for j, c in enumerate(cs):
                w.writerow([p, c, grid[i, j]])


if __name__ == "__main__":
    main()
