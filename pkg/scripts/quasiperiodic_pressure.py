"""Pressure for a two-frequency flux and an almost-period scan of it.

f(t) = cos t + cos(sqrt(2) t) on the unit square.  The spectral pressure is
sampled densely and scanned for epsilon-almost-periods; the accepted shifts
and the largest gap between them are written out.
"""

import argparse
import csv
import math
from pathlib import Path

import numpy as np

from apflow.apseries import APSeries, SampledSignal, almost_period_scan, classify_module
from apflow.basic_flow import sample_solution, solve_spectral
from apflow.cross_section import build_rectangle


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, default=0.1, help="relative to max |pi|")
    ap.add_argument("--span", type=float, default=200.0)
    ap.add_argument("--dt", type=float, default=0.01)
    ap.add_argument("--out", default="out")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    f = APSeries.cosine(1.0) + APSeries.cosine(math.sqrt(2.0))
    print("frequency module:", classify_module([1.0, math.sqrt(2.0)]).classification)
    sec, basis = build_rectangle(1.0, 1.0, 41)
    sol = solve_spectral(f, sec, basis, 1.0)
    n = int(round(2 * args.span / args.dt)) + 1
    t = args.dt * np.arange(n)
    pi = sample_solution(sol, t)["pi"]
    g = SampledSignal(0.0, args.dt, pi)
    eps = args.eps * float(np.max(np.abs(pi)))
    scan = almost_period_scan(g, eps, args.span)
    print(f"{scan.shifts.size} accepted shifts, largest gap {scan.max_gap:.3f}")
    with open(out / "quasiperiodic_scan.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["shift", "defect"])
        w.writerows(zip(scan.shifts.tolist(), scan.defects.tolist()))


if __name__ == "__main__":
    main()
