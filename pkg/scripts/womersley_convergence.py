"""Radial finite-volume profile against the Womersley solution, for a range of N.

Writes ``womersley_convergence.csv`` with columns N, rel_l2_error, ratio.
"""

import argparse
import csv
from pathlib import Path

from apflow.cross_section import build_disk
from apflow.modal import solve_W, womersley_reference


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--xi", type=float, default=10.0)
    ap.add_argument("--nu", type=float, default=1.0)
    ap.add_argument("--out", default="out")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows, prev = [], None
    for N in (128, 256, 512, 1024, 2048, 4096, 8192):
        sec, _ = build_disk(1.0, radial_modes=16, radial_points=N)
        W = solve_W(sec, None, args.xi, args.nu, "fd").W
        ref = womersley_reference(1.0, args.xi, args.nu, sec.points)
        err = sec.norm(W - ref) / sec.norm(ref)
        rows.append((N, err, prev / err if prev else float("nan")))
        prev = err
        print(f"N={N:5d}  error={err:.3e}  ratio={rows[-1][2]:.3f}")
    with open(out / "womersley_convergence.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["N", "rel_l2_error", "ratio"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
