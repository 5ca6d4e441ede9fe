#!/usr/bin/env python3
"""CSV data for the Laplace exponent and its inverses R_q, Phi_q.

Writes two files: the curve psi(theta) on a theta grid, and the roots
Phi_q and R_q of psi(theta) = q on a q grid.  No plotting.
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from poisson_exit.cli import resolve_model
from poisson_exit.levy_model import psi, roots


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", default="m1", help="model JSON file, or m1 / m2")
    ap.add_argument("--outdir", default="exponent_curves")
    ap.add_argument("--theta-range", default="-0.9:3:400", help="start:stop:count")
    ap.add_argument("--q-max", type=float, default=2.0)
    ap.add_argument("--n-q", type=int, default=201)
    args = ap.parse_args()

    model = resolve_model(args.model)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)

    lo, hi, n = args.theta_range.split(":")
    thetas = np.linspace(float(lo), float(hi), int(n))
    with open(out / "psi.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta", "psi"])
        for th in thetas:
            try:
                v = psi(model, float(th))
            except (ValueError, ZeroDivisionError, ArithmeticError):
                continue  # pole of the jump part
            w.writerow([repr(float(th)), repr(float(v))])

    qs = np.linspace(0.0, args.q_max, args.n_q)
    if model.mean == 0.0:
        qs = qs[1:]
    with open(out / "roots.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["q", "Phi_q", "R_q"])
        for q in qs:
            rs = roots(model, float(q))
            r_q = -rs.roots[1] if rs.roots.size > 1 else float("nan")
            w.writerow([repr(float(q)), repr(float(rs.phi)), repr(float(r_q))])
    print(f"wrote {out / 'psi.csv'} and {out / 'roots.csv'}")


if __name__ == "__main__":
    main()
