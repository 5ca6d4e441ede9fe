#!/usr/bin/env python3
"""Compare every exit identity with Monte Carlo and print a z-score table."""

import argparse
import time

from poisson_exit.cli import resolve_model
from poisson_exit.exit_identities import ExitQuery, evaluate
from poisson_exit.simulator import estimate, mc_target

CASES = [
    ("up_prob_continuous", dict(x=1.0, a=3.0, q=0.05)),
    ("deficit_continuous", dict(x=1.0, a=3.0, theta=0.5, q=0.05)),
    ("poisson_deficit", dict(x=1.0, a=3.0, theta=0.5, lam=2.0, q=0.05)),
    ("poisson_overshoot", dict(x=1.0, a=3.0, theta=0.5, lam=2.0, q=0.05)),
    ("poisson_up_before_ruin", dict(x=1.0, a=3.0, theta=0.5, lam=2.0, q=0.05)),
    ("ruin_before_poisson_up", dict(x=1.0, a=3.0, theta=0.5, lam=2.0, q=0.05)),
    ("up_before_poisson_ruin", dict(x=1.0, a=3.0, lam=2.0, q=0.05)),
    ("poisson_deficit_before_poisson_up", dict(x=1.0, a=3.0, theta=0.5, lam=2.0, q=0.05)),
    ("poisson_up_before_poisson_ruin", dict(x=1.0, a=3.0, theta=0.5, lam=2.0, q=0.05)),
    ("reflected_up", dict(x=1.0, a=3.0, theta=0.5, vartheta=0.3, lam=2.0, q=0.05)),
    ("reflected_ruin", dict(x=1.0, a=3.0, theta=0.5, vartheta=0.3, lam=2.0, q=0.05)),
    ("regulator_passage", dict(x=2.0, a=2.0, y=1.0, lam=1.0)),
    ("discounted_dividends", dict(x=1.0, a=2.0, lam=1.0, q=0.05)),
    ("total_dividends_rate", dict(a=2.0, lam=1.0)),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", default="m1", help="model JSON file, or m1 / m2")
    ap.add_argument("--paths", type=int, default=10**6)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--workers", type=int)
    args = ap.parse_args()
    model = resolve_model(args.model)

    print(f"{'identity':36s} {'formula':>12s} {'mc_mean':>12s} {'std_err':>10s} {'z':>7s}  time")
    worst = 0.0
    for i, (ident, kw) in enumerate(CASES):
        q = ExitQuery(ident, **kw)
        t0 = time.perf_counter()
        target = mc_target(evaluate(model, q), q)
        e = estimate(model, q, args.paths, args.seed + i, workers=args.workers)
        z = e.z_score(target)
        worst = max(worst, abs(z))
        print(f"{ident:36s} {target:12.6f} {e.mean:12.6f} {e.std_error:10.2e} {z:+7.2f}  "
              f"{time.perf_counter() - t0:.1f}s")
    print(f"max |z| = {worst:.2f}")


if __name__ == "__main__":
    main()
