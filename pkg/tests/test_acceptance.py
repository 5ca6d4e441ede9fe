"""Acceptance criteria 1-9, each at its stated tolerance and time budget.

Every test records a one-line PASS/FAIL verdict, printed immediately and again
in the pytest terminal summary.
"""

import contextlib
import io
import math
import os
import time

import numpy as np
import pytest
from scipy import stats

from poisson_exit.cli import main as cli_main
from poisson_exit.exit_identities import ExitQuery, evaluate
from poisson_exit.levy_model import psi, roots
from poisson_exit.scale_functions import ScaleContext
from poisson_exit.simulator import estimate, mc_target, overshoot_samples, total_dividend_samples
from poisson_exit.verification import (check_laplace_transform, default_limit_suite, run_suite)

from conftest import ACCEPTANCE_LINES, M1, M2, Q_GRID, cl_psi_prime, cl_roots, rel

WORKERS = os.cpu_count() or 1


def verdict(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_criterion_1_roots():
    t0 = time.perf_counter()
    worst = 0.0
    for m in (M1, M2):
        for q in Q_GRID:
            rs = roots(m, q)
            worst = max(worst, abs(psi(m, rs.phi) - q) / max(1.0, q))
    dt = time.perf_counter() - t0
    verdict(1, worst < 1e-10 and dt < 1.0, f"max |psi(Phi_q)-q|/max(1,q) = {worst:.2e}, {dt:.3f}s")


def test_criterion_2_transform():
    t0 = time.perf_counter()
    worst = 0.0
    for m in (M1, M2):
        for q in Q_GRID:
            c = ScaleContext(m, q)
            for d in (0.5, 2.0):
                worst = max(worst, check_laplace_transform(c, c.phi + d).rel_err)
    dt = time.perf_counter() - t0
    verdict(2, worst < 1e-8 and dt < 5.0, f"max rel err {worst:.2e}, {dt:.2f}s")


def test_criterion_3_proof_identities():
    t0 = time.perf_counter()
    reports = run_suite(M1) + run_suite(M2)
    dt = time.perf_counter() - t0
    n_fail = sum(not r.passed for r in reports)
    worst = max(r.rel_err for r in reports)
    verdict(3, n_fail == 0 and worst < 1e-8 and dt < 30.0,
            f"{len(reports) - n_fail}/{len(reports)} checks, max rel err {worst:.2e}, {dt:.2f}s")


def test_criterion_4_golden_equivalence():
    t0 = time.perf_counter()
    a = 3.0
    xs, thetas, lams = (0.0, 1.0, 2.5), (0.0, 0.5, 2.0), (0.5, 1.0, 4.0)
    c, nu, eta = 1.2, 1.0, 1.0
    worst = 0.0
    for q in (0.0, 0.05):
        ph, r = cl_roots(c, nu, eta, q)
        dphi = 1.0 / cl_psi_prime(c, nu, eta, ph)
        for lam in lams:
            phl, rl = cl_roots(c, nu, eta, q + lam)
            for x in xs:
                div = ((rl + ph) * math.exp(ph * x) - (rl - r) * math.exp(-r * x)) / (
                    (rl + ph) * ph * math.exp(ph * a) + r * (rl - r) * math.exp(-r * a))
                got = evaluate(M1, ExitQuery("discounted_dividends", x=x, a=a, lam=lam, q=q))
                worst = max(worst, rel(got, div))
                for th in thetas:
                    one = math.exp(-r * x) * (rl - r) / (rl + th)
                    two = (rl - r) / (rl + th) * (math.exp(ph * a + r * (a - x)) - math.exp(ph * x)) / (
                        math.exp(ph * a + r * a) - 1 + (phl - ph) / (lam * dphi))
                    g1 = evaluate(M1, ExitQuery("poisson_deficit", x=x, theta=th, lam=lam, q=q))
                    g2 = evaluate(M1, ExitQuery("poisson_deficit", x=x, a=a, theta=th, lam=lam, q=q))
                    worst = max(worst, rel(g1, one), rel(g2, two))
    dt = time.perf_counter() - t0
    verdict(4, worst < 1e-10 and dt < 1.0, f"max rel err {worst:.2e}, {dt:.3f}s")


MC_CASES = [
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


@pytest.mark.slow
def test_criterion_5_monte_carlo():
    t0 = time.perf_counter()
    worst, fails = 0.0, []
    for i, (ident, kw) in enumerate(MC_CASES):
        q = ExitQuery(ident, **kw)
        e = estimate(M1, q, 10**6, seed=2024 + i, workers=WORKERS)
        z = e.z_score(mc_target(evaluate(M1, q), q))
        print(f"  {ident:36s} z = {z:+.2f}")
        worst = max(worst, abs(z))
        if abs(z) > 4:
            fails.append(ident)
    dt = time.perf_counter() - t0
    verdict(5, not fails and dt < 600, f"14 identities x 1e6 paths, max |z| = {worst:.2f}, {dt:.1f}s"
            + (f", failing: {fails}" if fails else ""))


def test_criterion_6_overshoot_law():
    x, a, lam = 0.0, 1.0, 1.0
    parts = []
    ok = True
    for name, m in (("M1", M1), ("M2", M2)):
        s = overshoot_samples(m, x, a, lam, 10**5, seed=66, workers=WORKERS)
        rate = ScaleContext(m, 0.0).phi_lambda(lam)
        p = stats.kstest(s, "expon", args=(0, 1 / rate)).pvalue
        ok &= s.size >= 0.999 * 10**5 and p > 0.01
        parts.append(f"{name} n={s.size} p={p:.3f}")
    verdict(6, ok, "overshoot ~ Exp(Phi_lam): " + ", ".join(parts))


def test_criterion_7_dividend_law():
    a, lam = 2.0, 1.0
    s, trunc = total_dividend_samples(M1, a, lam, 10**5, seed=77, workers=WORKERS)
    rate = evaluate(M1, ExitQuery("total_dividends_rate", a=a, lam=lam))
    p = stats.kstest(s, "expon", args=(0, 1 / rate)).pvalue
    mean_target = evaluate(M1, ExitQuery("discounted_dividends", x=a, a=a, lam=lam))
    se = s.std(ddof=1) / math.sqrt(s.size)
    z = (s.mean() - mean_target) / se
    verdict(7, p > 0.01 and abs(z) <= 3 and trunc == 0.0,
            f"KS p={p:.3f}, mean {s.mean():.4f} vs {mean_target:.4f} (z={z:+.2f}), n={s.size}")


def test_criterion_8_limits():
    t0 = time.perf_counter()
    reports = default_limit_suite(M1) + default_limit_suite(M2)
    dt = time.perf_counter() - t0
    groups = sorted({r.check_id for r in reports})
    ok = all(r.passed for r in reports) and len(groups) == 5 and dt < 30
    verdict(8, ok, f"{len(groups)} limit relations on M1 and M2 monotone, {dt:.2f}s")


@pytest.mark.slow
def test_criterion_9_determinism():
    argv = ["verify", "--model", "m1", "--identity", "poisson_overshoot", "--x", "0", "--a", "2",
            "--theta", "1", "--lambda", "2", "--q", "0.05", "--paths", "1000000", "--seed", "7"]
    outs = []
    for w in (1, 4, 16):
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            code = cli_main(argv + ["--workers", str(w)])
        outs.append((code, buf.getvalue().encode()))
    same = outs[0][1] == outs[1][1] == outs[2][1]
    verdict(9, same and outs[0][0] == 0, f"verify stdout identical across 1/4/16 workers: {same}")
