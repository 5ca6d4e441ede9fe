"""Quadrature checks of the convolution identities behind the exit formulas.

Each check evaluates an integral of closed-form scale functions with adaptive
Gauss-Kronrod quadrature and compares it with the closed-form right-hand
side.  No simulation is involved, so a failure points at a formula.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import DomainError, UnknownIdentity
from .exit_identities import ExitQuery, evaluate
from .levy_model import LevyModel, psi_dd
from .scale_functions import ScaleContext

TOLERANCE = 1e-8
QUAD_EPSREL = 1e-10
QUAD_EPSABS = 1e-13
ABS_SWITCH = 1e-12
LIMIT_FLOOR = 1e-12

GRID_A = (0.5, 1.0, 2.0, 5.0)
GRID_LAMBDA = (0.5, 2.0)
GRID_Q = (0.0, 0.05)


@dataclass(frozen=True)
class CheckReport:
    check_id: str
    lhs: float
    rhs: float
    abs_err: float
    rel_err: float
    passed: bool
    tolerance: float
    quad_error: float = 0.0
    params: dict = field(default_factory=dict)

    @property
    def pass_(self) -> bool:
        return self.passed


def _report(check_id, lhs, rhs, tol, quad_error=0.0, **params) -> CheckReport:
    abs_err = abs(lhs - rhs)
    rel_err = abs_err / abs(rhs) if abs(rhs) >= ABS_SWITCH else abs_err
    return CheckReport(check_id, float(lhs), float(rhs), abs_err, rel_err, bool(rel_err < tol), tol,
                       float(quad_error), params)


def _quad(f, lo, hi):
    # the integrator's own error estimate is reported in the CheckReport, so its
    # roundoff warnings are not repeated on stderr
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, err = quad(f, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=400)
    return val, err


def check_laplace_transform(ctx: ScaleContext, theta: float, tol: float = TOLERANCE) -> CheckReport:
    """int_0^inf e^{-theta x} W_q(x) dx = 1 / psi_q(theta) for theta > Phi_q."""
    if not theta > ctx.phi:
        raise DomainError("need theta > Phi_q")
    # split at a few decay lengths so the infinite tail is easy for the integrator
    cut = 40.0 / (theta - ctx.phi)
    rs = ctx.root_system
    f = lambda x: float(np.sum(rs.residues * np.exp((rs.roots - theta) * x)))
    v1, e1 = _quad(f, 0.0, cut)
    v2, e2 = _quad(f, cut, math.inf)
    return _report("laplace_transform", v1 + v2, 1.0 / ctx.psi(theta), tol, e1 + e2,
                   q=ctx.q, theta=theta)


def check_scale_convolution(ctx: ScaleContext, a: float, lam: float, tol: float = TOLERANCE) -> CheckReport:
    """lam int_0^a W_{q+lam}(a - x) W_q(x) dx = W_{q+lam}(a) - W_q(a)."""
    if not a > 0:
        raise DomainError("need a > 0")
    k = ctx.killed(lam)
    val, err = _quad(lambda x: k.W(a - x) * ctx.W(x), 0.0, a)
    return _report("scale_convolution", lam * val, k.W(a) - ctx.W(a), tol, lam * err,
                   q=ctx.q, a=a, lam=lam)


def check_Z_convolution(ctx: ScaleContext, a: float, theta: float, lam: float,
                        tol: float = TOLERANCE) -> CheckReport:
    """lam int_0^a W_{q+lam}(a - x) Z_q(x, theta) dx = Z_{q+lam}(a, theta) - Z_q(a, theta)."""
    if not a > 0 or theta < 0:
        raise DomainError("need a > 0 and theta >= 0")
    k = ctx.killed(lam)
    val, err = _quad(lambda x: k.W(a - x) * ctx.Z(x, theta), 0.0, a)
    return _report("Z_convolution", lam * val, k.Z(a, theta) - ctx.Z(a, theta), tol, lam * err,
                   q=ctx.q, a=a, theta=theta, lam=lam)


def check_tildeZ_alt(ctx: ScaleContext, a: float, theta: float, lam: float,
                     tol: float = TOLERANCE) -> CheckReport:
    """lam int_0^a e^{-Phi_lam x} Z(x, theta) dx = psi[theta, Phi_lam] - e^{-Phi_lam a} Zt(a, Phi_lam, theta).

    psi[theta, Phi_lam] is the divided difference (psi_q(theta) - lam) / (theta - Phi_lam),
    which is also the confluent value at theta = Phi_lam.
    """
    if not a > 0 or theta < 0:
        raise DomainError("need a > 0 and theta >= 0")
    phil = ctx.phi_lambda(lam)
    val, err = _quad(lambda x: math.exp(-phil * x) * ctx.Z(x, theta), 0.0, a)
    rhs = psi_dd(ctx.model, theta, phil) - math.exp(-phil * a) * ctx.tilde_Z(a, phil, theta)
    return _report("tildeZ_alt", lam * val, rhs, tol, lam * err, q=ctx.q, a=a, theta=theta, lam=lam)


# -- limit relations ----------------------------------------------------------

# identity -> (swept parameter, default grid, limiting query builder)
LIMITS = {
    # Poisson-detected ruin with continuous up-crossing -> continuous two-sided exit
    "up_before_poisson_ruin": ("lam", (1e2, 1e4, 1e6),
                               lambda p: ExitQuery("up_prob_continuous", x=p.x, a=p.a, q=p.q)),
    "poisson_deficit": ("lam", (1e2, 1e4, 1e6),
                        lambda p: ExitQuery("deficit_continuous", x=p.x, a=p.a, theta=p.theta, q=p.q)),
    # rare observation: the upper barrier is never detected
    "ruin_before_poisson_up": ("lam", (1e-2, 1e-4, 1e-6),
                               lambda p: ExitQuery("deficit_continuous", x=p.x, theta=p.theta, q=p.q)),
    # barrier far away: the regulator never acts before detected ruin
    "reflected_ruin": ("a", (5.0, 10.0, 20.0, 40.0),
                       lambda p: ExitQuery("poisson_deficit", x=p.x, theta=p.theta, q=p.q, lam=p.lam)),
    # start far above the reflecting floor at fixed distance to a
    "reflected_up": ("x", (2.0, 5.0, 10.0, 20.0),
                     lambda p: ExitQuery("poisson_overshoot", x=0.0, a=p.a - p.x, theta=p.theta,
                                         q=p.q, lam=p.lam)),
}


def check_limits(ctx: ScaleContext, identity_id: str, params: ExitQuery | dict,
                 grid=None, floor: float = LIMIT_FLOOR) -> list[CheckReport]:
    """Gap between an identity and its limiting counterpart along a parameter sweep.

    Sweeps ``lam`` for the observation limits, ``a`` for the far-barrier limit
    and ``x`` (keeping ``a - x`` fixed) for the shift limit.  Every report
    passes when the gaps decrease strictly along the grid; gaps below ``floor``
    count as converged.
    """
    if identity_id not in LIMITS:
        raise UnknownIdentity(f"no limit relation registered for {identity_id!r}")
    name, default_grid, target = LIMITS[identity_id]
    if isinstance(params, dict):
        params = ExitQuery(identity_id, **params)
    else:
        params = params.with_(identity=identity_id)
    params = params.with_(q=ctx.q)
    grid = tuple(default_grid if grid is None else grid)
    rows = []
    for g in grid:
        if name == "x":
            p = params.with_(x=g, a=g + (params.a - params.x))
        else:
            p = params.with_(**{name: g})
        lhs = evaluate(ctx, p)
        rhs = evaluate(ctx, target(p))
        rows.append((g, lhs, rhs, abs(lhs - rhs)))
    gaps = [r[3] for r in rows]
    ok = all(g2 < g1 or g2 < floor for g1, g2 in zip(gaps, gaps[1:]))
    return [CheckReport(f"limit:{identity_id}", lhs, rhs, gap, gap / abs(rhs) if abs(rhs) >= ABS_SWITCH else gap,
                        ok, math.nan, 0.0, {**_plain(params), name: g})
            for g, lhs, rhs, gap in rows]


def _plain(q: ExitQuery) -> dict:
    d = q.as_dict()
    d.pop("identity")
    return d


# -- suite --------------------------------------------------------------------


def theta_grid(ctx: ScaleContext) -> tuple[float, ...]:
    return (0.0, 0.5, ctx.phi, 2.0)


def run_suite(model: LevyModel, a_grid=GRID_A, lam_grid=GRID_LAMBDA, q_grid=GRID_Q,
              tol: float = TOLERANCE) -> list[CheckReport]:
    """All convolution checks over the parameter grid."""
    out = []
    for q in q_grid:
        ctx = ScaleContext(model, q)
        for lam in lam_grid:
            for a in a_grid:
                out.append(check_scale_convolution(ctx, a, lam, tol))
                for th in theta_grid(ctx):
                    out.append(check_Z_convolution(ctx, a, th, lam, tol))
                    out.append(check_tildeZ_alt(ctx, a, th, lam, tol))
    return out


def default_limit_suite(model: LevyModel) -> list[CheckReport]:
    """The standard limit relations at one representative parameter point each."""
    ctx0 = ScaleContext(model, 0.0) if model.mean != 0 else ScaleContext(model, 0.05)
    ctx1 = ScaleContext(model, 0.05)
    out = []
    out += check_limits(ctx0, "up_before_poisson_ruin", {"x": 1.0, "a": 2.0})
    out += check_limits(ctx0, "poisson_deficit", {"x": 1.0, "a": 2.0, "theta": 0.5})
    out += check_limits(ctx0, "ruin_before_poisson_up", {"x": 1.0, "a": 2.0, "theta": 0.5})
    out += check_limits(ctx1, "reflected_ruin", {"x": 1.0, "a": 5.0, "theta": 0.5, "vartheta": 0.2, "lam": 1.0})
    out += check_limits(ctx1, "reflected_up", {"x": 2.0, "a": 3.0, "theta": 0.5, "vartheta": 0.2, "lam": 1.0})
    return out


CSV_COLUMNS = ("check_id", "params", "lhs", "rhs", "rel_err", "pass")


def _fmt_params(p: dict) -> str:
    return ";".join(f"{k}={repr(float(v)) if isinstance(v, (int, float)) and not isinstance(v, bool) else v}"
                    for k, v in p.items())


def reports_to_csv(reports, fh=None) -> str | None:
    """Write reports as CSV (header row, '.' decimals); returns the text when ``fh`` is None."""
    buf = io.StringIO() if fh is None else fh
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow([r.check_id, _fmt_params(r.params), repr(r.lhs), repr(r.rhs), repr(r.rel_err),
                    "PASS" if r.passed else "FAIL"])
    return buf.getvalue() if fh is None else None


def report_dict(r: CheckReport) -> dict:
    return asdict(r)
