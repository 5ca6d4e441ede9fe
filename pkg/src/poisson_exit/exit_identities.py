"""Exit identities under continuous and Poissonian observation.

Every function takes a :class:`ScaleContext` (which fixes the killing rate q)
plus the identity's arguments, and returns a real.  Notation inside: psi is
psi_q, Phi = Phi_q, and ``phil`` = Phi_{q+lam}.  ``a = inf`` selects the
one-barrier formula and ``lam = inf`` the continuous-observation counterpart;
neither is ever approximated by a large finite number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import DomainError, NumericFailure, UnknownIdentity
from .levy_model import LevyModel, psi_dd
from .scale_functions import DELTA_LIMIT, ScaleContext, _expsum

INF = math.inf
LIMIT_OFFSET = 1e-5


@dataclass(frozen=True)
class ExitQuery:
    identity: str
    x: float = 0.0
    a: float = INF
    theta: float = 0.0
    vartheta: float = 0.0
    y: float = 0.0
    q: float = 0.0
    lam: float = INF
    two_sided: bool = True

    def __post_init__(self):
        if self.identity not in IDENTITIES:
            raise UnknownIdentity(self.identity)
        if math.isfinite(self.a) and self.x > self.a:
            raise DomainError("need x <= a")
        if self.theta < 0 or self.vartheta < 0 or self.y < 0 or self.q < 0:
            raise DomainError("theta, vartheta, y and q must be non-negative")
        if not self.lam > 0:
            raise DomainError("observation rate lam must be positive")

    def with_(self, **kw) -> "ExitQuery":
        return replace(self, **kw)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def limit_sense(f, t: float, singular) -> float:
    """Evaluate ``f(t)``, or the two-sided average f(t -+ eps) when t sits on a removable singularity."""
    for s in singular:
        if abs(t - s) < DELTA_LIMIT * max(1.0, abs(s)):
            eps = LIMIT_OFFSET * max(1.0, abs(t))
            return 0.5 * (f(t - eps) + f(t + eps))
    return f(t)


def _dd(ctx, s, t):
    return psi_dd(ctx.model, s, t)


def _w_ratio(ctx: ScaleContext, x: float, a: float) -> float:
    if x < 0:
        return 0.0
    c = ctx.W_coef()
    return ctx.ratio(c, x, c, a)


def _z_ratio(ctx: ScaleContext, x: float, a: float, theta: float) -> float:
    """Z(x, theta) / Z(a, theta) for a >= 0."""
    c = ctx.Z_coef(theta)
    if x < 0:
        return math.exp(theta * x) / ctx.Z(a, theta)
    return ctx.ratio(c, x, c, a)


def _need_finite_a(a, name):
    if not math.isfinite(a) or a <= 0:
        raise DomainError(f"{name} needs a finite barrier a > 0")


def _need_reflect_range(x, a, name):
    _need_finite_a(a, name)
    if x < 0 or x > a:
        raise DomainError(f"{name} needs 0 <= x <= a")


# -- continuous observation ---------------------------------------------------


def up_prob_continuous(ctx: ScaleContext, x: float, a: float, two_sided: bool = True) -> float:
    """E_x(e^{-q tau_a^+}; tau_a^+ < tau_0^-), or without the lower barrier if not two_sided."""
    if x > a:
        raise DomainError("need x <= a")
    if not two_sided:
        return 0.0 if math.isinf(a) else math.exp(-ctx.phi * (a - x))
    _need_finite_a(a, "two-sided up_prob_continuous")
    return _w_ratio(ctx, x, a)


def deficit_continuous(ctx: ScaleContext, x: float, a: float, theta: float) -> float:
    """E_x(e^{-q tau_0^- + theta X(tau_0^-)}; tau_0^- < tau_a^+)."""
    if x < 0:
        return math.exp(theta * x)
    if math.isinf(a):
        # Z(x, theta) - W(x) psi(theta)/(theta - Phi), dominant term cancels exactly
        rs = ctx.root_system
        coef = rs.residues * (_dd(ctx, theta, rs.roots) - _dd(ctx, theta, ctx.phi))
        coef[0] = 0.0
        return float(_expsum(ctx, coef, x))
    if x > a:
        raise DomainError("need x <= a")
    _need_finite_a(a, "deficit_continuous")
    return ctx.Z(x, theta) - _w_ratio(ctx, x, a) * ctx.Z(a, theta)


# -- Poissonian observation ---------------------------------------------------


def poisson_deficit(ctx: ScaleContext, x: float, a: float, theta: float, lam: float) -> float:
    """E_x(e^{-q T_0^- + theta X(T_0^-)}; T_0^- < tau_a^+); a = inf gives T_0^- < inf."""
    if math.isinf(lam):
        return deficit_continuous(ctx, x, a, theta)
    if math.isfinite(a) and x > a:
        raise DomainError("need x <= a")
    phil = ctx.phi_lambda(lam)
    rs = ctx.root_system

    if math.isinf(a):
        phi = ctx.phi

        def f(t):
            ratio = _dd(ctx, t, phi) / _dd(ctx, phil, phi)
            if x < 0:
                bracket = math.exp(t * x) - math.exp(phil * x) * ratio
            else:
                coef = rs.residues * (_dd(ctx, t, rs.roots) - _dd(ctx, phil, rs.roots) * ratio)
                coef[0] = 0.0
                bracket = float(_expsum(ctx, coef, x))
            return lam / (lam - ctx.psi(t)) * bracket
    else:
        _need_finite_a(a, "poisson_deficit")

        def f(t):
            bracket = ctx.Z(x, t) - ctx.Z(x, phil) * ctx.Z(a, t) / ctx.Z(a, phil)
            return lam / (lam - ctx.psi(t)) * bracket

    return limit_sense(f, theta, [phil])


def poisson_overshoot(ctx: ScaleContext, x: float, a: float, theta: float, lam: float) -> float:
    """E_x(e^{-q T_a^+ - theta (X(T_a^+) - a)}; T_a^+ < inf), no lower barrier."""
    if not math.isfinite(a) or x > a:
        raise DomainError("poisson_overshoot needs finite a >= x")
    phi = ctx.phi
    if math.isinf(lam):
        return math.exp(-phi * (a - x))
    phil = ctx.phi_lambda(lam)
    return (phil - phi) / (phil + theta) * math.exp(-phi * (a - x))


def poisson_up_before_ruin(ctx: ScaleContext, x: float, a: float, theta: float, lam: float) -> float:
    """E_x(e^{-q T_a^+ - theta (X(T_a^+) - a)}; T_a^+ < tau_0^-)."""
    _need_finite_a(a, "poisson_up_before_ruin")
    if x > a:
        raise DomainError("need x <= a")
    if x < 0:
        return 0.0
    if math.isinf(lam):
        return _w_ratio(ctx, x, a)
    phil = ctx.phi_lambda(lam)
    return lam / (phil + theta) * ctx.ratio(ctx.W_coef(), x, ctx.Z_coef(phil), a)


def ruin_before_poisson_up(ctx: ScaleContext, x: float, a: float, theta: float, lam: float) -> float:
    """E_x(e^{-q tau_0^- + theta X(tau_0^-)}; tau_0^- < T_a^+)."""
    _need_finite_a(a, "ruin_before_poisson_up")
    if x > a:
        raise DomainError("need x <= a")
    if math.isinf(lam):
        return deficit_continuous(ctx, x, a, theta)
    if x < 0:
        return math.exp(theta * x)
    phil = ctx.phi_lambda(lam)
    w = ctx.W(x)
    za_phil = ctx.Z(a, phil)

    def f(t):
        return ctx.Z(x, t) - w / (t - phil) * (ctx.psi(t) - lam * ctx.Z(a, t) / za_phil)

    return limit_sense(f, theta, [phil])


def up_before_poisson_ruin(ctx: ScaleContext, x: float, a: float, lam: float) -> float:
    """E_x(e^{-q tau_a^+}; tau_a^+ < T_0^-) = Z(x, Phi_lam) / Z(a, Phi_lam)."""
    _need_finite_a(a, "up_before_poisson_ruin")
    if x > a:
        raise DomainError("need x <= a")
    if math.isinf(lam):
        return _w_ratio(ctx, x, a)
    return _z_ratio(ctx, x, a, ctx.phi_lambda(lam))


def poisson_deficit_before_poisson_up(ctx: ScaleContext, x: float, a: float, theta: float,
                                      lam: float) -> float:
    """E_x(e^{-q T_0^- + theta X(T_0^-)}; T_0^- < T_a^+)."""
    _need_finite_a(a, "poisson_deficit_before_poisson_up")
    if x > a:
        raise DomainError("need x <= a")
    if math.isinf(lam):
        return deficit_continuous(ctx, x, a, theta)
    phil = ctx.phi_lambda(lam)
    zt_ll = ctx.tilde_Z(a, phil, phil)
    z_x_phil = ctx.Z(x, phil)

    def f(t):
        bracket = ctx.Z(x, t) - z_x_phil * ctx.tilde_Z(a, phil, t) / zt_ll
        return lam / (lam - ctx.psi(t)) * bracket

    return limit_sense(f, theta, [phil])


def poisson_up_before_poisson_ruin(ctx: ScaleContext, x: float, a: float, theta: float,
                                   lam: float) -> float:
    """E_x(e^{-q T_a^+ - theta (X(T_a^+) - a)}; T_a^+ < T_0^-)."""
    _need_finite_a(a, "poisson_up_before_poisson_ruin")
    if x > a:
        raise DomainError("need x <= a")
    if math.isinf(lam):
        return 0.0 if x < 0 else _w_ratio(ctx, x, a)
    phil = ctx.phi_lambda(lam)
    return lam / (phil + theta) * ctx.Z(x, phil) / ctx.tilde_Z(a, phil, phil)


# -- reflected processes ------------------------------------------------------


def reflected_up(ctx: ScaleContext, x: float, a: float, theta: float, vartheta: float,
                 lam: float) -> float:
    """E^0_x(e^{-q T - vartheta R(T) - theta (X(T) - a)}; T < inf), T = T_a^+, reflection at 0 from below."""
    _need_reflect_range(x, a, "reflected_up")
    if math.isinf(lam):
        return _z_ratio(ctx, x, a, vartheta)
    phil = ctx.phi_lambda(lam)
    za_phil = ctx.Z(a, phil)

    def f(v):
        den = (phil + theta) * (ctx.psi(v) * za_phil - lam * ctx.Z(a, v))
        return lam * (v - phil) * ctx.Z(x, v) / den

    return limit_sense(f, vartheta, [phil])


def reflected_ruin(ctx: ScaleContext, x: float, a: float, theta: float, vartheta: float,
                   lam: float) -> float:
    """E^a_x(e^{-q T - vartheta R(T) + theta X(T)}; T < inf), T = T_0^-, reflection at a from above."""
    _need_reflect_range(x, a, "reflected_ruin")
    wa = ctx.W(a)
    if math.isinf(lam):
        za = ctx.Z(a, theta)
        den = ctx.W_prime_plus(a) + vartheta * wa
        return ctx.Z(x, theta) + ctx.W(x) / den * (wa * ctx.psi(theta) - (theta + vartheta) * za)
    phil = ctx.phi_lambda(lam)
    den = (phil + vartheta) * ctx.Z(a, phil) - lam * wa
    z_x_phil = ctx.Z(x, phil)

    def f(t):
        inner = ctx.Z(x, t) + z_x_phil * (wa * ctx.psi(t) - (t + vartheta) * ctx.Z(a, t)) / den
        return lam / (lam - ctx.psi(t)) * inner

    return limit_sense(f, theta, [phil])


def regulator_passage(ctx: ScaleContext, x: float, a: float, y: float, lam: float) -> float:
    """E^a_x(e^{-q rho_y}; rho_y < T_0^-), rho_y the first passage of the regulator above y."""
    _need_reflect_range(x, a, "regulator_passage")
    if math.isinf(lam):
        rate = ctx.W_prime_plus(a) / ctx.W(a)
        return _w_ratio(ctx, x, a) * math.exp(-rate * y)
    phil = ctx.phi_lambda(lam)
    rate = ctx.Z_dx(a, phil) / ctx.Z(a, phil)
    return _z_ratio(ctx, x, a, phil) * math.exp(-rate * y)


def discounted_dividends(ctx: ScaleContext, x: float, a: float, lam: float) -> float:
    """E^a_x int_0^inf e^{-q t} 1{t < T_0^-} dR(t) for the barrier strategy at a."""
    _need_reflect_range(x, a, "discounted_dividends")
    if math.isinf(lam):
        den = ctx.W_prime_plus(a)
        if not den > 0:
            raise NumericFailure("W'_+(a) <= 0")
        return ctx.ratio(ctx.W_coef(), x, ctx.W_coef() * ctx.root_system.roots, a)
    phil = ctx.phi_lambda(lam)
    if not ctx.Z_dx(a, phil) > 0:
        raise NumericFailure("Z'(a, Phi_lam) <= 0")
    return ctx.ratio(ctx.Z_coef(phil), x, ctx.Z_dx_coef(phil), a)


def total_dividends_rate(ctx: ScaleContext, a: float, lam: float) -> float:
    """Rate of the exponential law of R(T_0^-) started from the barrier, q = 0."""
    _need_finite_a(a, "total_dividends_rate")
    if ctx.q != 0:
        raise DomainError("total_dividends_rate is defined for q = 0")
    if math.isinf(lam):
        return ctx.W_prime_plus(a) / ctx.W(a)
    phil = ctx.phi_lambda(lam)
    return phil - lam * ctx.W(a) / ctx.Z(a, phil)


# -- dispatch -----------------------------------------------------------------

IDENTITIES = {
    "up_prob_continuous": (up_prob_continuous, ("x", "a", "two_sided")),
    "deficit_continuous": (deficit_continuous, ("x", "a", "theta")),
    "poisson_deficit": (poisson_deficit, ("x", "a", "theta", "lam")),
    "poisson_overshoot": (poisson_overshoot, ("x", "a", "theta", "lam")),
    "poisson_up_before_ruin": (poisson_up_before_ruin, ("x", "a", "theta", "lam")),
    "ruin_before_poisson_up": (ruin_before_poisson_up, ("x", "a", "theta", "lam")),
    "up_before_poisson_ruin": (up_before_poisson_ruin, ("x", "a", "lam")),
    "poisson_deficit_before_poisson_up": (poisson_deficit_before_poisson_up, ("x", "a", "theta", "lam")),
    "poisson_up_before_poisson_ruin": (poisson_up_before_poisson_ruin, ("x", "a", "theta", "lam")),
    "reflected_up": (reflected_up, ("x", "a", "theta", "vartheta", "lam")),
    "reflected_ruin": (reflected_ruin, ("x", "a", "theta", "vartheta", "lam")),
    "regulator_passage": (regulator_passage, ("x", "a", "y", "lam")),
    "discounted_dividends": (discounted_dividends, ("x", "a", "lam")),
    "total_dividends_rate": (total_dividends_rate, ("a", "lam")),
}


def context_for(model: LevyModel, q: float, cache: dict | None = None) -> ScaleContext:
    if cache is not None:
        ctx = cache.get(q)
        if ctx is None:
            ctx = cache[q] = ScaleContext(model, q)
        return ctx
    return ScaleContext(model, q)


def evaluate(target, query: ExitQuery) -> float:
    """Evaluate ``query`` against a model or a context whose killing rate matches ``query.q``."""
    if isinstance(target, ScaleContext):
        ctx = target if target.q == query.q else ScaleContext(target.model, query.q)
    else:
        ctx = ScaleContext(target, query.q)
    func, names = IDENTITIES[query.identity]
    return float(func(ctx, **{n: getattr(query, n) for n in names}))
