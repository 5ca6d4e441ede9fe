"""Scale functions W_q, Z_q(., theta), the third scale function and resolvent densities.

For the rational models of :mod:`levy_model` every scale function is a finite
exponential sum over the zeros zeta_k of psi_q = psi - q:

    W_q(x)         = sum_k r_k exp(zeta_k x)
    Z_q(x, theta)  = sum_k r_k exp(zeta_k x) psi[theta, zeta_k]
    Zt_q(x, a, b)  = sum_k r_k exp(zeta_k x) psi[a, zeta_k] psi[b, zeta_k]

with r_k = 1/psi_q'(zeta_k) and psi[s, t] the divided difference of psi.
Because psi_q(zeta_k) = 0, psi[theta, zeta_k] = psi_q(theta)/(theta - zeta_k),
so the second line is the usual partial-fraction form and the limit
theta -> zeta_k is already built in.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .levy_model import LevyModel, RootSystem, psi, psi_dd, psi_dd_ds, psi_prime, roots

DELTA_LIMIT = 1e-6
LOG_SPACE_THRESHOLD = 500.0


def _expsum(ctx: "ScaleContext", coef: np.ndarray, x):
    """sum_k coef[..., k] exp(zeta_k x), factoring out exp(phi x) when it is huge."""
    zeta = ctx.root_system.roots
    x = np.asarray(x, dtype=float)
    top = zeta[0]
    xe = x[..., None]
    if np.any(top * x > LOG_SPACE_THRESHOLD):
        mant = np.sum(coef * np.exp((zeta - top) * xe), axis=-1)
        with np.errstate(over="ignore"):
            return mant * np.exp(top * x)
    return np.sum(coef * np.exp(zeta * xe), axis=-1)


def _scalar(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


@dataclass(frozen=True, eq=False)
class ScaleContext:
    """Scale-function evaluator for a model at a fixed killing rate ``q``."""

    model: LevyModel
    q: float = 0.0
    root_system: RootSystem = field(default=None)
    _aux: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if self.root_system is None:
            object.__setattr__(self, "root_system", roots(self.model, self.q))

    @property
    def phi(self) -> float:
        return self.root_system.phi

    def killed(self, lam: float) -> "ScaleContext":
        """Context for psi_{q + lam}; memoised per ``lam``."""
        if lam == 0:
            return self
        lam = float(lam)
        hit = self._aux.get(lam)
        if hit is not None:
            return hit
        ctx = ScaleContext(self.model, self.q + lam)
        with self._lock:
            return self._aux.setdefault(lam, ctx)

    def phi_lambda(self, lam: float) -> float:
        """Phi_{q + lam}."""
        return self.killed(lam).phi

    def psi(self, theta):
        """psi_q(theta) = psi(theta) - q."""
        return psi(self.model, theta) - self.q

    def psi_prime(self, theta):
        return psi_prime(self.model, theta)

    # -- first scale function -------------------------------------------------

    def W(self, x):
        x = np.asarray(x, dtype=float)
        rs = self.root_system
        val = _expsum(self, rs.residues, np.maximum(x, 0.0))
        return _scalar(np.where(x < 0, 0.0, val))

    def W_prime_plus(self, x):
        """Right derivative of W at x >= 0."""
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise DomainError("W'_+ needs x >= 0")
        rs = self.root_system
        return _scalar(_expsum(self, rs.residues * rs.roots, x))

    # -- second scale function ------------------------------------------------

    def _z_coef(self, theta):
        rs = self.root_system
        theta = np.asarray(theta, dtype=float)
        return rs.residues * psi_dd(self.model, theta[..., None], rs.roots)

    def Z(self, x, theta):
        x, theta = np.broadcast_arrays(np.asarray(x, float), np.asarray(theta, float))
        val = _expsum(self, self._z_coef(theta), np.maximum(x, 0.0))
        with np.errstate(over="ignore"):
            below = np.exp(theta * np.minimum(x, 0.0))
        return _scalar(np.where(x < 0, below, val))

    def Z_dx(self, x, theta):
        """d/dx Z(x, theta) for x >= 0; equals theta Z - psi_q(theta) W."""
        x, theta = np.broadcast_arrays(np.asarray(x, float), np.asarray(theta, float))
        if np.any(x < 0):
            raise DomainError("Z_dx needs x >= 0")
        coef = self._z_coef(theta) * self.root_system.roots
        return _scalar(_expsum(self, coef, x))

    def Z_dtheta(self, x, theta):
        x, theta = np.broadcast_arrays(np.asarray(x, float), np.asarray(theta, float))
        if np.any(x < 0):
            raise DomainError("Z_dtheta needs x >= 0")
        rs = self.root_system
        coef = rs.residues * psi_dd_ds(self.model, theta[..., None], rs.roots)
        return _scalar(_expsum(self, coef, x))

    # -- third scale function -------------------------------------------------

    def tilde_Z(self, x, alpha, beta):
        """(psi(a) Z(x, b) - psi(b) Z(x, a)) / (a - b), continuous across a = b.

        Evaluated as sum_k r_k e^{zeta_k x} psi[a, zeta_k] psi[b, zeta_k], which
        equals the defining quotient for a != b and the confluent form
        psi'(a) Z(x, a) - psi(a) dZ/dtheta(x, a) for a == b.
        """
        x, alpha, beta = np.broadcast_arrays(
            np.asarray(x, float), np.asarray(alpha, float), np.asarray(beta, float))
        if np.any(x < 0):
            raise DomainError("tilde_Z needs x >= 0")
        rs = self.root_system
        coef = (rs.residues * psi_dd(self.model, alpha[..., None], rs.roots)
                * psi_dd(self.model, beta[..., None], rs.roots))
        return _scalar(_expsum(self, coef, x))

    # -- ratios that stay finite when both factors overflow -------------------

    def ratio(self, num_coef, x, den_coef, y) -> float:
        """sum_k n_k e^{zeta_k x} / sum_k d_k e^{zeta_k y} for x, y >= 0."""
        zeta = self.root_system.roots
        top = zeta[0]
        n = np.sum(num_coef * np.exp((zeta - top) * x))
        d = np.sum(den_coef * np.exp((zeta - top) * y))
        return float(n / d * np.exp(top * (x - y)))

    def W_coef(self):
        return self.root_system.residues

    def Z_coef(self, theta):
        return self._z_coef(theta)

    def Z_dx_coef(self, theta):
        return self._z_coef(theta) * self.root_system.roots


def resolvent_density(ctx: ScaleContext, kind: str, x, lam: float, a: float | None = None):
    """Density at ``x`` of X(e_lam) (killing q implicit), optionally killed at a barrier.

    kind:
      ``free``               started at 0, no barrier
      ``killed_above``       started at 0, killed on passing above ``a`` (x <= a)
      ``killed_below_from``  started at ``a``, killed on passing below 0 (x >= 0)
    """
    if lam <= 0:
        raise DomainError("lam must be positive")
    k = ctx.killed(lam)
    phil = k.phi
    x = np.asarray(x, dtype=float)
    # for x < 0 the Phi_lam term of W_lam cancels exactly; drop it before summing
    rs = k.root_system
    zeta, r = rs.roots[1:], rs.residues[1:]
    neg = np.minimum(x, 0.0)[..., None]
    if kind == "free":
        tail = -np.sum(r * np.exp(-zeta * neg), axis=-1)
        val = lam * np.where(x < 0, tail, np.exp(-phil * np.maximum(x, 0.0)) / psi_prime(ctx.model, phil))
    elif kind == "killed_above":
        if a is None or a < 0:
            raise DomainError("killed_above needs a >= 0")
        if np.any(x > a):
            raise DomainError("killed_above density is supported on x <= a")
        tail = np.sum(r * (np.exp(zeta * (a - neg) - phil * a) - np.exp(-zeta * neg)), axis=-1)
        val = lam * np.where(x < 0, tail, np.exp(-phil * a) * k.W(a - np.maximum(x, 0.0)))
    elif kind == "killed_below_from":
        if a is None or a <= 0:
            raise DomainError("killed_below_from needs a > 0")
        if np.any(x < 0):
            raise DomainError("killed_below_from density is supported on x >= 0")
        val = lam * (np.exp(-phil * x) * k.W(a) - k.W(a - x))
    else:
        raise DomainError(f"unknown resolvent kind {kind!r}")
    return _scalar(val)


def W(ctx: ScaleContext, x):
    return ctx.W(x)


def W_prime_plus(ctx: ScaleContext, x):
    return ctx.W_prime_plus(x)


def Z(ctx: ScaleContext, x, theta):
    return ctx.Z(x, theta)


def Z_dx(ctx: ScaleContext, x, theta):
    return ctx.Z_dx(x, theta)


def Z_dtheta(ctx: ScaleContext, x, theta):
    return ctx.Z_dtheta(x, theta)


def tilde_Z(ctx: ScaleContext, x, alpha, beta):
    return ctx.tilde_Z(x, alpha, beta)
