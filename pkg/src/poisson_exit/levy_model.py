"""Spectrally-negative Levy processes with rational Laplace exponent.

The model is

    X(t) = x + c t + sigma B(t) - S(t),

where S is compound Poisson with rate ``nu`` and hyperexponential claims
(mixture of Exp(eta_i) with weights w_i).  Its Laplace exponent

    psi(theta) = c theta + sigma2 theta^2 / 2 - sum_i nu w_i theta / (theta + eta_i)

is rational, so psi(theta) - q has finitely many real zeros and the q-scale
function is a finite exponential sum whose coefficients are the residues of
1 / (psi - q).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NumericFailure

ROOT_SEPARATION = 1e-8
ROOT_RESIDUAL = 1e-10


@dataclass(frozen=True)
class LevyModel:
    c: float
    sigma2: float = 0.0
    nu: float = 0.0
    claim_weights: tuple[float, ...] = ()
    claim_rates: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "claim_weights", tuple(float(w) for w in self.claim_weights))
        object.__setattr__(self, "claim_rates", tuple(float(r) for r in self.claim_rates))
        vals = (self.c, self.sigma2, self.nu) + self.claim_weights + self.claim_rates
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("model parameters must be finite")
        if self.sigma2 < 0 or self.nu < 0:
            raise DomainError("sigma2 and nu must be non-negative")
        if len(self.claim_weights) != len(self.claim_rates):
            raise DomainError("claim_weights and claim_rates differ in length")
        if self.nu > 0 and not self.claim_rates:
            raise DomainError("nu > 0 requires a claim distribution")
        if self.claim_rates:
            if min(self.claim_weights) <= 0 or min(self.claim_rates) <= 0:
                raise DomainError("claim weights and rates must be positive")
            if abs(sum(self.claim_weights) - 1.0) > 1e-12:
                raise DomainError("claim weights must sum to 1")
            if len(set(self.claim_rates)) != len(self.claim_rates):
                raise DomainError("claim rates must be distinct")
        if not (self.sigma2 > 0 or self.c > 0):
            raise DomainError("need sigma2 > 0 or c > 0 (process would be non-increasing)")

    @classmethod
    def cramer_lundberg(cls, c: float, nu: float, eta: float) -> "LevyModel":
        """Premium rate ``c``, claim rate ``nu``, Exp(``eta``) claims."""
        return cls(c=c, nu=nu, claim_weights=(1.0,), claim_rates=(eta,))

    @classmethod
    def brownian(cls, c: float, sigma2: float) -> "LevyModel":
        return cls(c=c, sigma2=sigma2)

    @property
    def has_jumps(self) -> bool:
        return self.nu > 0

    @property
    def jump_coeffs(self) -> tuple[np.ndarray, np.ndarray]:
        """(nu * w_i, eta_i), empty when the model has no jumps."""
        if not self.has_jumps:
            return np.zeros(0), np.zeros(0)
        return self.nu * np.asarray(self.claim_weights), np.asarray(self.claim_rates)

    @property
    def mean(self) -> float:
        """psi'(0) = E X(1)."""
        return psi_prime(self, 0.0)

    def to_dict(self) -> dict:
        d = {"type": "spectrally_negative", "c": self.c, "sigma2": self.sigma2, "nu": self.nu}
        if self.has_jumps:
            d["claims"] = {"weights": list(self.claim_weights), "rates": list(self.claim_rates)}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LevyModel":
        if d.get("type", "spectrally_negative") != "spectrally_negative":
            raise DomainError(f"unsupported model type {d.get('type')!r}")
        claims = d.get("claims") or {}
        nu = float(d.get("nu", 0.0))
        weights, rates = claims.get("weights", ()), claims.get("rates", ())
        if nu == 0.0:
            weights, rates = (), ()
        return cls(c=float(d["c"]), sigma2=float(d.get("sigma2", 0.0)), nu=nu,
                   claim_weights=tuple(weights), claim_rates=tuple(rates))


def load_model(path: str | Path) -> LevyModel:
    with open(path) as fh:
        return LevyModel.from_dict(json.load(fh))


def save_model(model: LevyModel, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, indent=2)


def psi(model: LevyModel, theta):
    """Laplace exponent log E exp(theta X(1)); accepts scalars or arrays."""
    theta = np.asarray(theta, dtype=float)
    val = model.c * theta + 0.5 * model.sigma2 * theta**2
    nw, eta = model.jump_coeffs
    for a, e in zip(nw, eta):
        val = val - a * theta / (theta + e)
    return val[()] if val.ndim == 0 else val


def psi_prime(model: LevyModel, theta):
    theta = np.asarray(theta, dtype=float)
    val = model.c + model.sigma2 * theta
    nw, eta = model.jump_coeffs
    for a, e in zip(nw, eta):
        val = val - a * e / (theta + e) ** 2
    return val[()] if val.ndim == 0 else val


def psi_dd(model: LevyModel, s, t):
    """First divided difference (psi(s) - psi(t)) / (s - t), exact at s == t.

    Written without subtraction so it stays accurate when s and t coincide;
    any constant shift of psi (killing) cancels.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    val = model.c + 0.5 * model.sigma2 * (s + t)
    nw, eta = model.jump_coeffs
    for a, e in zip(nw, eta):
        val = val - a * e / ((s + e) * (t + e))
    return val[()] if val.ndim == 0 else val


def psi_dd_ds(model: LevyModel, s, t):
    """Partial derivative of ``psi_dd(s, t)`` in ``s``."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    val = 0.5 * model.sigma2 + 0.0 * (s + t)
    nw, eta = model.jump_coeffs
    for a, e in zip(nw, eta):
        val = val + a * e / ((s + e) ** 2 * (t + e))
    return val[()] if val.ndim == 0 else val


@dataclass(frozen=True)
class RootSystem:
    """Zeros of psi(theta) - q with the residues 1/psi'(zeta) of 1/(psi - q)."""

    q: float
    roots: np.ndarray = field(repr=False)
    residues: np.ndarray = field(repr=False)

    @property
    def phi(self) -> float:
        return float(self.roots[0])

    def __repr__(self):
        return f"RootSystem(q={self.q}, roots={self.roots.tolist()}, residues={self.residues.tolist()})"


def _cleared_poly(model: LevyModel, q: float, theta: float, deflate: bool = False) -> float:
    # (psi(theta) - q) * prod_i (theta + eta_i); with deflate (q == 0 only) the
    # known zero at theta = 0 is divided out.
    nw, eta = model.jump_coeffs
    if deflate:
        base = model.c + 0.5 * model.sigma2 * theta
    else:
        base = model.c * theta + 0.5 * model.sigma2 * theta * theta - q
    val = base * float(np.prod(theta + eta))
    for i, (a, e) in enumerate(zip(nw, eta)):
        others = float(np.prod(np.delete(theta + eta, i)))
        val -= a * (1.0 if deflate else theta) * others
    return val


def _expand_bracket(f, lo: float, step: float, direction: int) -> float:
    """Walk from ``lo`` until ``f`` changes sign relative to f(lo)."""
    s0 = np.sign(f(lo))
    x = lo + direction * step
    for _ in range(2000):
        if np.sign(f(x)) != s0:
            return x
        step *= 2.0
        x = lo + direction * step
    raise NumericFailure("could not bracket a root of psi - q")


def _polish(model: LevyModel, q: float, z: float) -> float:
    for _ in range(3):
        d = float(psi_prime(model, z))
        if d == 0.0:
            break
        step = (float(psi(model, z)) - q) / d
        z_new = z - step
        if not math.isfinite(z_new):
            break
        z = z_new
        if abs(step) <= 4e-16 * max(1.0, abs(z)):
            break
    return z


def roots(model: LevyModel, q: float) -> RootSystem:
    """All real zeros of psi(theta) = q, in descending order, and their residues.

    The zeros interlace the poles -eta_i: one in each gap between consecutive
    poles, one in (-eta_min, 0] and one in [0, inf), plus one below the
    smallest pole when sigma2 > 0.  Each is bracketed on the cleared
    polynomial, found by Brent's method and polished by Newton on psi.
    """
    q = float(q)
    if q < 0 or not math.isfinite(q):
        raise DomainError("killing rate q must be finite and non-negative")
    mean = float(psi_prime(model, 0.0))
    if q == 0.0 and mean == 0.0:
        raise DomainError("q = 0 with psi'(0) = 0: scale function degenerates")

    deflate = q == 0.0
    f = lambda t: _cleared_poly(model, q, t, deflate)
    _, eta = model.jump_coeffs
    poles = sorted(-np.asarray(eta))  # ascending, all negative
    solve = lambda lo, hi: brentq(f, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
    found: list[float] = []

    for lo, hi in zip(poles[:-1], poles[1:]):
        found.append(solve(lo, hi))

    right_pole = poles[-1] if poles else None
    # f(0) = -q * prod(eta) < 0 for q > 0; deflated f(0) = psi'(0) * prod(eta)
    if q > 0 or mean < 0:
        found.append(solve(0.0, _expand_bracket(f, 0.0, 1.0, +1)))
    # a negative root right of the poles needs a pole or a Brownian part to bend psi back up
    if (q > 0 or mean > 0) and (right_pole is not None or model.sigma2 > 0):
        lo = right_pole if right_pole is not None else _expand_bracket(f, 0.0, 1.0, -1)
        found.append(solve(lo, 0.0))
    if q == 0:
        found.append(0.0)
    if model.sigma2 > 0 and right_pole is not None:
        left = poles[0]
        found.append(solve(_expand_bracket(f, left, 1.0, -1), left))

    expected = len(eta) + 1 + (1 if model.sigma2 > 0 else 0)
    if len(found) != expected:
        raise NumericFailure(f"found {len(found)} roots, expected {expected}")

    zs = np.array(sorted((z if (q == 0 and z == 0.0) else _polish(model, q, z) for z in found),
                         reverse=True))
    gaps = -np.diff(zs)
    if gaps.size and gaps.min() < ROOT_SEPARATION:
        raise NumericFailure("roots of psi - q are (nearly) multiple")
    resid = np.abs(psi(model, zs) - q)
    if resid.max() >= ROOT_RESIDUAL * max(1.0, q):
        raise NumericFailure(f"root residual {resid.max():.3e} too large")
    if q > 0 and not (zs[0] > 0 and (zs.size == 1 or zs[1] < 0)):
        raise NumericFailure("expected exactly one non-negative root")
    residues = 1.0 / psi_prime(model, zs)
    return RootSystem(q=q, roots=zs, residues=np.asarray(residues, dtype=float))


def phi(model: LevyModel, q: float) -> float:
    """Right-most non-negative zero Phi_q of psi(theta) = q."""
    return roots(model, q).phi
