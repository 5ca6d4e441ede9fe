"""Monte Carlo estimators paired with the exit identities.

Each identity is mapped to a stopping configuration for the path kernel
(which barriers are watched continuously, which only at observation epochs,
whether the process is reflected) and to a pathwise functional of the
outcome.  Paths are simulated in fixed-size chunks, each path on its own RNG
substream, so estimates do not depend on the number of workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, UnknownIdentity
from ..exit_identities import IDENTITIES, ExitQuery
from ..levy_model import LevyModel, roots
from . import kernel as K

CHUNK = 1 << 15
DEFAULT_STEP = 1e-3
TAIL = 1e-12  # bias bound used for horizons and escape levels
LOG_TAIL = -math.log(TAIL)
BIAS_TRUNCATION = 1e-4


@dataclass(frozen=True)
class ObservationScheme:
    lam: float
    mode: str = "poisson"

    def __post_init__(self):
        if self.mode not in ("poisson", "continuous"):
            raise DomainError(f"unknown observation mode {self.mode!r}")
        if self.mode == "poisson" and not (0 < self.lam < math.inf):
            raise DomainError("poisson observation needs a finite positive rate")


@dataclass(frozen=True)
class Barriers:
    """Stopping rules.  ``lower``/``upper`` are 'none', 'continuous' or 'poisson'."""

    a: float = math.inf
    lower: str = "none"
    upper: str = "none"
    reflect_at: str = "none"  # 'none', '0' or 'a'
    y: float = math.inf  # stop when the regulator exceeds y
    track_occupation: bool = False

    def __post_init__(self):
        for v in (self.lower, self.upper):
            if v not in ("none", "continuous", "poisson"):
                raise DomainError(f"unknown barrier monitoring {v!r}")
        if self.reflect_at not in ("none", "0", "a"):
            raise DomainError(f"unknown reflection {self.reflect_at!r}")
        if (self.upper != "none" or self.reflect_at == "a") and not math.isfinite(self.a):
            raise DomainError("upper barrier / reflection at a needs finite a")


@dataclass(frozen=True)
class PathOutcome:
    exit_kind: str
    exit_time: float
    exit_level: float
    regulator_at_exit: float
    occupation_above_a: float
    discount_weight: float
    discounted_regulator: float = 0.0


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    n_paths: int
    truncated_fraction: float
    bias_warning: bool = False
    escaped_fraction: float = 0.0

    def z_score(self, target: float) -> float:
        if self.std_error == 0:
            return 0.0 if self.mean == target else math.copysign(math.inf, self.mean - target)
        return (self.mean - target) / self.std_error


@dataclass
class PathBatch:
    """Per-path outcome arrays of one simulation run."""

    kind: np.ndarray
    exit_time: np.ndarray
    exit_level: np.ndarray
    regulator: np.ndarray
    occupation: np.ndarray
    dividends: np.ndarray
    horizon: float
    step: float
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.kind.shape[0]

    def fraction(self, kind: int) -> float:
        return float(np.mean(self.kind == kind))


_MONITOR = {"none": 0, "continuous": 1, "poisson": 2}


def _parameter_arrays(model, x, barriers, lam, q, horizon, step, kill, escape_hi, escape_lo):
    P = np.zeros(K.N_FPARAMS)
    P[K.P_X0] = x
    P[K.P_A] = barriers.a
    P[K.P_C] = model.c
    P[K.P_SIGMA] = math.sqrt(model.sigma2)
    P[K.P_NU] = model.nu
    P[K.P_LAM] = lam if math.isfinite(lam) else 0.0
    P[K.P_Q] = q
    P[K.P_HORIZON] = horizon
    P[K.P_Y] = barriers.y
    P[K.P_H] = step
    P[K.P_KILL] = kill
    P[K.P_ESCAPE] = escape_hi
    P[K.P_ESCAPE_LO] = escape_lo
    I = np.zeros(K.N_IPARAMS, dtype=np.int64)
    I[K.I_CONT_RUIN] = barriers.lower == "continuous"
    I[K.I_OBS_RUIN] = barriers.lower == "poisson"
    I[K.I_CONT_UP] = barriers.upper == "continuous"
    I[K.I_OBS_UP] = barriers.upper == "poisson"
    I[K.I_REFLECT] = {"none": K.NO_REFLECT, "0": K.REFLECT_LOWER, "a": K.REFLECT_UPPER}[barriers.reflect_at]
    I[K.I_OCC] = barriers.track_occupation
    I[K.I_STOP_REG] = math.isfinite(barriers.y)
    if model.has_jumps:
        cum_w = np.cumsum(model.claim_weights)
        rates = np.asarray(model.claim_rates, dtype=float)
    else:
        cum_w = np.ones(1)
        rates = np.ones(1)
    return P, I, cum_w, rates


def exact_bridge_ok(model: LevyModel, barriers: Barriers, q: float, kill: float = 0.0) -> bool:
    """True when one bridge-sampled step per inter-event interval is exact for sigma2 > 0."""
    if model.sigma2 == 0:
        return True
    n_cont = (barriers.lower == "continuous") + (barriers.upper == "continuous") + (barriers.reflect_at != "none")
    return q == 0 and kill == 0 and not barriers.track_occupation and n_cont <= 1


def default_horizon(model: LevyModel, x: float, barriers: Barriers, q: float, escape: float) -> float:
    if q > 0:
        return LOG_TAIL / q
    span = barriers.a if math.isfinite(barriers.a) else max(x, escape if math.isfinite(escape) else x)
    drift = abs(model.mean)
    return 1e3 * (1.0 + span) / max(drift, 1e-3)


def escape_levels(model: LevyModel, x: float, barriers: Barriers, q: float) -> tuple[float, float]:
    """Levels beyond which the functional is below TAIL for any continuation.

    Upper: with no upper stop or reflection, a path above U is ruined (even
    continuously) with probability <= exp(-R (U)) by the Lundberg bound, R the
    adjustment coefficient; only used when ruin is the target.  Lower: with no
    ruin stop, reaching a from below U costs exp(-Phi_q (a - U)).
    """
    hi = lo = math.inf
    lo = -math.inf
    if barriers.upper == "none" and barriers.reflect_at == "none" and barriers.lower != "none":
        zs = roots(model, 0.0).roots if model.mean > 0 else ()
        if len(zs) > 1:
            hi = max(x, 0.0) + LOG_TAIL / -float(zs[1])
    if barriers.lower == "none" and barriers.reflect_at != "0" and barriers.upper != "none":
        ph = float(roots(model, q).phi) if (q > 0 or model.mean < 0) else 0.0
        if ph > 0:
            lo = min(x, 0.0) - LOG_TAIL / ph
    return hi, lo


def simulate(model: LevyModel, x: float, barriers: Barriers, lam: float, q: float, n_paths: int,
             seed: int, workers: int = 1, horizon: float | None = None, step: float | None = None,
             kill_rate: float = 0.0) -> PathBatch:
    """Simulate ``n_paths`` paths from ``x``; path i always uses substream i of ``seed``."""
    if n_paths < 1:
        raise DomainError("n_paths must be positive")
    if q < 0 or kill_rate < 0:
        raise DomainError("q and kill_rate must be non-negative")
    hi, lo = escape_levels(model, x, barriers, q + kill_rate)
    if horizon is None:
        horizon = default_horizon(model, x, barriers, q + kill_rate, hi)
    if step is None:
        step = math.inf if exact_bridge_ok(model, barriers, q, kill_rate) else DEFAULT_STEP
    P, I, cum_w, rates = _parameter_arrays(model, x, barriers, lam, q, horizon, step, kill_rate, hi, lo)

    kind = np.zeros(n_paths, dtype=np.int64)
    cols = [np.zeros(n_paths) for _ in range(5)]
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF

    def run(start):
        stop = min(start + CHUNK, n_paths)
        K.simulate_block(start, stop - start, np.uint64(seed), P, I, cum_w, rates,
                         kind[start:stop], *(c[start:stop] for c in cols))

    starts = range(0, n_paths, CHUNK)
    workers = max(1, int(workers))
    if workers == 1:
        for s in starts:
            run(s)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, starts))
    return PathBatch(kind, *cols, horizon=horizon, step=step,
                     meta={"x": x, "lam": lam, "q": q, "seed": seed, "kill_rate": kill_rate})


def simulate_path(model: LevyModel, scheme: ObservationScheme, barriers: Barriers, horizon: float,
                  q: float, rng_stream: tuple[int, int], x: float = 0.0,
                  step: float | None = None) -> PathOutcome:
    """One path on substream ``rng_stream = (seed, path_index)``."""
    seed, index = rng_stream
    lam = scheme.lam if scheme.mode == "poisson" else math.inf
    if scheme.mode == "continuous":
        barriers = Barriers(barriers.a,
                            "continuous" if barriers.lower != "none" else "none",
                            "continuous" if barriers.upper != "none" else "none",
                            barriers.reflect_at, barriers.y, barriers.track_occupation)
    hi, lo = escape_levels(model, x, barriers, q)
    if step is None:
        step = math.inf if exact_bridge_ok(model, barriers, q) else DEFAULT_STEP
    P, I, cum_w, rates = _parameter_arrays(model, x, barriers, lam, q, horizon, step, 0.0, hi, lo)
    out = [np.zeros(1, dtype=np.int64)] + [np.zeros(1) for _ in range(5)]
    K.simulate_block(int(index), 1, np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF), P, I, cum_w, rates, *out)
    t = float(out[1][0])
    return PathOutcome(K.KIND_NAMES[int(out[0][0])], t, float(out[2][0]), float(out[3][0]),
                       float(out[4][0]), math.exp(-q * t), float(out[5][0]))


# -- identity -> (stopping rules, functional) --------------------------------

_UP = (K.DETECTED_UP, K.CONTINUOUS_UP)
_RUIN = (K.DETECTED_RUIN, K.CONTINUOUS_RUIN)


def _mon(lam: float) -> str:
    return "continuous" if math.isinf(lam) else "poisson"


def plan(query: ExitQuery) -> tuple[Barriers, str]:
    """Stopping rules and functional name for an identity query."""
    i, a, lam = query.identity, query.a, query.lam
    fin = math.isfinite(a)
    if i == "up_prob_continuous":
        return Barriers(a, "continuous" if query.two_sided else "none", "continuous"), "up"
    if i == "deficit_continuous":
        return Barriers(a, "continuous", "continuous" if fin else "none"), "deficit"
    if i == "poisson_deficit":
        return Barriers(a, _mon(lam), "continuous" if fin else "none"), "deficit"
    if i == "poisson_overshoot":
        return Barriers(a, "none", _mon(lam)), "overshoot"
    if i == "poisson_up_before_ruin":
        return Barriers(a, "continuous", _mon(lam)), "overshoot"
    if i == "ruin_before_poisson_up":
        return Barriers(a, "continuous", _mon(lam) if fin else "none"), "deficit"
    if i == "up_before_poisson_ruin":
        return Barriers(a, _mon(lam), "continuous"), "up"
    if i == "poisson_deficit_before_poisson_up":
        return Barriers(a, _mon(lam), _mon(lam)), "deficit"
    if i == "poisson_up_before_poisson_ruin":
        return Barriers(a, _mon(lam), _mon(lam)), "overshoot"
    if i == "reflected_up":
        return Barriers(a, "none", _mon(lam), reflect_at="0"), "reflected_overshoot"
    if i == "reflected_ruin":
        return Barriers(a, _mon(lam), "none", reflect_at="a"), "reflected_deficit"
    if i == "regulator_passage":
        return Barriers(a, _mon(lam), "none", reflect_at="a", y=query.y), "passage"
    if i == "discounted_dividends":
        return Barriers(a, _mon(lam), "none", reflect_at="a"), "dividends"
    if i == "total_dividends_rate":
        return Barriers(a, _mon(lam), "none", reflect_at="a"), "total_dividends"
    raise UnknownIdentity(i)


def functional(batch: PathBatch, name: str, query: ExitQuery) -> np.ndarray:
    """Per-path values whose mean estimates the identity."""
    q = batch.meta["q"]
    with np.errstate(over="ignore", invalid="ignore"):
        w = np.exp(-q * batch.exit_time)
        up = np.isin(batch.kind, _UP)
        ruin = np.isin(batch.kind, _RUIN)
        lvl = batch.exit_level
        if name == "up":
            v = np.where(up, w, 0.0)
        elif name == "deficit":
            v = np.where(ruin, w * np.exp(query.theta * np.minimum(lvl, 0.0)), 0.0)
        elif name == "overshoot":
            v = np.where(up, w * np.exp(-query.theta * np.maximum(lvl - query.a, 0.0)), 0.0)
        elif name == "reflected_overshoot":
            v = np.where(up, w * np.exp(-query.vartheta * batch.regulator
                                        - query.theta * np.maximum(lvl - query.a, 0.0)), 0.0)
        elif name == "reflected_deficit":
            v = np.where(ruin, w * np.exp(-query.vartheta * batch.regulator
                                          + query.theta * np.minimum(lvl, 0.0)), 0.0)
        elif name == "passage":
            v = np.where(batch.kind == K.REGULATOR_PASSAGE, w, 0.0)
        elif name == "dividends":
            v = batch.dividends.copy()
        elif name == "total_dividends":
            v = batch.regulator.copy()
        else:
            raise UnknownIdentity(name)
    return v


def mc_target(value: float, query: ExitQuery) -> float:
    """Closed-form counterpart of the MC functional (the mean 1/rate for total dividends)."""
    if query.identity == "total_dividends_rate":
        return 1.0 / value
    return value


def summarize(values: np.ndarray, batch: PathBatch) -> MCEstimate:
    n = values.shape[0]
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    trunc = batch.fraction(K.HORIZON)
    return MCEstimate(mean, se, n, trunc, bias_warning=(trunc > BIAS_TRUNCATION and batch.meta["q"] == 0),
                      escaped_fraction=batch.fraction(K.ESCAPED))


def estimate(model: LevyModel, query: ExitQuery, n_paths: int, seed: int, workers: int | None = None,
             horizon: float | None = None, step: float | None = None,
             killing: str = "discount") -> MCEstimate:
    """MC estimate of ``query``; ``killing='explicit'`` replaces the discount by an Exp(q) clock."""
    if query.identity not in IDENTITIES:
        raise UnknownIdentity(query.identity)
    if n_paths < 1000:
        raise DomainError("n_paths must be at least 1000")
    if query.identity == "total_dividends_rate" and query.q != 0:
        raise DomainError("total dividends are simulated with q = 0")
    barriers, fname = plan(query)
    x = query.a if query.identity == "total_dividends_rate" else query.x
    if workers is None:
        workers = os.cpu_count() or 1
    if killing == "discount":
        batch = simulate(model, x, barriers, query.lam, query.q, n_paths, seed, workers, horizon, step)
    elif killing == "explicit":
        if fname == "dividends":
            raise DomainError("explicit killing is not defined for the dividend functional")
        batch = simulate(model, x, barriers, query.lam, 0.0, n_paths, seed, workers, horizon, step,
                         kill_rate=query.q)
    else:
        raise DomainError(f"unknown killing mode {killing!r}")
    return summarize(functional(batch, fname, query), batch)


def overshoot_samples(model: LevyModel, x: float, a: float, lam: float, n_paths: int, seed: int,
                      workers: int = 1) -> np.ndarray:
    """X(T_a^+) - a for paths detected above a (q = 0, no lower barrier)."""
    batch = simulate(model, x, Barriers(a, "none", "poisson"), lam, 0.0, n_paths, seed, workers)
    sel = batch.kind == K.DETECTED_UP
    return batch.exit_level[sel] - a


def total_dividend_samples(model: LevyModel, a: float, lam: float, n_paths: int, seed: int,
                           workers: int = 1) -> tuple[np.ndarray, float]:
    """R(T_0^-) from x = a under the barrier strategy (q = 0), and the truncated fraction."""
    batch = simulate(model, a, Barriers(a, "poisson", "none", reflect_at="a"), lam, 0.0, n_paths, seed,
                     workers)
    sel = batch.kind == K.DETECTED_RUIN
    return batch.regulator[sel], batch.fraction(K.HORIZON)


def occupation_transform(model: LevyModel, x: float, a: float, theta: float, lam: float, q: float,
                         n_paths: int, seed: int, workers: int = 1, step: float | None = None) -> MCEstimate:
    """E_x(e^{-q tau_0^- - lam int_0^{tau_0^-} 1{X > a} dt + theta X(tau_0^-)}; tau_0^- < inf)."""
    barriers = Barriers(a, "continuous", "none", track_occupation=True)
    batch = simulate(model, x, barriers, math.inf, q, n_paths, seed, workers, step=step)
    ruin = batch.kind == K.CONTINUOUS_RUIN
    with np.errstate(over="ignore"):
        v = np.where(ruin, np.exp(-q * batch.exit_time - lam * batch.occupation
                                  + theta * np.minimum(batch.exit_level, 0.0)), 0.0)
    return summarize(v, batch)
