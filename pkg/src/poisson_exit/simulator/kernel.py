"""Event-driven path kernel (numba).

Events are claim arrivals (rate nu), observation epochs (rate lam), an
optional explicit exponential clock and the horizon.  Between events the path
is c t + sigma B(t):

* sigma = 0: the path is linear, so continuous crossings of a, reflection at a
  and the occupation time above a are computed exactly; crossings of 0 can
  only happen at claims.
* sigma > 0: each inter-event interval is cut into substeps of length <= h;
  per substep the Gaussian endpoint is drawn exactly and the running max/min
  is drawn from the Brownian-bridge law given the endpoints.  With h = inf
  and a single continuously monitored barrier this is exact as well.
"""

import numpy as np
from numba import njit

from .rng import STATE_SIZE, next_exponential, next_normal, next_uniform, stream_init

# exit kinds
RUNNING = 0
HORIZON = 1
DETECTED_RUIN = 2
DETECTED_UP = 3
CONTINUOUS_RUIN = 4
CONTINUOUS_UP = 5
REGULATOR_PASSAGE = 6
KILLED = 7
ESCAPED = 8

KIND_NAMES = {
    HORIZON: "horizon",
    DETECTED_RUIN: "detected_ruin",
    DETECTED_UP: "detected_up",
    CONTINUOUS_RUIN: "continuous_ruin",
    CONTINUOUS_UP: "continuous_up",
    REGULATOR_PASSAGE: "regulator_passage",
    KILLED: "killed",
    ESCAPED: "escaped",
}

# reflection modes
NO_REFLECT = 0
REFLECT_LOWER = 1  # at 0 from below
REFLECT_UPPER = 2  # at a from above

# float parameter slots
(P_X0, P_A, P_C, P_SIGMA, P_NU, P_LAM, P_Q, P_HORIZON, P_Y, P_H, P_KILL, P_ESCAPE,
 P_ESCAPE_LO) = range(13)
N_FPARAMS = 13
# int parameter slots
I_CONT_RUIN, I_CONT_UP, I_OBS_RUIN, I_OBS_UP, I_REFLECT, I_OCC, I_STOP_REG = range(7)
N_IPARAMS = 7

# path state slots
S_T, S_X, S_R, S_OCC, S_DREG, S_EXIT_T, S_EXIT_X = range(7)
N_STATE = 7


@njit(cache=True, nogil=True)
def _discounted_mass(q, s0, s1):
    # int_{s0}^{s1} e^{-q u} du
    if q == 0.0:
        return s1 - s0
    return (np.exp(-q * s0) - np.exp(-q * s1)) / q


@njit(cache=True, nogil=True)
def _bridge_max(x0, x1, var, u):
    d = x1 - x0
    return 0.5 * (x0 + x1 + np.sqrt(d * d - 2.0 * var * np.log(u)))


@njit(cache=True, nogil=True)
def _bridge_min(x0, x1, var, u):
    d = x1 - x0
    return 0.5 * (x0 + x1 - np.sqrt(d * d - 2.0 * var * np.log(u)))


@njit(cache=True, nogil=True)
def _stop(s, kind, t, level):
    s[S_EXIT_T] = t
    s[S_EXIT_X] = level
    return kind


@njit(cache=True, nogil=True)
def _advance_linear(s, t1, P, I):
    """Drift-only motion from s[S_T] to t1; returns an exit kind or RUNNING."""
    t0 = s[S_T]
    dt = t1 - t0
    if dt <= 0.0:
        return RUNNING
    c = P[P_C]
    a = P[P_A]
    x = s[S_X]
    x_end = x + c * dt
    if I[I_OCC] == 1:
        if x >= a:
            s[S_OCC] += dt
        else:
            s[S_OCC] += max(0.0, dt - (a - x) / c)
    if I[I_CONT_UP] == 1 and x_end > a:
        hit = t0 + max(0.0, (a - x) / c)
        s[S_X] = a
        s[S_T] = hit
        return _stop(s, CONTINUOUS_UP, hit, a)
    if I[I_REFLECT] == REFLECT_UPPER and x_end > a:
        s_hit = t0 + max(0.0, (a - x) / c)
        d_r = x_end - a
        if I[I_STOP_REG] == 1 and s[S_R] + d_r > P[P_Y]:
            t_y = s_hit + max(0.0, (P[P_Y] - s[S_R]) / c)
            s[S_DREG] += c * _discounted_mass(P[P_Q], s_hit, t_y)
            s[S_R] = P[P_Y]
            s[S_X] = a
            s[S_T] = t_y
            return _stop(s, REGULATOR_PASSAGE, t_y, a)
        s[S_DREG] += c * _discounted_mass(P[P_Q], s_hit, t1)
        s[S_R] += d_r
        s[S_X] = a
    else:
        s[S_X] = x_end
    s[S_T] = t1
    return RUNNING


@njit(cache=True, nogil=True)
def _advance_diffusive(s, t1, P, I, st):
    """Drift plus Brownian motion from s[S_T] to t1 in bridge-sampled substeps."""
    t0 = s[S_T]
    dt = t1 - t0
    if dt <= 0.0:
        return RUNNING
    h = P[P_H]
    n = 1
    if np.isfinite(h) and dt > h:
        n = int(np.ceil(dt / h))
    dd = dt / n
    c = P[P_C]
    sig = P[P_SIGMA]
    var = sig * sig * dd
    a = P[P_A]
    q = P[P_Q]
    refl = I[I_REFLECT]
    for k in range(n):
        t_start = t0 + k * dd
        t_end = t0 + (k + 1) * dd
        if k == n - 1:
            t_end = t1
        x0 = s[S_X]
        x1 = x0 + c * dd + sig * np.sqrt(dd) * next_normal(st)
        if refl == REFLECT_UPPER:
            m_top = _bridge_max(x0, x1, var, next_uniform(st))
            d_r = max(0.0, m_top - a)
            if d_r > 0.0:
                if I[I_STOP_REG] == 1 and s[S_R] + d_r > P[P_Y]:
                    s[S_DREG] += (P[P_Y] - s[S_R]) * np.exp(-q * t_end)
                    s[S_R] = P[P_Y]
                    s[S_X] = a
                    s[S_T] = t_end
                    return _stop(s, REGULATOR_PASSAGE, t_end, a)
                s[S_DREG] += d_r * np.exp(-q * (0.5 * (t_start + t_end)))
                s[S_R] += d_r
            x_new = x1 - d_r
            if I[I_CONT_RUIN] == 1:
                if _bridge_min(x0, x_new, var, next_uniform(st)) < 0.0:
                    s[S_X] = 0.0
                    s[S_T] = t_end
                    return _stop(s, CONTINUOUS_RUIN, t_end, 0.0)
        elif refl == REFLECT_LOWER:
            m_bot = _bridge_min(x0, x1, var, next_uniform(st))
            d_r = max(0.0, -m_bot)
            s[S_R] += d_r
            x_new = x1 + d_r
            if I[I_CONT_UP] == 1:
                if _bridge_max(x0, x_new, var, next_uniform(st)) > a:
                    s[S_X] = a
                    s[S_T] = t_end
                    return _stop(s, CONTINUOUS_UP, t_end, a)
        else:
            x_new = x1
            up = False
            down = False
            m_top = 0.0
            m_bot = 0.0
            if I[I_CONT_UP] == 1:
                m_top = _bridge_max(x0, x1, var, next_uniform(st))
                up = m_top > a
            if I[I_CONT_RUIN] == 1:
                m_bot = _bridge_min(x0, x1, var, next_uniform(st))
                down = m_bot < 0.0
            if up and down:
                # both barriers inside one substep; negligible for small h
                if m_top - a >= -m_bot:
                    down = False
                else:
                    up = False
            if up:
                s[S_X] = a
                s[S_T] = t_end
                return _stop(s, CONTINUOUS_UP, t_end, a)
            if down:
                s[S_X] = 0.0
                s[S_T] = t_end
                return _stop(s, CONTINUOUS_RUIN, t_end, 0.0)
        if I[I_OCC] == 1:
            if x0 > a and x_new > a:
                s[S_OCC] += dd
            elif x0 > a or x_new > a:
                hi = max(x0, x_new)
                lo = min(x0, x_new)
                s[S_OCC] += dd * (hi - a) / (hi - lo)
        s[S_X] = x_new
        s[S_T] = t_end
    return RUNNING


@njit(cache=True, nogil=True)
def _advance(s, t1, P, I, st):
    if P[P_SIGMA] == 0.0:
        return _advance_linear(s, t1, P, I)
    return _advance_diffusive(s, t1, P, I, st)


@njit(cache=True, nogil=True)
def _apply_claim(s, size, I):
    x = s[S_X] - size
    if I[I_REFLECT] == REFLECT_LOWER and x < 0.0:
        s[S_R] += -x
        x = 0.0
    s[S_X] = x
    if I[I_CONT_RUIN] == 1 and x < 0.0:
        return _stop(s, CONTINUOUS_RUIN, s[S_T], x)
    return RUNNING


@njit(cache=True, nogil=True)
def _observe(s, P, I):
    x = s[S_X]
    if I[I_OBS_RUIN] == 1 and x < 0.0:
        return _stop(s, DETECTED_RUIN, s[S_T], x)
    if I[I_OBS_UP] == 1 and x > P[P_A]:
        return _stop(s, DETECTED_UP, s[S_T], x)
    return RUNNING


@njit(cache=True, nogil=True)
def _initial_check(s, P, I):
    x = s[S_X]
    if I[I_CONT_RUIN] == 1 and x < 0.0:
        return _stop(s, CONTINUOUS_RUIN, 0.0, x)
    if I[I_CONT_UP] == 1 and x > P[P_A]:
        return _stop(s, CONTINUOUS_UP, 0.0, x)
    return RUNNING


@njit(cache=True, nogil=True)
def _simulate_one(s, P, I, cum_w, rates, st):
    s[:] = 0.0
    s[S_X] = P[P_X0]
    kind = _initial_check(s, P, I)
    if kind != RUNNING:
        return kind
    horizon = P[P_HORIZON]
    escape = P[P_ESCAPE]
    escape_lo = P[P_ESCAPE_LO]
    t_claim = next_exponential(st, P[P_NU])
    t_obs = next_exponential(st, P[P_LAM])
    t_kill = next_exponential(st, P[P_KILL])
    n_comp = rates.shape[0]
    while True:
        t_next = min(t_claim, t_obs, t_kill, horizon)
        kind = _advance(s, t_next, P, I, st)
        if kind != RUNNING:
            return kind
        s[S_T] = t_next
        if t_next == horizon:
            return _stop(s, HORIZON, horizon, s[S_X])
        if t_next == t_kill:
            return _stop(s, KILLED, t_kill, s[S_X])
        if t_next == t_claim:
            j = 0
            if n_comp > 1:
                u = next_uniform(st)
                while j < n_comp - 1 and u > cum_w[j]:
                    j += 1
            size = next_exponential(st, rates[j])
            kind = _apply_claim(s, size, I)
            if kind != RUNNING:
                return kind
            t_claim = t_next + next_exponential(st, P[P_NU])
        else:
            kind = _observe(s, P, I)
            if kind != RUNNING:
                return kind
            t_obs = t_next + next_exponential(st, P[P_LAM])
        if s[S_X] > escape or s[S_X] < escape_lo:
            return _stop(s, ESCAPED, s[S_T], s[S_X])


@njit(cache=True, nogil=True)
def simulate_block(start, count, seed, P, I, cum_w, rates,
                   kind, exit_t, exit_x, reg, occ, dreg):
    """Simulate paths start .. start+count-1 into the output slices [0, count)."""
    st = np.zeros(STATE_SIZE, dtype=np.uint64)
    s = np.zeros(N_STATE)
    for i in range(count):
        stream_init(st, seed, start + i)
        k = _simulate_one(s, P, I, cum_w, rates, st)
        kind[i] = k
        exit_t[i] = s[S_EXIT_T]
        exit_x[i] = s[S_EXIT_X]
        reg[i] = s[S_R]
        occ[i] = s[S_OCC]
        dreg[i] = s[S_DREG]


@njit(cache=True, nogil=True)
def simulate_scripted(ev_t, ev_kind, ev_size, P, I, out):
    """Replay a fixed event list (kind 0 = claim of size ev_size, 1 = observation).

    Only for sigma = 0 models; used to check the exact piecewise-linear logic
    against hand-computed paths.  ``out`` receives the path state.
    """
    st = np.zeros(STATE_SIZE, dtype=np.uint64)
    s = np.zeros(N_STATE)
    s[S_X] = P[P_X0]
    kind = _initial_check(s, P, I)
    if kind == RUNNING:
        for e in range(ev_t.shape[0]):
            kind = _advance(s, ev_t[e], P, I, st)
            if kind != RUNNING:
                break
            s[S_T] = ev_t[e]
            if ev_kind[e] == 0:
                kind = _apply_claim(s, ev_size[e], I)
            else:
                kind = _observe(s, P, I)
            if kind != RUNNING:
                break
        if kind == RUNNING:
            kind = _advance(s, P[P_HORIZON], P, I, st)
            if kind == RUNNING:
                s[S_T] = P[P_HORIZON]
                kind = _stop(s, HORIZON, P[P_HORIZON], s[S_X])
    out[:] = s
    return kind
