import math

import numpy as np
import pytest

from poisson_exit.errors import DomainError, UnknownIdentity
from poisson_exit.exit_identities import ExitQuery, evaluate
from poisson_exit.levy_model import LevyModel
from poisson_exit.simulator import (Barriers, ObservationScheme, estimate, occupation_transform,
                                    simulate, simulate_path)
from poisson_exit.simulator import kernel as K
from poisson_exit.simulator.estimate import default_horizon, escape_levels, plan

from conftest import M1, M2

CLAIM, OBS = 0, 1


def scripted(events, x0, a, c=1.0, q=0.0, horizon=10.0, y=math.inf, cont_ruin=0, cont_up=0,
             obs_ruin=0, obs_up=0, reflect=K.NO_REFLECT, occ=0):
    P = np.zeros(K.N_FPARAMS)
    P[K.P_X0], P[K.P_A], P[K.P_C], P[K.P_Q], P[K.P_HORIZON], P[K.P_Y] = x0, a, c, q, horizon, y
    P[K.P_H], P[K.P_ESCAPE], P[K.P_ESCAPE_LO] = math.inf, math.inf, -math.inf
    I = np.zeros(K.N_IPARAMS, dtype=np.int64)
    I[K.I_CONT_RUIN], I[K.I_CONT_UP], I[K.I_OBS_RUIN], I[K.I_OBS_UP] = cont_ruin, cont_up, obs_ruin, obs_up
    I[K.I_REFLECT], I[K.I_OCC], I[K.I_STOP_REG] = reflect, occ, int(math.isfinite(y))
    t = np.array([e[0] for e in events], dtype=float)
    kind = np.array([e[1] for e in events], dtype=np.int64)
    size = np.array([e[2] if len(e) > 2 else 0.0 for e in events], dtype=float)
    out = np.zeros(K.N_STATE)
    k = K.simulate_scripted(t, kind, size, P, I, out)
    return k, out


# -- exact piecewise-linear logic on hand-built paths -------------------------


def test_scripted_continuous_up_crossing_time():
    # 1 -> 1.5 at t=.5, claim .3 -> 1.2, reaches 2 at t = .5 + .8
    k, s = scripted([(0.5, CLAIM, 0.3), (5.0, OBS)], 1.0, 2.0, cont_up=1)
    assert k == K.CONTINUOUS_UP
    assert s[K.S_EXIT_T] == pytest.approx(1.3, abs=1e-14)
    assert s[K.S_EXIT_X] == 2.0


def test_scripted_detection_only_at_observations():
    # starts below 0; observation at .3 sees -0.2 -> detected
    k, s = scripted([(0.3, OBS)], -0.5, 5.0, obs_ruin=1)
    assert k == K.DETECTED_RUIN
    assert s[K.S_EXIT_T] == 0.3 and s[K.S_EXIT_X] == pytest.approx(-0.2)
    # first observation at .6 sees +0.1: recovered before detection
    k, s = scripted([(0.6, OBS)], -0.5, 5.0, obs_ruin=1, horizon=1.0)
    assert k == K.HORIZON


def test_scripted_detected_overshoot_exact_level():
    k, s = scripted([(0.4, CLAIM, 0.1), (1.5, OBS)], 0.5, 1.0, obs_up=1)
    assert k == K.DETECTED_UP
    assert s[K.S_EXIT_X] == pytest.approx(0.5 + 1.5 - 0.1)


def test_scripted_reflection_at_upper_barrier():
    # starts at the barrier: R grows at rate c until the claim at t=1 (R=1), X=1.5,
    # back at a at t=1.5, claim of 1 at t=2 (R += .5) leaves X=1, which reaches a again at t=3.
    ev = [(1.0, CLAIM, 0.5), (2.0, CLAIM, 1.0)]
    k, s = scripted(ev, 2.0, 2.0, reflect=K.REFLECT_UPPER, horizon=3.0)
    assert k == K.HORIZON
    assert s[K.S_R] == pytest.approx(1.5, abs=1e-14)
    assert s[K.S_X] == pytest.approx(2.0)
    assert s[K.S_DREG] == pytest.approx(1.5)
    q = 0.2
    k, s = scripted(ev, 2.0, 2.0, reflect=K.REFLECT_UPPER, horizon=3.0, q=q)
    want = (1 - math.exp(-q)) / q + (math.exp(-1.5 * q) - math.exp(-2 * q)) / q
    assert s[K.S_DREG] == pytest.approx(want, rel=1e-13)


def test_scripted_regulator_passage_time():
    ev = [(1.0, CLAIM, 0.5), (2.0, CLAIM, 1.0)]
    k, s = scripted(ev, 2.0, 2.0, reflect=K.REFLECT_UPPER, horizon=3.0, y=1.2)
    assert k == K.REGULATOR_PASSAGE
    assert s[K.S_EXIT_T] == pytest.approx(1.7, abs=1e-14)
    assert s[K.S_R] == 1.2


def test_scripted_reflection_at_zero():
    k, s = scripted([(0.5, CLAIM, 1.0), (5.0, OBS)], 0.2, 3.0, reflect=K.REFLECT_LOWER, obs_up=1)
    assert s[K.S_R] == pytest.approx(0.3)
    assert k == K.DETECTED_UP and s[K.S_EXIT_X] == pytest.approx(4.5)


def test_scripted_occupation_time():
    # 1 -> 2 on [0,1] (above 1.5 for .5), claim 1 -> 1, 1 -> 2 on [1,2] (another .5)
    k, s = scripted([(1.0, CLAIM, 1.0)], 1.0, 1.5, occ=1, horizon=2.0)
    assert s[K.S_OCC] == pytest.approx(1.0, abs=1e-14)


def test_scripted_continuous_ruin_at_claim():
    k, s = scripted([(0.5, CLAIM, 2.0)], 1.0, 5.0, cont_ruin=1)
    assert k == K.CONTINUOUS_RUIN
    assert s[K.S_EXIT_T] == 0.5 and s[K.S_EXIT_X] == pytest.approx(-0.5)


# -- random paths ---------------------------------------------------------------


def test_outcome_invariants():
    b = simulate(M1, 1.0, Barriers(2.0, "poisson", "poisson"), 1.5, 0.05, 20_000, seed=3)
    det_r = b.kind == K.DETECTED_RUIN
    det_u = b.kind == K.DETECTED_UP
    assert np.all(b.exit_level[det_r] < 0)
    assert np.all(b.exit_level[det_u] > 2.0)
    assert np.all(b.regulator == 0)
    assert det_r.any() and det_u.any()


def test_simulate_path_matches_batch():
    bar = Barriers(2.0, "continuous", "poisson")
    b = simulate(M1, 1.0, bar, 1.5, 0.05, 50, seed=9)
    for i in (0, 17, 49):
        p = simulate_path(M1, ObservationScheme(1.5), bar, b.horizon, 0.05, (9, i), x=1.0)
        assert p.exit_time == b.exit_time[i] and p.exit_level == b.exit_level[i]
        assert p.exit_kind == K.KIND_NAMES[int(b.kind[i])]
        assert p.discount_weight == pytest.approx(math.exp(-0.05 * p.exit_time))


def test_observation_scheme_validation():
    with pytest.raises(DomainError):
        ObservationScheme(math.inf, "poisson")
    with pytest.raises(DomainError):
        ObservationScheme(1.0, "sometimes")
    with pytest.raises(DomainError):
        Barriers(math.inf, "none", "poisson")


@pytest.mark.parametrize("workers", [1, 4, 16])
def test_worker_count_does_not_change_results(workers):
    bar = Barriers(3.0, "continuous", "poisson")
    ref = simulate(M1, 1.0, bar, 2.0, 0.05, 70_001, seed=123, workers=1)
    got = simulate(M1, 1.0, bar, 2.0, 0.05, 70_001, seed=123, workers=workers)
    for f in ("kind", "exit_time", "exit_level", "regulator"):
        assert getattr(ref, f).tobytes() == getattr(got, f).tobytes()


def test_certain_event_is_exact():
    e = estimate(M1, ExitQuery("up_prob_continuous", x=2.0, a=2.0), 5000, seed=1)
    assert e.mean == 1.0 and e.std_error == 0.0


def test_estimate_m2_spec_case():
    q = ExitQuery("up_before_poisson_ruin", x=0.0, a=1.0, lam=2.0)
    e = estimate(M2, q, 200_000, seed=5)
    assert abs(e.z_score(evaluate(M2, q))) < 4


def test_discount_equals_explicit_killing():
    q = ExitQuery("poisson_up_before_ruin", x=1.0, a=2.0, theta=0.5, lam=2.0, q=0.3)
    d = estimate(M1, q, 100_000, seed=2, killing="discount")
    k = estimate(M1, q, 100_000, seed=3, killing="explicit")
    assert abs(d.mean - k.mean) < 3 * math.hypot(d.std_error, k.std_error)
    assert d.std_error < k.std_error


@pytest.mark.parametrize("ident,kw", [
    ("poisson_overshoot", dict(x=0.0, a=2.0, theta=1.0, lam=2.0, q=0.05)),
    ("ruin_before_poisson_up", dict(x=1.0, a=3.0, theta=0.5, lam=1.0)),
    ("poisson_deficit_before_poisson_up", dict(x=1.0, a=4.0, theta=0.3, lam=0.5, q=0.05)),
    ("regulator_passage", dict(x=2.0, a=2.0, y=1.0, lam=1.0)),
    ("reflected_ruin", dict(x=0.5, a=1.0, lam=2.0)),
])
def test_m1_examples_agree(ident, kw):
    q = ExitQuery(ident, **kw)
    e = estimate(M1, q, 100_000, seed=17)
    assert abs(e.z_score(evaluate(M1, q))) < 4


def test_brownian_substeps_two_sided():
    q = ExitQuery("up_prob_continuous", x=0.5, a=1.0, q=0.05)
    exact = evaluate(M2, q)
    e = estimate(M2, q, 50_000, seed=4, step=1e-3)
    assert abs(e.mean - exact) < 4 * e.std_error + 2e-3


def test_brownian_step_convergence():
    # the bridge-sampled substep scheme stays close to the exact value as h shrinks
    q = ExitQuery("reflected_ruin", x=0.5, a=1.0, lam=2.0, q=0.1, vartheta=0.2)
    exact = evaluate(M2, q)
    errs = []
    for h in (1e-1, 1e-2):
        e = estimate(M2, q, 40_000, seed=8, step=h)
        errs.append(abs(e.mean - exact) / e.std_error)
    assert errs[-1] < 4


def test_occupation_transform_matches_identity():
    q = ExitQuery("ruin_before_poisson_up", x=1.0, a=2.0, theta=0.5, lam=1.0, q=0.05)
    e = occupation_transform(M1, 1.0, 2.0, 0.5, 1.0, 0.05, 100_000, seed=6)
    assert abs(e.z_score(evaluate(M1, q))) < 4


def test_truncation_reporting():
    q = ExitQuery("poisson_overshoot", x=0.0, a=2.0, lam=1.0)
    e = estimate(M1, q, 2000, seed=1, horizon=0.5)
    assert e.truncated_fraction > 0.5 and e.bias_warning


def test_horizon_and_escape_rules():
    assert default_horizon(M1, 1.0, Barriers(2.0, "poisson"), 0.05, math.inf) == pytest.approx(
        -math.log(1e-12) / 0.05)
    assert default_horizon(M1, 1.0, Barriers(2.0, "poisson"), 0.0, math.inf) == pytest.approx(1e3 * 3 / 0.2)
    hi, lo = escape_levels(M1, 1.0, Barriers(math.inf, "poisson"), 0.0)
    assert hi == pytest.approx(1.0 - math.log(1e-12) / (1 / 6))
    assert lo == -math.inf


def test_plan_covers_all_identities():
    from poisson_exit.exit_identities import IDENTITIES
    for ident in IDENTITIES:
        bar, fname = plan(ExitQuery(ident, x=0.5, a=1.0, lam=2.0))
        assert isinstance(bar, Barriers) and fname
    with pytest.raises(DomainError):
        estimate(M1, ExitQuery("poisson_overshoot", a=1.0, lam=1.0), 10, seed=1)
