import math

import numpy as np
import pytest

import annealab as al
from annealab.schedule import GemanParams


def centered_difference(schedule, s, ds=1e-6):
    return (schedule.beta(s + ds) - schedule.beta(s - ds)) / (2 * ds)


def test_linear_examples():
    sched = al.LinearSchedule(tau=10.0, beta_max=30.0, beta0=0.1, beta1=2.0)
    assert sched.beta(0.5) == pytest.approx(1.05)
    assert sched.beta(0.0) == 0.1
    for s in (0.0, 0.3, 1.0):
        assert sched.beta_dot(s) == pytest.approx(1.9)


def test_constant_schedule_has_zero_derivative():
    sched = al.constant_schedule(0.8, tau=5.0)
    assert all(sched.beta_dot(s) == 0.0 for s in np.linspace(0, 1, 7))
    assert sched.beta(0.37) == 0.8


def test_domain_error_outside_unit_interval():
    sched = al.LinearSchedule(beta0=0.0, beta1=1.0)
    with pytest.raises(ValueError):
        sched.beta(-0.01)
    with pytest.raises(ValueError):
        sched.beta_dot(1.01)


def test_cap_applies_and_zeroes_derivative():
    sched = al.LinearSchedule(tau=1.0, beta_max=1.0, beta0=0.0, beta1=2.0)
    assert sched.beta(1.0) == 1.0
    assert sched.beta_dot(0.9) == 0.0
    assert sched.beta_dot(0.1) == 2.0


@pytest.mark.parametrize("make", [
    lambda: al.LinearSchedule(tau=3.0, beta_max=50.0, beta0=0.2, beta1=4.0),
    lambda: al.GemanSchedule(tau=40.0, beta_max=50.0,
                             params=GemanParams(p=0.5, n_spins=4, eps=0.3, b=1.2)),
    lambda: al.QuenchSchedule(tau=7.0, beta_max=9.0, beta0=0.1, rate=0.5),
])
def test_analytic_derivative_matches_finite_difference(make, rng):
    sched = make()
    for s in rng.uniform(0.01, 0.99, size=100):
        expected = centered_difference(sched, float(s))
        got = sched.beta_dot(float(s))
        if got == 0.0:  # capped region
            continue
        assert got == pytest.approx(expected, rel=1e-6)


@pytest.mark.parametrize("make", [
    lambda: al.LinearSchedule(tau=1.0, beta_max=20.0, beta0=0.0, beta1=3.0),
    lambda: al.GemanSchedule(tau=100.0, beta_max=20.0,
                             params=GemanParams(p=0.4, n_spins=5, eps=0.25, b=0.8)),
    lambda: al.QuenchSchedule(tau=10.0, beta_max=8.0, beta0=0.2, rate=4.0),
    lambda: al.SampledSchedule(tau=1.0, beta_max=20.0,
                               s_samples=(0.0, 0.3, 0.7, 1.0),
                               beta_samples=(0.1, 0.5, 1.8, 2.0)),
])
def test_all_shipped_schedules_monotone(make):
    sched = make()
    betas = [sched.beta(s) for s in np.linspace(0, 1, 101)]
    assert np.all(np.diff(betas) >= -1e-12)


def test_geman_default_integration_constant_starts_at_zero():
    params = GemanParams(p=0.7, n_spins=6, eps=0.4, b=2.0, c=0.1, a=1.5)
    assert params.beta_of_t(0.0) == pytest.approx(0.0, abs=1e-12)
    assert params.cprime == pytest.approx(2 * math.exp(0.1 * 6) / math.sqrt(1.5 * math.sqrt(6)))


def test_geman_zero_crossing_with_custom_constant():
    # with cprime at half its default, beta hits zero where the power term
    # supplies the other half
    base = GemanParams(p=0.7, n_spins=6, eps=0.4, b=2.0, c=0.1, a=1.5)
    half = base.zero_crossing_cprime() / 2
    params = GemanParams(p=0.7, n_spins=6, eps=0.4, b=2.0, c=0.1, a=1.5, cprime=half)
    t = ((1 - 0.4) / (2 * 2.0) * half) ** (2.0 / (1 - 0.4))
    assert params.beta_of_t(t) == pytest.approx(0.0, abs=1e-12)


def test_geman_large_t_slope():
    params = GemanParams(p=0.5, n_spins=4, eps=0.2, b=1.0)
    ts = np.geomspace(1e6, 1e9, 40)
    betas = [params.beta_of_t(t) for t in ts]
    slope = np.polyfit(np.log(ts), betas, 1)[0]
    assert slope == pytest.approx(params.asymptotic_slope(), rel=0.01)


def test_geman_solves_its_cooling_ode_exactly(rng):
    params = GemanParams(p=0.6, n_spins=5, eps=0.35, b=0.7, c=0.05, a=2.0)
    for t in rng.uniform(0.5, 1e4, size=100):
        lhs, rhs = params.cooling_ode_sides(float(t))
        assert lhs == pytest.approx(rhs, rel=1e-8)


def test_geman_rejects_bad_parameters():
    with pytest.raises(ValueError):
        GemanParams(p=0.5, n_spins=4, eps=1.5, b=1.0)
    with pytest.raises(ValueError):
        GemanParams(p=0.5, n_spins=4, eps=0.5, b=-1.0)
    with pytest.raises(ValueError):
        GemanParams(p=0.5, n_spins=4, eps=0.5, b=1.0, cprime=-0.3)


def test_geman_term_dominance_against_direct_evaluation():
    # at large t the power term dwarfs cprime; the direct formula evaluation
    # must match a re-evaluation with the dominant term alone to first order
    params = GemanParams(p=0.5, n_spins=4, eps=0.5, b=1.0)
    t = 1e12
    power = (2 * params.b / (1 - params.eps)) * t ** ((1 - params.eps) / 2)
    direct = params.beta_of_t(t)
    dominant = (-params.c * 4 + 0.5 * math.log(params.a * 2.0) - math.log(2.0)
                + math.log(power)) / (params.p * 4)
    assert direct == pytest.approx(dominant, rel=1e-4)
    assert power / params.cprime > 1e3


def test_sampled_schedule_interpolates_nodes():
    sched = al.SampledSchedule(tau=1.0, beta_max=30.0,
                               s_samples=(0.0, 0.5, 1.0), beta_samples=(0.0, 1.0, 3.0))
    assert sched.beta(0.5) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        al.SampledSchedule(s_samples=(0.0, 0.4), beta_samples=(1.0, 0.5))


def test_schedule_from_dict_errors_name_keys():
    with pytest.raises(al.ConfigError, match="kind"):
        al.schedule_from_dict({})
    with pytest.raises(al.ConfigError, match="beta1"):
        al.schedule_from_dict({"kind": "linear", "beta0": 0.1})
    with pytest.raises(al.ConfigError, match="n_spins"):
        al.schedule_from_dict({"kind": "geman", "p": 0.5, "eps": 0.2, "b": 1.0})
    sched = al.schedule_from_dict({"kind": "linear", "beta0": 0.1, "beta1": 2.0})
    assert isinstance(sched, al.LinearSchedule)


def test_with_tau_preserves_shape():
    sched = al.LinearSchedule(tau=1.0, beta_max=30.0, beta0=0.1, beta1=2.0)
    assert sched.with_tau(50.0).tau == 50.0
    assert sched.with_tau(50.0).beta(0.5) == sched.beta(0.5)
