import math

import numpy as np
import pytest

from pssmp import bessel, lamperti, levy
from pssmp.errors import DomainError, HorizonError, ModelError
from pssmp.paths import SamplePath
from pssmp.rng import stream
from pssmp.stats import ks_two_sample


BROWNIAN = levy.brownian_drift(0.5)


def flat_path(horizon=3.0, n=7):
    return SamplePath(np.linspace(0.0, horizon, n), np.zeros(n))


def linear_path(horizon=2.0, step=1e-3, slope=1.0):
    t = np.arange(0.0, horizon + step / 2, step)
    return SamplePath(t, slope * t)


def test_exp_functional_flat():
    assert lamperti.exp_functional_partial(flat_path(), 2.0) == pytest.approx(2.0)


def test_exp_functional_decaying_drift():
    p = linear_path(horizon=30.0, step=1e-3, slope=-1.0)
    val = lamperti.exp_functional_partial(p, 30.0)
    assert val == pytest.approx(1.0, abs=2e-3)  # integral of e^-s tends to 1


def test_exp_functional_rising_drift():
    p = linear_path(horizon=1.0, step=1e-4, slope=1.0)
    val = lamperti.exp_functional_partial(p, 1.0)
    assert val == pytest.approx(math.e - 1.0, abs=2e-4)


def test_time_change_flat_and_zero():
    p = flat_path()
    assert lamperti.time_change_tau(p, 2.5) == pytest.approx(2.5)
    assert lamperti.time_change_tau(p, 0.0) == 0.0


def test_time_change_analytic_inverse():
    p = linear_path(horizon=2.0, step=1e-4, slope=1.0)
    # I_s = e^s - 1, so tau(e - 1) = 1
    assert lamperti.time_change_tau(p, math.e - 1.0) == pytest.approx(1.0, abs=2e-4)


def test_time_change_exhaustion():
    with pytest.raises(HorizonError):
        lamperti.time_change_tau(flat_path(horizon=3.0), 3.0)


def test_time_change_inverts_grid_integral():
    path = levy.sample_path(BROWNIAN, 2.0, 1e-3, seed=5)
    for s in (0.25, 1.0, 1.75):
        i_s = lamperti.exp_functional_partial(path, s)
        assert lamperti.time_change_tau(path, i_s) == pytest.approx(s, abs=1e-12)


def test_forward_constant():
    x = 5.0
    xp = lamperti.lamperti_forward(x, flat_path())
    assert np.all(xp.values == x)
    assert xp.start == x


def test_forward_analytic_linear():
    p = linear_path(horizon=2.0, step=1e-4, slope=1.0)
    xp = lamperti.lamperti_forward(1.0, p)
    # X_t = 1 + t
    np.testing.assert_allclose(xp.values, 1.0 + xp.times, rtol=2e-4)


def test_forward_positivity_and_rejects():
    path = levy.sample_path(BROWNIAN, 1.0, 1e-3, seed=8)
    xp = lamperti.lamperti_forward(0.1, path)
    assert np.all(xp.values > 0)
    with pytest.raises(DomainError):
        lamperti.lamperti_forward(0.0, path)


def test_inverse_constant_and_linear():
    xp = lamperti.lamperti_forward(2.0, flat_path())
    rec = lamperti.lamperti_inverse(xp)
    assert np.all(rec.values == 0.0)
    p = linear_path(horizon=1.0, step=1e-4, slope=1.0)
    rec2 = lamperti.lamperti_inverse(lamperti.lamperti_forward(1.0, p))
    np.testing.assert_allclose(rec2.values, p.values, atol=1e-12)


def test_round_trip_reproduces_driver():
    for seed in range(5):
        xi = levy.sample_path(BROWNIAN, 2.0, 1e-3, seed=seed)
        rec = lamperti.lamperti_inverse(lamperti.lamperti_forward(1.0, xi))
        assert np.max(np.abs(rec.values - xi.values)) <= 1e-10
        np.testing.assert_allclose(rec.times, xi.times, atol=1e-12)


def test_scaling_property_marginals():
    # k * X^(x)_{t/k} at time t equals X^(kx)_t in law (alpha = 1)
    from pssmp import engine

    k, t = 2.0, 0.5
    rng1 = stream(404, "lamperti")
    rng2 = stream(505, "lamperti")
    a = k * engine.lamperti_marginal(BROWNIAN, 1.0, t / k, 2e-4, 4000, rng1)
    b = engine.lamperti_marginal(BROWNIAN, k * 1.0, t, 2e-4, 4000, rng2)
    _, p = ks_two_sample(a, b)
    assert p > 0.01


def test_monotone_coupling_drift_only():
    m = levy.brownian_drift(1.0, sigma=0.0)
    xi = levy.sample_path(m, 1.0, 1e-2, seed=1)
    lo = lamperti.lamperti_forward(1.0, xi)
    hi = lamperti.lamperti_forward(2.0, xi)
    t_common = min(lo.horizon, hi.horizon)
    ts = np.linspace(0, t_common, 50)
    assert all(hi.value_at(t) >= lo.value_at(t) for t in ts)


def test_construct_drift_only_is_identity():
    m = levy.brownian_drift(0.5, sigma=0.0)  # xi_u = u, X^(x) = x + t
    xp = lamperti.construct_from_zero(m, horizon=1.0, seed=0, step=1e-3)
    assert xp.value_at(0.0) == 0.0
    ts = np.linspace(0.05, 0.95, 10)
    for t in ts:
        assert xp.value_at(t) == pytest.approx(t, abs=2e-3)


def test_construct_starts_at_zero():
    xp = lamperti.construct_from_zero(BROWNIAN, horizon=0.5, seed=11, step=1e-3)
    assert xp.values[0] == 0.0
    assert xp.times[0] == 0.0


def test_construct_rejects_positive_jumps():
    with pytest.raises(ModelError):
        lamperti.construct_from_zero(levy.unit_poisson(), horizon=1.0, seed=0)


def test_construct_entrance_matches_besq():
    # marginal at t=1 agrees with the exact BESQ(3) entrance law
    n = 3000
    vals = np.empty(n)
    for i in range(n):
        xp = lamperti.construct_from_zero(
            BROWNIAN, levels=lamperti.default_levels(25), horizon=1.0, seed=9_000 + i,
            step=2e-3,
        )
        vals[i] = xp.value_at(1.0 - 1e-9)
    exact = bessel.besq_transition_sample(
        bessel.BesqParams(3.0), 0.0, 1.0, stream(3131, "bessel"), n
    )
    _, p = ks_two_sample(vals, exact)
    assert p > 0.01


def test_entrance_law_trivial_cases():
    est, se = lamperti.entrance_law_estimate(
        BROWNIAN, 1.0, lambda y: np.zeros_like(y), 500, seed=1, step=2e-3
    )
    assert est == 0.0 and se == 0.0
    # drift-only with m=1: I = 1 deterministically, f(y)=y gives t
    m = levy.brownian_drift(0.5, sigma=0.0)
    t = 0.7
    est2, _ = lamperti.entrance_law_estimate(m, t, lambda y: y, 50, seed=2, step=1e-3)
    assert est2 == pytest.approx(t, rel=5e-3)


def test_entrance_law_needs_positive_mean():
    with pytest.raises(ModelError):
        lamperti.entrance_law_estimate(
            levy.spectrally_negative_stable(1.5), 1.0, lambda y: y, 10, seed=0
        )
