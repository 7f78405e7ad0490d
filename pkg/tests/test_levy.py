import math

import numpy as np
import pytest

from pssmp import levy
from pssmp.errors import DomainError, ModelError
from pssmp.rng import stream


BROWNIAN = levy.brownian_drift(0.5)


def test_laplace_exponent_at_zero_is_zero():
    for model in (BROWNIAN, levy.spectrally_negative_stable(1.5), levy.unit_poisson()):
        assert levy.laplace_exponent(model, 0.0) == 0.0


def test_laplace_exponent_stable_unit():
    m = levy.spectrally_negative_stable(1.5)
    assert levy.laplace_exponent(m, 1.0) == 1.0


def test_laplace_exponent_brownian_mgf():
    # xi_1 ~ Normal(2a, 4): E e^{u xi_1} = exp(2au + 2u^2)
    assert levy.laplace_exponent(BROWNIAN, 1.0) == pytest.approx(3.0, rel=1e-14)
    a, u = 0.3, 1.7
    m = levy.brownian_drift(a)
    mgf = math.exp(2 * a * u + 2 * u * u)
    assert math.exp(levy.laplace_exponent(m, u)) == pytest.approx(mgf, rel=1e-12)


def test_laplace_exponent_rejects():
    with pytest.raises(DomainError):
        levy.laplace_exponent(BROWNIAN, -0.1)
    with pytest.raises(ModelError):
        levy.laplace_exponent(levy.stable_subordinator(0.5), 1.0)


def test_subordinator_exponent():
    assert levy.subordinator_exponent(levy.stable_subordinator(0.5), 4.0) == 2.0
    assert levy.subordinator_exponent(levy.unit_poisson(), 1.0) == pytest.approx(
        1 - math.exp(-1)
    )


def test_model_flags():
    assert not BROWNIAN.has_positive_jumps and BROWNIAN.laplace_ok
    assert BROWNIAN.m == 1.0
    sn = levy.spectrally_negative_stable(1.5)
    assert not sn.has_positive_jumps and sn.m == 0.0
    sub = levy.stable_subordinator(0.5)
    assert sub.has_positive_jumps and not sub.laplace_ok and math.isinf(sub.m)
    up = levy.unit_poisson()
    assert up.has_positive_jumps and up.m == 1.0
    cpd = levy.compound_poisson_drift(2.0, levy.JumpLaw("exponential", (0.5,)), drift=0.25)
    assert cpd.m == pytest.approx(0.25 + 2.0 * 0.5)
    assert cpd.has_positive_jumps and not cpd.laplace_ok  # exponential jumps: MGF blows up


def test_drift_only_path_values():
    # a=1, sigma=0: xi_t = 2t, so values at steps of 0.5 are 0,1,2,3,4
    m = levy.brownian_drift(1.0, sigma=0.0)
    path = levy.sample_path(m, horizon=2.0, step=0.5, seed=3)
    np.testing.assert_allclose(path.values, [0, 1, 2, 3, 4], rtol=1e-12)


def test_path_starts_at_zero():
    path = levy.sample_path(levy.unit_poisson(), horizon=1.0, step=1.0, seed=9)
    assert path.values[0] == 0.0


def test_seed_determinism():
    a = levy.sample_path(BROWNIAN, 1.0, 1e-2, seed=77)
    b = levy.sample_path(BROWNIAN, 1.0, 1e-2, seed=77)
    np.testing.assert_array_equal(a.values, b.values)
    c = levy.sample_path(BROWNIAN, 1.0, 1e-2, seed=78)
    assert not np.array_equal(a.values, c.values)


def test_variance_normalization():
    # Var(xi_1) = 4 sigma^2; check via 10^4 one-step draws
    rng = stream(12, "levy")
    inc = levy.sample_increments(levy.brownian_drift(0.0), 1.0, 10_000, rng)
    var = inc.var(ddof=1)
    se = 4.0 * math.sqrt(2.0 / 9999)
    assert abs(var - 4.0) < 3 * se


def test_increment_stationarity_ks():
    # disjoint windows of the same path have the same increment law
    from pssmp.stats import ks_two_sample

    path = levy.sample_path(BROWNIAN, horizon=20.0, step=1e-3, seed=31)
    inc = np.diff(path.values)
    _, p = ks_two_sample(inc[:10_000], inc[10_000:20_000])
    assert p > 0.01


def test_psi_convexity():
    us = np.linspace(0.0, 4.0, 17)
    for model in (BROWNIAN, levy.spectrally_negative_stable(1.7), levy.unit_poisson()):
        psi = [levy.laplace_exponent(model, float(u)) for u in us]
        for i in range(len(us) - 2):
            assert psi[i + 1] <= 0.5 * (psi[i] + psi[i + 2]) + 1e-12


def test_stable_increment_laplace_transform():
    # E e^{u xi_dt} = exp(dt u^alpha) for the spectrally negative stable
    alpha, dt, u = 1.5, 0.3, 0.8
    rng = stream(21, "levy")
    inc = levy.sample_increments(levy.spectrally_negative_stable(alpha), dt, 200_000, rng)
    emp = np.exp(u * inc).mean()
    exact = math.exp(dt * u**alpha)
    se = np.exp(u * inc).std() / math.sqrt(inc.size)
    assert abs(emp - exact) < 4 * se


def test_subordinator_increment_laplace_transform():
    alpha, dt, u = 0.5, 0.4, 1.3
    rng = stream(22, "levy")
    inc = levy.sample_increments(levy.stable_subordinator(alpha), dt, 200_000, rng)
    assert np.all(inc > 0)
    emp = np.exp(-u * inc).mean()
    exact = math.exp(-dt * u**alpha)
    se = np.exp(-u * inc).std() / math.sqrt(inc.size)
    assert abs(emp - exact) < 4 * se


def test_scale_function_closed_forms():
    # psi(lam) = lam^2 (alpha = 2): W(x) = x
    m2 = levy.spectrally_negative_stable(2.0)
    assert levy.scale_function_W(m2, 1.0) == pytest.approx(1.0)
    # Brownian a=0.5: W(x) = 1 - e^{-x/2}
    assert levy.scale_function_W(BROWNIAN, 1.0) == pytest.approx(1 - math.exp(-0.5), rel=1e-12)
    assert levy.scale_function_W(BROWNIAN, 0.0) == 0.0
    assert levy.W_infinity(BROWNIAN) == pytest.approx(1.0)


def test_scale_function_numeric_inversion():
    xs = np.geomspace(0.01, 10.0, 25)
    for model in (BROWNIAN, levy.brownian_drift(1.0, sigma=0.7)):
        for x in xs:
            num = levy.scale_function_W_numeric(model, float(x))
            exact = levy.scale_function_W(model, float(x))
            assert abs(num / exact - 1.0) < 1e-6


def test_scale_function_monotone():
    xs = np.linspace(0.0, 5.0, 40)
    w = [levy.scale_function_W(BROWNIAN, float(x)) for x in xs]
    assert np.all(np.diff(w) >= 0)


def test_scale_function_rejects_positive_jumps():
    with pytest.raises(ModelError):
        levy.scale_function_W(levy.unit_poisson(), 1.0)


def test_first_passage_levy():
    m = levy.brownian_drift(1.0, sigma=0.0)  # xi_t = 2t
    path = levy.sample_path(m, horizon=2.0, step=1e-2, seed=0)
    assert levy.first_passage_levy(path, 1.0) == pytest.approx(0.5)
    assert levy.first_passage_levy(path, 0.0) == 0.0
    assert levy.first_passage_levy(path, 100.0) is None


def test_first_passage_wald_identity():
    # E T_1 = 1/m for spectrally negative models, via the batch engine
    from pssmp import engine

    rng = stream(42, "levy")
    res = engine.passage_up_functional(BROWNIAN, 1.0, 1e-3, 20_000, rng)
    se = res.times.std(ddof=1) / math.sqrt(res.times.size)
    assert abs(res.times.mean() - 1.0) < 3 * se


def test_jump_refinement_grid():
    m = levy.compound_poisson_drift(3.0, levy.JumpLaw("constant", (1.0,)), drift=0.5)
    path = levy.sample_path(m, horizon=2.0, step=0.25, seed=123, jump_refinement=True)
    # piecewise-linear between jumps: value = drift*t + #jumps
    jumps = path.values - 0.5 * path.times
    assert np.all(np.diff(jumps) >= -1e-12)
    assert np.allclose(jumps, np.round(jumps))
