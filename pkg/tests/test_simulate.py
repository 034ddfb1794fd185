import math

import numpy as np
import pytest
from scipy.integrate import quad

from refract import fixtures
from refract.levy import ModelError
from refract.refraction import RefractionProblem
from refract.simulate import SimConfig, sample_levy, segment_dividends, simulate_value, survival_probability


@pytest.fixture(scope="module")
def hxb_problem():
    f = fixtures.HX1_BROWNIAN
    return RefractionProblem.build(f.model, f.delta, f.q)


def test_never_paying_threshold(gamma2):
    est = simulate_value(gamma2, math.inf, 3.0, SimConfig(n_paths=2000))
    assert est.mean == 0.0 and est.stderr == 0.0


def test_segment_closed_form_against_quadrature():
    rng = np.random.default_rng(5)
    c, delta, q, b = 2.5, 1.2, 0.1, 2.0
    u = rng.uniform(0, 4, 100)
    t = rng.uniform(0, 30, 100)
    dt = rng.exponential(1.0, 100)
    u_end, div = segment_dividends(u, t, dt, b, c, delta, q)
    for i in range(100):
        hit = max((b - u[i]) / c, 0.0)
        start = t[i] + min(hit, dt[i])
        ref = quad(lambda s: delta * math.exp(-q * s), start, t[i] + dt[i], epsabs=0, epsrel=1e-13)[0]
        assert abs(div[i] - ref) <= 1e-12 * max(1.0, ref)
        path_end = u[i] + c * dt[i] if hit >= dt[i] else max(u[i], b) + (c - delta) * (dt[i] - hit)
        assert u_end[i] == pytest.approx(path_end, rel=1e-14, abs=1e-14)


def test_pays_at_threshold():
    _, div = segment_dividends(np.array([2.0]), np.array([0.0]), np.array([1.0]), 2.0, 2.5, 1.2, 0.1)
    assert div[0] == pytest.approx(1.2 * (1 - math.exp(-0.1)) / 0.1, rel=1e-14)


def test_deterministic_and_worker_independent(hx1, hx1_bstar):
    cfg = SimConfig(n_paths=3000, seed=9, horizon=40.0)
    a = simulate_value(hx1, hx1_bstar.b_star, 1.0, cfg, keep_paths=True)
    b = simulate_value(hx1, hx1_bstar.b_star, 1.0, cfg, keep_paths=True)
    c = simulate_value(hx1, hx1_bstar.b_star, 1.0, SimConfig(n_paths=3000, seed=9, horizon=40.0, workers=3),
                       keep_paths=True)
    assert a.as_dict() == b.as_dict() == c.as_dict()
    assert np.array_equal(a.dividends, c.dividends)
    d = simulate_value(hx1, hx1_bstar.b_star, 1.0, SimConfig(n_paths=3000, seed=10, horizon=40.0))
    assert d.mean != a.mean


def test_env_thread_cap(monkeypatch, gamma2):
    cfg = SimConfig(n_paths=500, seed=1)
    base = simulate_value(gamma2, 0.0, 1.0, cfg)
    monkeypatch.setenv("REFRACT_THREADS", "4")
    assert simulate_value(gamma2, 0.0, 1.0, cfg).as_dict() == base.as_dict()


def test_gamma2_matches_analytic(gamma2):
    cfg = SimConfig(n_paths=100_000, seed=0, bias_tol=1e-6 * gamma2.delta / gamma2.q)
    est = simulate_value(gamma2, 0.0, 5.0, cfg)
    exact = gamma2.value_function(0.0).value(5.0)
    assert exact == pytest.approx(6.5626187994832605, rel=1e-10)
    assert abs(est.mean - exact) < 3 * est.stderr
    assert est.bias_bound <= 1e-6 * gamma2.delta / gamma2.q * (1 + 1e-9)


@pytest.mark.slow
def test_hx1_matches_analytic(hx1, hx1_bstar):
    b = hx1_bstar.b_star
    cfg = SimConfig(n_paths=100_000, seed=1, bias_tol=1e-6 * hx1.delta / hx1.q)
    est = simulate_value(hx1, b, b, cfg)
    exact = hx1.value_function(b).value(b)
    assert abs(est.mean - exact) < 3 * est.stderr
    assert est.stderr / est.mean < 0.01


def test_horizon_extension_within_bias_bound(gamma2):
    cfg = SimConfig(n_paths=20_000, seed=3, horizon=20.0)
    short = simulate_value(gamma2, 0.0, 2.0, cfg)
    long = simulate_value(gamma2, 0.0, 2.0, SimConfig(n_paths=20_000, seed=3, horizon=20.0 + 5 / gamma2.q))
    assert short.bias_bound == pytest.approx(gamma2.delta / gamma2.q * math.exp(-gamma2.q * 20.0))
    assert abs(long.mean - short.mean) < short.bias_bound + 3 * short.stderr


@pytest.mark.slow
def test_euler_halving(hxb_problem):
    p = hxb_problem
    b = p.b_star().b_star
    coarse = simulate_value(p, b, b, SimConfig(n_paths=10_000, seed=2, horizon=30.0, euler_dt=0.02))
    fine = simulate_value(p, b, b, SimConfig(n_paths=10_000, seed=2, horizon=30.0, euler_dt=0.01))
    assert abs(coarse.mean - fine.mean) < 2 * max(coarse.stderr, fine.stderr)


def test_euler_ruin_at_zero(hxb_problem):
    est = survival_probability(hxb_problem, 1.0, 0.0, SimConfig(n_paths=2000, seed=0, horizon=10.0))
    assert est.probability == 0.0


def test_survival_positive_drift(hx1, hx1_bstar):
    est = survival_probability(hx1, hx1_bstar.b_star, 25.0, SimConfig(n_paths=20_000, seed=4, horizon=100.0))
    assert est.positive_net_drift
    assert est.probability - 2.576 * est.stderr > 0


def test_survival_negative_drift_flag():
    f = fixtures.HX1
    p = RefractionProblem.build(f.model, 2.0, f.q)
    est = survival_probability(p, 0.0, 1.0, SimConfig(n_paths=5000, seed=4, horizon=200.0))
    assert not est.positive_net_drift
    assert est.probability < 0.01


def test_config_validation(gamma2):
    for bad in (dict(n_paths=0), dict(horizon=-1.0), dict(bias_tol=0.0), dict(euler_dt=0.0), dict(workers=0)):
        with pytest.raises(ModelError):
            SimConfig(**bad)
    with pytest.raises(ModelError):
        simulate_value(gamma2, 0.0, -1.0, SimConfig(n_paths=10))


def test_default_horizon():
    cfg = SimConfig(bias_tol=1e-3)
    T = cfg.resolve_horizon(1.2, 0.1)
    assert 1.2 / 0.1 * math.exp(-0.1 * T) == pytest.approx(1e-3)


def test_sample_levy_mean():
    m = fixtures.HX1_BROWNIAN.model
    x = sample_levy(m, 2.0, 100_000, seed=3)
    assert abs(x.mean() - 2.0 * m.mean) < 3 * x.std() / math.sqrt(x.size)
