import numpy as np
import pytest

from mtebounds import EngineConfig, TargetSpec, bounds
from mtebounds.continuous import (ContinuousConfig, ContinuousSample, assemble_continuous,
                                  bounds_continuous, mtr_from_cdf, read_sample_csv,
                                  sample_from_distribution)
from mtebounds.continuous import _constraints
from mtebounds.errors import CapacityError, ConfigurationError, DataError

ATE = TargetSpec("ATE")


def beta_sample(n, seed):
    """Outcome in (0, 1) whose law shifts with treatment and with u."""
    rng = np.random.default_rng(seed)
    z = rng.integers(0, 2, n)
    u = rng.random(n)
    d = (u <= np.array([0.3, 0.7])[z]).astype(int)
    y = rng.beta(2 + 2 * d, 2 + 2 * u)
    return ContinuousSample.from_arrays(y, d, z)


@pytest.fixture(scope="module")
def binary_sample(pop):
    return sample_from_distribution(pop)


@pytest.mark.parametrize("use_w", [False, True])
def test_binary_outcome_matches_latent_engine(pop, binary_sample, use_w):
    cont = bounds_continuous(binary_sample, ATE, ContinuousConfig(K_y=1, K_u=50, use_w=use_w))
    latent = bounds(pop, ATE, EngineConfig(K=50, use_w=use_w))
    assert cont.diagnostics["mode"] == "discrete"
    assert abs(cont.lower - latent.lower) < 0.02
    assert abs(cont.upper - latent.upper) < 0.02


def test_binary_outcome_small_k_agrees_exactly(pop, binary_sample):
    cont = bounds_continuous(binary_sample, ATE, ContinuousConfig(K_y=1, K_u=6))
    latent = bounds(pop, ATE, EngineConfig(K=6))
    assert cont.lower == pytest.approx(latent.lower, abs=1e-7)
    assert cont.upper == pytest.approx(latent.upper, abs=1e-7)


def test_degenerate_outcome():
    rng = np.random.default_rng(0)
    n = 400
    z = rng.integers(0, 2, n)
    d = (rng.random(n) <= np.array([0.3, 0.7])[z]).astype(int)
    r = bounds_continuous(ContinuousSample.from_arrays(np.full(n, 0.5), d, z), ATE, ContinuousConfig(K=5))
    assert r.contains(0.0, 1e-9)
    assert r.width < 0.05


def test_k1_and_ordering(binary_sample):
    r = bounds_continuous(binary_sample, ATE, ContinuousConfig(K=1))
    assert np.isfinite(r.lower) and np.isfinite(r.upper)
    assert r.lower <= r.upper
    # with K_y = 1 every corner of a continuous-mode CDF is pinned, so both
    # marginals are uniform; only a loose tolerance admits the Beta sample
    s = beta_sample(500, 1)
    assert bounds_continuous(s, ATE, ContinuousConfig(K=1, eta=0.05)).refuted
    r = bounds_continuous(s, ATE, ContinuousConfig(K=1, eta=0.3))
    assert np.isfinite(r.lower) and np.isfinite(r.upper)
    assert -1.0 <= r.lower <= r.upper <= 1.0


def test_slack_and_degree_monotone():
    s = beta_sample(1500, 2)
    by_eta = [bounds_continuous(s, ATE, ContinuousConfig(K=4, eta=e)) for e in (0.05, 0.08, 0.12)]
    for a, b in zip(by_eta, by_eta[1:]):
        assert b.lower <= a.lower + 1e-7 and a.upper <= b.upper + 1e-7
    by_k = [bounds_continuous(s, ATE, ContinuousConfig(K_y=3, K_u=k, eta=0.08)) for k in (2, 3, 5)]
    for a, b in zip(by_k, by_k[1:]):
        assert b.lower <= a.lower + 1e-7 and a.upper <= b.upper + 1e-7


def test_noisy_sample_needs_slack():
    s = beta_sample(2000, 3)
    assert bounds_continuous(s, ATE, ContinuousConfig(K=5)).refuted
    loose = bounds_continuous(s, ATE, ContinuousConfig(K=5, eta=0.05))
    assert not loose.refuted
    assert loose.diagnostics["mode"] == "continuous"


def test_mtr_from_analytic_cdf():
    # F(y | u) = (1 - u) y + u y^2 has exact Bernstein coefficients, and
    # m(u) = 1 - int F dy = 1/2 + u/6
    s = beta_sample(300, 4)
    cfg = ContinuousConfig(K_y=4, K_u=3, y_mode="continuous")
    prog = _constraints(s, cfg)
    Ky, Ku = cfg.ky, cfg.ku
    k = np.arange(Ky + 1)
    lin, quad = k / Ky, k * (k - 1) / (Ky * (Ky - 1))
    theta = np.zeros(prog.shape)
    for ku in range(Ku + 1):
        t = ku / Ku
        theta[0, 0, :, Ky, ku] = (1 - t) * lin + t * quad
    u = np.linspace(0.0, 1.0, 9)
    assert np.allclose(mtr_from_cdf(theta.ravel(), prog, 1, 0, 0, u), 0.5 + u / 6, atol=1e-6)


def test_solutions_are_monotone_cdfs():
    s = beta_sample(800, 5)
    cfg = ContinuousConfig(K=3, eta=0.08)
    r = bounds_continuous(s, ATE, cfg)
    prog = _constraints(s, cfg)
    for theta in (r.argmax, r.argmin):
        th = theta.reshape(prog.shape)
        assert np.all(th >= -1e-9) and np.all(th <= 1 + 1e-9)
        assert np.all(np.diff(th, axis=2) >= -1e-9)
        assert np.all(np.diff(th, axis=3) >= -1e-9)
        assert np.allclose(th[:, :, -1, -1, :], 1.0)


def test_capacity_and_config():
    with pytest.raises(CapacityError):
        ContinuousConfig(K=13)
    with pytest.raises(CapacityError):
        ContinuousConfig(K_y=12, K_u=20)
    ContinuousConfig(K_y=1, K_u=50)
    with pytest.raises(ConfigurationError):
        ContinuousConfig(y_mode="other")
    with pytest.raises(ConfigurationError):
        ContinuousConfig(eta=-1)


def test_sample_validation():
    with pytest.raises(DataError):
        ContinuousSample.from_arrays([0.2, 1.5], [0, 1], [0, 1])
    with pytest.raises(DataError):
        ContinuousSample.from_arrays([0.2, 0.5], [0, 2], [0, 1])
    with pytest.raises(DataError):
        ContinuousSample.from_arrays([], [], [])
    # every unit treated in z=1: propensity 1
    s = ContinuousSample.from_arrays([0.2, 0.4, 0.6, 0.8], [0, 1, 1, 1], [0, 0, 1, 1])
    with pytest.raises(DataError):
        bounds_continuous(s, ATE, ContinuousConfig(K=2))


def test_read_sample_csv(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("outcome,treat,inst,wt\n0.25,1,0,1\n0.5,0,1,2\n0.75,1,1,1\n0.1,0,0,1\n")
    s = read_sample_csv(path, y="outcome", d="treat", z="inst", weight="wt")
    assert np.allclose(s.y, [0.25, 0.5, 0.75, 0.1])
    assert s.weights.tolist() == [1, 2, 1, 1]
    assert s.shape == (2, 1, 1)
    with pytest.raises(DataError, match="missing required column"):
        read_sample_csv(path, y="nope", d="treat", z="inst")
    bad = tmp_path / "bad.csv"
    bad.write_text("y,d,z\n0.1,1,0\nabc,0,1\n")
    with pytest.raises(DataError, match="row 3"):
        read_sample_csv(bad)


def test_assemble_shapes():
    s = beta_sample(200, 6)
    mx, mn = assemble_continuous(s, ContinuousConfig(K_y=3, K_u=2))
    assert mx.n == (3 + 1) ** 2 * (2 + 1)
    assert mx.sense == "max" and mn.sense == "min"
