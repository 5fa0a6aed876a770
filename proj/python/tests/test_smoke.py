import math

import numpy as np
import pytest

import lmiql


def test_pendulum_step_at_rest():
    cfg = lmiql.PendulumConfig()
    x = lmiql.pendulum_step(cfg, np.zeros(2), np.zeros(1), np.zeros(2))
    assert np.array_equal(x, np.zeros(2))


def test_wrap_angle():
    assert lmiql.wrap_angle(math.pi) == pytest.approx(-math.pi)
    assert lmiql.wrap_angle(0.5) == 0.5


def test_reward_is_negative_quadratic():
    r = lmiql.reward(np.diag([1.0, 0.1, 0.001]), np.array([1.0, 0.0]), np.array([0.0]))
    assert r == pytest.approx(-1.0)


def test_dare_golden_ratio():
    one = np.ones((1, 1))
    sol = lmiql.solve_dare(one, one, one, one, 1.0)
    assert sol.P[0, 0] == pytest.approx((1 + math.sqrt(5)) / 2, abs=1e-8)


def test_qparams_round_trip():
    theta = np.arange(15, dtype=float)
    p = lmiql.QParams.from_vector(theta, 3, 1)
    assert np.array_equal(p.to_vector(), theta)


def test_dataset_is_deterministic_and_prefix_stable():
    a = lmiql.generate_data(n=30, seed=4)
    b = lmiql.generate_data(n=10, seed=4)
    assert len(a) == 30
    assert np.array_equal(a.prefix(10).X, b.X)
    back = lmiql.Dataset.from_text(a.to_text())
    assert np.array_equal(back.R, a.R)


def test_linear_training_recovers_lqr_gain():
    cfg = lmiql.default_config("linear")
    data = lmiql.generate_data(cfg, n=100, seed=1)
    one = np.eye(1)
    A = np.array(cfg["linear"]["A"])
    B = np.array(cfg["linear"]["B"])
    K = lmiql.solve_dare(A, B, np.eye(2), one, cfg["gamma"]).K
    for method in ("lmi-ql", "lmi-qli", "lspi"):
        res = lmiql.train(data, method, cfg)
        assert np.max(np.abs(np.array(res["policy"]["gain"]) + K)) < 1e-2, method
        reward, diverged = lmiql.evaluate(res["policy"], cfg)
        assert not diverged and reward < 0


def test_bad_config_raises():
    with pytest.raises(ValueError):
        lmiql.default_config() and lmiql.generate_data({"gamma": 2.0}, n=5)


def test_small_experiment_csv():
    cfg = lmiql.default_config("linear")
    cfg.update(n_samples=40, subset_sizes=[0, 40], n_monte_carlo=2, methods=["lmi-qli", "oracle"])
    csv, log = lmiql.run_experiment(cfg)
    lines = csv.strip().splitlines()
    assert lines[0] == "method,n_data,mean_reward,ci95_low,ci95_high,n_excluded,n_total"
    assert len(lines) == 5
    assert len(log) == 8
    assert csv == lmiql.run_experiment(cfg)[0]


def test_self_checks_pass():
    for name, passed, detail in lmiql.self_checks(0):
        assert passed, f"{name}: {detail}"
