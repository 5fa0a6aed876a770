"""Batch Q-learning with LMI relaxations (Python bindings)."""

import json

from . import _core
from ._core import (
    AffinePolicy,
    Dataset,
    DareSolution,
    NotPositiveDefinite,
    PendulumConfig,
    QParams,
    TrainingError,
    pendulum_step,
    reward,
    solve_dare,
    wrap_angle,
)

__all__ = [
    "AffinePolicy",
    "Dataset",
    "DareSolution",
    "NotPositiveDefinite",
    "PendulumConfig",
    "QParams",
    "TrainingError",
    "default_config",
    "evaluate",
    "generate_data",
    "oracle_policy",
    "pendulum_step",
    "reward",
    "run_experiment",
    "self_checks",
    "solve_dare",
    "train",
    "wrap_angle",
]


def _dump(config):
    return "" if config is None else json.dumps(config)


def default_config(env="pendulum"):
    return json.loads(_core.default_config(env))


def generate_data(config=None, n=None, seed=0):
    cfg = json.loads(_core.normalize_config(_dump(config)))
    return _core.generate_data(_dump(cfg), cfg["n_samples"] if n is None else n, seed)


def train(data, method="lmi-ql", config=None):
    """Returns the training result as a dict; result["policy"] holds gain and offset."""
    return json.loads(_core.train(_dump(config), method, data))


def evaluate(policy, config=None, seed=0):
    """Cumulative reward and divergence flag of one rollout from the configured x0."""
    if isinstance(policy, dict):
        policy = AffinePolicy(policy["gain"], policy["offset"])
    return _core.evaluate(_dump(config), policy, seed)


def oracle_policy(config=None):
    return _core.oracle_policy(_dump(config))


def run_experiment(config=None):
    """(curves csv text, list of per-run records)."""
    csv, log = _core.run_experiment(_dump(config))
    return csv, json.loads(log)


def self_checks(seed=0):
    return _core.self_checks(seed)
