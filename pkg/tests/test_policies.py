import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from nsplearn.errors import ConfigError, DimensionMismatchError, SingularStateError
from nsplearn.policies import (PolicySpec, joint_attractor_policy, limit_cycle_policy, linear_policy,
                               quadratic_potential_policy, sinusoidal_policy, task_linear_attractor)

r = np.sqrt(0.75)


@pytest.mark.parametrize("x, expected", [((0, 0), (0, 1)), ((1, 0), (-2, 0)), ((0, 1), (-4, -2))])
def test_linear_examples(x, expected):
    np.testing.assert_allclose(linear_policy(np.array(x, float)), expected, atol=1e-15)


@pytest.mark.parametrize("x, expected", [((r, 0), (0, r)), ((0, r), (-r, 0)), ((0.5, 0), (0.25, 0.5))])
def test_limit_cycle_examples(x, expected):
    np.testing.assert_allclose(limit_cycle_policy(np.array(x, float)), expected, atol=1e-15)


def test_limit_cycle_origin_is_singular():
    with pytest.raises(SingularStateError):
        limit_cycle_policy(np.zeros(2))


@pytest.mark.parametrize("x, expected", [((0, -0.5), (1, 0)), ((0.5, 0), (0, -1)), ((1, -0.5), (-1, 0))])
def test_sinusoidal_examples(x, expected):
    np.testing.assert_allclose(sinusoidal_policy(np.array(x, float)), expected, atol=1e-15)


def test_joint_attractor_examples():
    x_star = np.array([0.3, -0.2, 1.0])
    np.testing.assert_allclose(joint_attractor_policy(x_star, x_star), 0.0)
    np.testing.assert_allclose(joint_attractor_policy(np.array([1.0, 0, 0])), [-1, 0, 0])
    np.testing.assert_allclose(joint_attractor_policy(np.array([0.1, 1.6, 0.1]), np.zeros(3), np.eye(3)),
                               [-0.1, -1.6, -0.1])


def test_quadratic_potential_examples():
    np.testing.assert_allclose(quadratic_potential_policy(np.zeros(3)), 0.0)
    np.testing.assert_allclose(quadratic_potential_policy(np.array([1.0, 0, 0])), [-0.1, 0, 0])
    np.testing.assert_allclose(quadratic_potential_policy(np.array([0, 2.0, 0])), [0, -0.2, 0])


def test_task_attractor_examples():
    assert task_linear_attractor(1.5, 1.5) == 0.0
    assert task_linear_attractor(0.0, 2.0, 0.1) == pytest.approx(0.2)
    np.testing.assert_allclose(task_linear_attractor([1, 1], [-1, 2], 0.1), [-0.2, 0.1])


def test_dimension_checks():
    with pytest.raises(DimensionMismatchError):
        linear_policy(np.zeros(3))
    with pytest.raises(DimensionMismatchError):
        sinusoidal_policy(np.zeros((4, 3)))


@given(arrays(float, (7, 2), elements=st.floats(-1, 1)))
def test_batch_matches_pointwise(X):
    for kind in ("linear", "sinusoidal"):
        policy = PolicySpec(kind)
        np.testing.assert_allclose(policy(X), np.array([policy(x) for x in X]), atol=1e-15)


def test_spec_round_trip_and_validation():
    policy = PolicySpec("linear", {"L": np.ones((2, 3))})
    assert PolicySpec.from_dict(policy.to_dict()) == policy
    with pytest.raises(ConfigError):
        PolicySpec("unknown")
    with pytest.raises(ConfigError):
        PolicySpec("linear", {"L": np.ones((3, 3))})
    with pytest.raises(ConfigError):
        PolicySpec("sinusoidal", {"rho": 1.0})
    with pytest.raises(ConfigError):
        PolicySpec("joint_attractor", {"x_star": np.zeros(3), "L": np.eye(2)})
