import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from nsplearn.arm import (DEFAULT_ARM, LAMBDA_XZ, LAMBDA_ZTHETA, ArmModel, forward_kinematics, ik_feasible,
                          jacobian, task_constraint)
from nsplearn.errors import DegenerateConstraintError, DimensionMismatchError, InvalidInputError
from nsplearn.lm import fd_jacobian

angles = arrays(float, 3, elements=st.floats(-np.pi, np.pi))


@pytest.mark.parametrize("q, expected", [
    ((0, 0, 0), (3, 0, 0)),
    ((np.pi / 2, 0, 0), (0, 3, np.pi / 2)),
    ((np.pi / 2, -np.pi / 2, 0), (2, 1, 0)),
])
def test_forward_kinematics_examples(q, expected):
    np.testing.assert_allclose(forward_kinematics(np.array(q)), expected, atol=1e-12)


def test_jacobian_at_zero():
    np.testing.assert_allclose(jacobian(np.zeros(3)), [[0, 0, 0], [3, 2, 1], [1, 1, 1]], atol=1e-15)


@given(angles, st.tuples(*[st.floats(0.2, 2.0)] * 3))
def test_jacobian_matches_finite_differences(q, links):
    arm = ArmModel(links)
    J_fd = fd_jacobian(lambda t: forward_kinematics(t, arm), q)
    np.testing.assert_allclose(jacobian(q, arm), J_fd, atol=1e-6)
    np.testing.assert_array_equal(jacobian(q, arm)[2], np.ones(3))


@given(arrays(float, (5, 3), elements=st.floats(-np.pi, np.pi)))
def test_batched_kinematics(Q):
    np.testing.assert_allclose(forward_kinematics(Q), np.array([forward_kinematics(q) for q in Q]))
    np.testing.assert_allclose(jacobian(Q), np.array([jacobian(q) for q in Q]))


def test_task_constraint_selects_rows():
    q = np.array([0.3, 1.2, -0.4])
    J = jacobian(q)
    np.testing.assert_allclose(task_constraint(LAMBDA_XZ, np.zeros(3), check=False), jacobian(np.zeros(3))[:2])
    np.testing.assert_allclose(task_constraint(LAMBDA_ZTHETA, q), J[1:])
    np.testing.assert_allclose(task_constraint(np.eye(3), q), J)


def test_task_constraint_detects_singularity():
    # fully stretched arm: the x row of J vanishes
    with pytest.raises(DegenerateConstraintError):
        task_constraint(LAMBDA_XZ[:1], np.zeros(3))


def test_ik_examples():
    q0 = np.array([0.1, 1.6, 0.1])
    assert ik_feasible(forward_kinematics(q0), LAMBDA_XZ, q_init=q0)
    assert not ik_feasible(np.array([3.5, 1.0]), LAMBDA_XZ)
    assert ik_feasible(np.array([1.0, 1.0]), LAMBDA_XZ, q_init=q0)


def test_arm_validation():
    with pytest.raises(InvalidInputError):
        ArmModel((1.0, 0.0, 1.0))
    with pytest.raises(InvalidInputError):
        ArmModel((1.0, 1.0))
    with pytest.raises(DimensionMismatchError):
        forward_kinematics(np.zeros(2))
    assert DEFAULT_ARM.reach == 3.0
