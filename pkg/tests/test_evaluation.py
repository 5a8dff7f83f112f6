import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsplearn.arm import DEFAULT_ARM, LAMBDA_XZ, forward_kinematics, jacobian
from nsplearn.constraints import FixedRows, SelectionEstimate, objective_combined
from nsplearn.data import Dataset, generate_toy_dataset
from nsplearn.errors import InvalidInputError
from nsplearn.evaluation import (evaluate, nnce, npoe, nppe, observation_variance, reproduce_trajectory,
                                 summarize)
from nsplearn.policies import PolicySpec, joint_attractor_policy
from nsplearn.projection import projection_from_constraint, pseudo_inverse


def stacks(rng, n=20):
    a = rng.normal(size=2)
    a /= np.linalg.norm(a)
    N = np.broadcast_to(projection_from_constraint(a[None]), (n, 2, 2))
    pi = rng.normal(size=(n, 2))
    u_ns = pi @ N[0].T
    u_ts = rng.normal(size=n)[:, None] * a
    return N, pi, u_ns, u_ts


def test_nppe_examples(rng):
    N, pi, _, _ = stacks(rng)
    assert nppe(N, N, pi, 1.0) == 0.0
    n = 7
    I = np.broadcast_to(np.eye(2), (n, 2, 2))
    e1 = np.tile([1.0, 0.0], (n, 1))
    assert nppe(I, np.zeros_like(I), e1, 1.0) == 1.0
    other = np.broadcast_to(np.eye(2) * 0.3, N.shape)
    assert nppe(N, other, pi, 2.0) == pytest.approx(nppe(N, other, pi, 1.0) / 2)


def test_npoe_examples(rng):
    N, pi, u_ns, u_ts = stacks(rng)
    assert npoe(u_ns, u_ts, N, 1.0) < 1e-28
    var = observation_variance(u_ns + u_ts)
    wrong = np.broadcast_to(np.eye(2) * 0.5, N.shape)
    expected = objective_combined(wrong, None, u_ns, u_ts) / (len(u_ns) * var)
    assert npoe(u_ns, u_ts, wrong, var) == pytest.approx(expected, rel=1e-12)
    # x-axis constraint on the u_ts = z, u_ns = y example point
    E = np.eye(3)
    N2 = projection_from_constraint(E[:1])[None]
    assert npoe(E[1:2], E[2:3], N2, 1.0) > 0


def test_nnce_examples(rng):
    u = rng.normal(size=(10, 2))
    v = rng.normal(size=(10, 2))
    assert nnce(u, u, 1.0) == 0.0
    assert nnce(u, np.zeros_like(u), 0.5) == pytest.approx(np.sum(u * u) / (10 * 0.5))
    assert nnce(u, v, 1.0) == nnce(v, u, 1.0)


def test_observation_variance_examples(rng):
    assert observation_variance(np.ones((5, 2))) == 0.0
    assert observation_variance([[1.0, 0.0], [-1.0, 0.0]]) == 1.0
    u = rng.normal(size=(9, 3))
    assert observation_variance(u + 5.0) == pytest.approx(observation_variance(u))


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_metrics_nonnegative_and_mixing_invariant(seed):
    d = generate_toy_dataset(PolicySpec("limit_cycle"), 30, seed)
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(1, 2))
    rep = evaluate(FixedRows(B / np.linalg.norm(B)), None, d)
    mixed = evaluate(FixedRows(-3.0 * B / np.linalg.norm(B)), None, d)
    assert rep.nppe >= 0 and rep.npoe >= 0 and rep.nnce == 0.0
    assert mixed.nppe == pytest.approx(rep.nppe, rel=1e-10, abs=1e-15)
    assert mixed.npoe == pytest.approx(rep.npoe, rel=1e-10, abs=1e-15)


def test_metric_input_checks(rng):
    N, pi, _, _ = stacks(rng)
    with pytest.raises(InvalidInputError):
        nppe(N, N, pi, 0.0)
    with pytest.raises(ValueError):
        nppe(N[:3], N, pi, 1.0)
    d = generate_toy_dataset(PolicySpec("linear"), 10, 0)
    with pytest.raises(InvalidInputError):
        evaluate(FixedRows(d.A[0]), None, Dataset(d.x, d.u))


def test_summarize():
    s = summarize([{"nnce": 1.0, "nppe": 2.0, "npoe": 0.0}, {"nnce": 3.0, "nppe": 2.0, "npoe": 1.0}])
    assert s["nnce"] == {"mean": 2.0, "sd": 1.0, "median": 2.0}


def test_reproduce_with_true_constraint_has_zero_deviation():
    est = SelectionEstimate(LAMBDA_XZ, DEFAULT_ARM.jacobian, 3)
    target = np.array([-1.0, 2.0, 0.0])

    def true_N(q):
        A = LAMBDA_XZ @ jacobian(q)
        return np.eye(3) - pseudo_inverse(A) @ A

    def velocity(q):
        A = LAMBDA_XZ @ jacobian(q)
        return pseudo_inverse(A) @ (LAMBDA_XZ @ (0.1 * (target - forward_kinematics(q))))

    cmp = reproduce_trajectory(est, true_N, velocity, joint_attractor_policy, np.deg2rad([5, 95, 5]), 50)
    assert cmp.max_deviation < 1e-12
    assert cmp.path_length > 0
