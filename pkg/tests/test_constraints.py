import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsplearn.arm import DEFAULT_ARM, LAMBDA_XZ, jacobian
from nsplearn.constraints import (FixedRows, RbfAngleModel, SelectionEstimate, StateDependentRows,
                                  fit_constraint_rows, fit_selection_matrix, fit_state_dependent_rows,
                                  objective_combined, objective_image, objective_orthogonal, predict_projection)
from nsplearn.data import generate_arm_trajectories, generate_toy_dataset
from nsplearn.errors import DegenerateConstraintError
from nsplearn.evaluation import evaluate
from nsplearn.lm import LmOptions
from nsplearn.nullspace import RbfFeatureMap
from nsplearn.policies import PolicySpec
from nsplearn.projection import projection_from_constraint

from conftest import random_orthonormal_rows

FAST = LmOptions(max_iter=100, multistart=4)
E = np.eye(3)
# one point with u_ts along z and u_ns along y
U_TS = np.array([[0.0, 0.0, 1.0]])
U_NS = np.array([[0.0, 2.0, 0.0]])


def synthetic(seed, U, k, n=60):
    rng = np.random.default_rng(seed)
    A = random_orthonormal_rows(rng, k, U)
    N = projection_from_constraint(A)
    u_ts = rng.normal(size=(n, k)) @ A
    u_ns = rng.normal(size=(n, U)) @ N.T
    return A, u_ns, u_ts


def test_image_objective_examples(rng):
    u_ns = rng.normal(size=(5, 2)) * [1.0, 0.0]
    est = FixedRows(np.array([[0.0, 1.0]]), 2)
    assert objective_image(est, None, u_ns) == 0.0
    v = np.array([[3.0, 4.0]])
    assert objective_image(FixedRows(v / 5.0), None, v) == pytest.approx(25.0)
    a = FixedRows(np.array([[0.6, 0.8]]))
    assert objective_image(a, None, 2 * u_ns) == pytest.approx(4 * objective_image(a, None, u_ns))


def test_orthogonal_objective_examples():
    u_ts = np.array([[0.0, 2.0]])
    assert objective_orthogonal(FixedRows(np.array([[0.0, 1.0]])), None, u_ts) == pytest.approx(0.0, abs=1e-30)
    assert objective_orthogonal(FixedRows(np.array([[1.0, 0.0]])), None, u_ts) == pytest.approx(4.0)
    assert objective_orthogonal(FixedRows(np.array([[1.0, 0.0]])), None, np.zeros((0, 2))) == 0.0


def test_combined_objective_examples():
    d = generate_toy_dataset(PolicySpec("sinusoidal"), 30, 5)
    est = FixedRows(d.A[0])
    assert objective_combined(est, None, d.u_ns, d.u_ts) < 1e-28
    wrong = FixedRows(np.array([[1.0, 0.0]]))
    total = objective_combined(wrong, None, d.u_ns, d.u_ts)
    assert total == objective_image(wrong, None, d.u_ns) + objective_orthogonal(wrong, None, d.u_ts)


def test_overestimated_rank_counterexample():
    # x-axis constraint leaves the yz plane free: u_ns is kept but so is u_ts
    est = FixedRows(E[:1])
    assert objective_image(est, None, U_NS) < 1e-12
    assert objective_combined(est, None, U_NS, U_TS) > 1e-6


def test_underestimated_rank_counterexample():
    # yz-plane constraint removes u_ts but also u_ns
    est = FixedRows(E[1:])
    assert objective_orthogonal(est, None, U_TS) < 1e-12
    assert objective_combined(est, None, U_NS, U_TS) > 1e-6


@settings(max_examples=25)
@given(st.integers(0, 10_000), st.sampled_from([(2, 1), (3, 1), (3, 2)]))
def test_objectives_ignore_row_signs(seed, shape):
    U, k = shape
    A, u_ns, u_ts = synthetic(seed, U, k)
    B = np.random.default_rng(seed).normal(size=(k, U))
    flipped = B * np.where(np.arange(k) % 2, -1.0, 1.0)[:, None]
    a, b = FixedRows(B), FixedRows(flipped)
    assert objective_combined(a, None, u_ns, u_ts) == pytest.approx(objective_combined(b, None, u_ns, u_ts),
                                                                    rel=1e-10)


def test_toy_rows_from_ground_truth():
    d = generate_toy_dataset(PolicySpec("limit_cycle"), 150, 3)
    est = fit_constraint_rows(d.u_ns, d.u_ts)
    assert est.n_rows == 1
    rep = evaluate(est, None, d)
    assert rep.nppe < 1e-15 and rep.npoe < 1e-15


@pytest.mark.parametrize("U, k", [(2, 1), (3, 1), (3, 2)])
def test_recovers_rank(U, k):
    for seed in range(5):
        A, u_ns, u_ts = synthetic(seed, U, k)
        est = fit_constraint_rows(u_ns, u_ts, FAST)
        assert est.n_rows == k
        np.testing.assert_allclose(est.rows @ est.rows.T, np.eye(k), atol=1e-8)
        np.testing.assert_allclose(projection_from_constraint(est.rows), projection_from_constraint(A), atol=1e-6)


def test_extra_row_increases_combined_error():
    A, u_ns, u_ts = synthetic(1, 3, 2)
    third = np.cross(A[0], A[1])
    good = objective_combined(FixedRows(A), None, u_ns, u_ts)
    worse = objective_combined(FixedRows(np.vstack([A, third])), None, u_ns, u_ts)
    assert worse > good + 1e-6


def test_first_row_rejected_gives_empty_estimate(rng):
    # no task component at all: any row removes part of u_ns
    u_ns = rng.normal(size=(20, 2))
    est = fit_constraint_rows(u_ns, np.zeros_like(u_ns), FAST)
    assert est.n_rows == 0 and est.diagnostics["rejected_first_row"]
    np.testing.assert_array_equal(est.projection_at(np.zeros(2)), np.eye(2))


def test_selection_recovers_xz_plane():
    d = generate_arm_trajectories(LAMBDA_XZ, 10, 20, seed=0)
    est = fit_selection_matrix(jacobian(d.x), d.u_ns, d.u_ts, FAST, DEFAULT_ARM.jacobian)
    assert est.n_rows == 2
    np.testing.assert_allclose(est.rows @ est.rows.T, np.eye(2), atol=1e-8)
    cosines = np.linalg.svd(est.rows @ LAMBDA_XZ.T, compute_uv=False)
    assert np.max(np.arccos(np.clip(cosines, -1, 1))) < 0.05
    assert evaluate(est, None, d).nppe < 1e-2


def test_selection_objective_at_truth():
    d = generate_arm_trajectories(LAMBDA_XZ, 3, 10, seed=1)
    est = SelectionEstimate(LAMBDA_XZ, DEFAULT_ARM.jacobian, 3)
    assert objective_image(est, d.x, d.u_ns) <= 1e-12


def test_selection_identity_gives_zero_projection():
    est = SelectionEstimate(np.eye(3), DEFAULT_ARM.jacobian, 3)
    np.testing.assert_allclose(predict_projection(est, np.array([0.2, 1.4, 0.3])), 0.0, atol=1e-12)


def test_fixed_rows_projection_example():
    np.testing.assert_allclose(predict_projection(FixedRows(np.array([[1.0, 0.0]])), np.zeros(2)),
                               np.diag([0.0, 1.0]), atol=1e-15)


def test_constant_angle_model_is_state_independent(rng):
    fmap = RbfFeatureMap(rng.normal(size=(5, 2)), 0.7)
    model = RbfAngleModel(fmap, np.full((2, 5), 0.9))
    est = StateDependentRows([model], 3, fmap)
    N = est.projections(rng.normal(size=(10, 2)))
    np.testing.assert_allclose(N, np.broadcast_to(N[0], N.shape), atol=1e-12)


def test_state_dependent_matches_fixed_on_constant_constraint():
    d = generate_toy_dataset(PolicySpec("limit_cycle"), 80, 2)
    fixed = evaluate(fit_constraint_rows(d.u_ns, d.u_ts, FAST), None, d).nppe
    sd = fit_state_dependent_rows(d.x, d.u_ns, d.u_ts, 8, FAST)
    assert sd.n_rows == 1
    assert abs(evaluate(sd, None, d).nppe - fixed) < 1e-3


def test_state_dependent_rows_are_orthonormal():
    d = generate_arm_trajectories(LAMBDA_XZ, 4, 15, seed=2)
    est = fit_state_dependent_rows(d.x, d.u_ns, d.u_ts, 10, FAST)
    assert est.n_rows >= 1
    Xq = np.random.default_rng(0).uniform([0, 1.4, 0], [0.3, 1.8, 0.3], size=(100, 3))
    A = est.constraint_rows(Xq)
    gram = np.einsum("nij,nkj->nik", A, A)
    assert np.abs(gram - np.eye(est.n_rows)).max() < 1e-6


def test_rank_deficient_estimate_raises():
    est = SelectionEstimate(np.array([[1.0, 0.0, 0.0]]), DEFAULT_ARM.jacobian, 3)
    with pytest.raises(DegenerateConstraintError):
        est.projections(np.zeros((1, 3)))
