"""Learning constraint matrices, and hence null-space projectors, from
estimated task and null-space components.

Three representations are supported:

* :class:`FixedRows` -- constant orthonormal rows ``A``;
* :class:`SelectionEstimate` -- orthonormal selection rows ``Lambda`` over a
  known Jacobian, ``A(x) = Lambda J(x)``;
* :class:`StateDependentRows` -- rows ``a_s(x)`` whose hyperspherical angles
  are linear in normalised RBF features.

All fitters share the same outer loop: rows are learnt one at a time by
minimising the image error ``sum |u_ns - N u_ns|^2`` in the orthogonal
complement of the rows accepted so far, and a row is kept only while the
combined error (image error plus ``sum |N u_ts|^2``) does not increase.
"""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateConstraintError, DimensionMismatchError, InvalidInputError
from .lm import LmOptions, levenberg_marquardt
from .nullspace import RbfFeatureMap, rbf_features
from .projection import RANK_TOL, orthonormal_complement_basis, unit_vector_from_angles

ACCEPT_RTOL = 1e-6
ACCEPT_ATOL = 1e-12
ROW_EPS = 1e-8


def _stack(arr):
    return np.ascontiguousarray(np.asarray(arr, dtype=float))


class ConstraintEstimate:
    """Common interface: rows ``A(x)`` and projectors ``I - pinv(A) A``."""

    variant = None
    action_dim = None

    @property
    def n_rows(self):
        raise NotImplementedError

    def constraint_rows(self, X, n=None):
        """Stack of constraint matrices, shape ``(n, k, U)``."""
        raise NotImplementedError

    def projections(self, X, n=None):
        A = _stack(self.constraint_rows(X, n))
        P, bad = kernels.rowspace_projectors(A, RANK_TOL)
        if bad >= 0:
            raise DegenerateConstraintError("learnt constraint is rank deficient", index=int(bad))
        return np.eye(self.action_dim) - P

    def projection_at(self, x):
        return self.projections(np.atleast_2d(x), 1)[0]


def _count(X, n):
    if n is not None:
        return n
    if X is None:
        raise InvalidInputError("need states or an explicit count")
    return len(np.atleast_2d(X))


@dataclass
class FixedRows(ConstraintEstimate):
    rows: np.ndarray
    action_dim: int = None
    diagnostics: dict = field(default_factory=dict, repr=False, compare=False)
    variant = "fixed_rows"

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if self.action_dim is None:
            if rows.size == 0:
                raise InvalidInputError("action_dim is required for an empty estimate")
            self.action_dim = rows.shape[-1]
        self.rows = rows.reshape(-1, self.action_dim)

    @property
    def n_rows(self):
        return len(self.rows)

    def constraint_rows(self, X=None, n=None):
        n = _count(X, n)
        return np.broadcast_to(self.rows, (n,) + self.rows.shape)


@dataclass
class SelectionEstimate(ConstraintEstimate):
    """``A(x) = Lambda J(x)``; ``jacobian`` maps a stack of states to ``(n, R, U)``."""

    rows: np.ndarray
    jacobian: object
    action_dim: int = None
    diagnostics: dict = field(default_factory=dict, repr=False, compare=False)
    variant = "selection"

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float)
        if self.rows.ndim != 2:
            raise DimensionMismatchError("selection rows must be a matrix (possibly with zero rows)")

    @property
    def n_rows(self):
        return len(self.rows)

    @property
    def task_dim(self):
        return self.rows.shape[1]

    def constraint_rows(self, X, n=None):
        J = np.asarray(self.jacobian(np.atleast_2d(X)), dtype=float)
        if self.action_dim is None:
            self.action_dim = J.shape[-1]
        return np.einsum("kr,nru->nku", self.rows, J)


@dataclass
class RbfAngleModel:
    """Angles ``theta(x) = W phi(x)`` of one constraint row."""

    feature_map: RbfFeatureMap
    weights: np.ndarray

    def angles(self, X):
        return rbf_features(np.atleast_2d(X), self.feature_map) @ self.weights.T


@dataclass
class StateDependentRows(ConstraintEstimate):
    """Rows ``a_s(x)``: each row's angles map to a unit vector, which is then
    projected off the earlier rows at the same state and renormalised."""

    models: list
    action_dim: int
    feature_map: RbfFeatureMap = None
    diagnostics: dict = field(default_factory=dict, repr=False, compare=False)
    variant = "state_dependent"

    @property
    def n_rows(self):
        return len(self.models)

    def constraint_rows(self, X, n=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n = len(X)
        prev = np.zeros((n, 0, self.action_dim))
        if not self.models:
            return prev
        F = rbf_features(X, self.models[0].feature_map)
        for model in self.models:
            theta = np.ascontiguousarray(F @ model.weights.T)
            a, norms = kernels.state_rows(theta, np.ascontiguousarray(prev), ROW_EPS)
            bad = np.flatnonzero(norms < ROW_EPS)
            if bad.size:
                raise DegenerateConstraintError("state-dependent row collapsed", index=int(bad[0]))
            prev = np.concatenate([prev, a[:, None, :]], axis=1)
        return prev


def predict_projection(estimate, x):
    """Learnt null-space projector at a single state."""
    return estimate.projection_at(x)


# --- objectives -------------------------------------------------------------


def _projections(estimate, X, n):
    if isinstance(estimate, ConstraintEstimate):
        return estimate.projections(X, n)
    N = np.asarray(estimate, dtype=float)
    return np.broadcast_to(N, (n,) + N.shape[-2:]) if N.ndim == 2 else N


def image_error(N, u_ns):
    """``sum |u_ns - N u_ns|^2`` for a stack of projectors."""
    r = u_ns - np.einsum("nij,nj->ni", N, u_ns)
    return float(np.sum(r * r))


def orthogonal_error(N, u_ts):
    """``sum |N u_ts|^2``."""
    r = np.einsum("nij,nj->ni", N, u_ts)
    return float(np.sum(r * r))


def objective_image(estimate, X, u_ns):
    """Image-space error of an estimate (or projector stack) on null-space components."""
    u_ns = np.atleast_2d(np.asarray(u_ns, dtype=float))
    return image_error(_projections(estimate, X, len(u_ns)), u_ns)


def objective_orthogonal(estimate, X, u_ts):
    u_ts = np.atleast_2d(np.asarray(u_ts, dtype=float))
    if u_ts.size == 0:
        return 0.0
    return orthogonal_error(_projections(estimate, X, len(u_ts)), u_ts)


def objective_combined(estimate, X, u_ns, u_ts):
    u_ns = np.atleast_2d(np.asarray(u_ns, dtype=float))
    u_ts = np.atleast_2d(np.asarray(u_ts, dtype=float))
    N = _projections(estimate, X, len(u_ns))
    return image_error(N, u_ns) + orthogonal_error(N, u_ts)


def _accepts(new, current):
    return new <= current * (1.0 + ACCEPT_RTOL) + ACCEPT_ATOL


def _random_angles(rng, d):
    theta = rng.uniform(0.0, np.pi, size=d)
    if d:
        theta[-1] = rng.uniform(0.0, 2.0 * np.pi)
    return theta


def _multistart(resid, d, opts, rng, jac=None):
    best = None
    for _ in range(opts.multistart):
        res = levenberg_marquardt(resid, _random_angles(rng, d), opts, jac=jac)
        if best is None or res.objective < best.objective:
            best = res
    return best


def _fit_direction(coords_resid, basis, opts, rng):
    """Best unit vector in the span of ``basis`` under a residual of its coordinates."""
    d = len(basis)
    if d == 1:
        v = np.ones(1)
        return basis[0], float(np.sum(np.square(coords_resid(v))))
    res = _multistart(lambda t: coords_resid(unit_vector_from_angles(t, d)), d - 1, opts, rng)
    return unit_vector_from_angles(res.theta, d) @ basis, res.objective


def fit_constraint_rows(u_ns, u_ts, opts=None):
    """Learn constant constraint rows from estimated components.

    Parameters
    ----------
    u_ns, u_ts : ndarray, shape (N, U)
        Estimated null-space and task-space components.
    opts : LmOptions, optional

    Returns
    -------
    FixedRows
        Orthonormal rows. ``diagnostics`` records the combined error after
        each accepted row and why the search stopped.
    """
    opts = opts or LmOptions()
    u_ns = np.atleast_2d(np.asarray(u_ns, dtype=float))
    u_ts = np.atleast_2d(np.asarray(u_ts, dtype=float))
    n, U = u_ns.shape
    rng = np.random.default_rng(opts.seed)
    accepted = np.zeros((0, U))
    current = objective_combined(FixedRows(accepted, U), None, u_ns, u_ts)
    trace = [current]
    stop = "full_rank"
    while len(accepted) < U:
        basis = orthonormal_complement_basis(accepted, U)
        coords = u_ns @ basis.T
        row, _ = _fit_direction(lambda v: coords @ v, basis, opts, rng)
        rows = np.vstack([accepted, row])
        combined = objective_combined(FixedRows(rows, U), None, u_ns, u_ts)
        if not _accepts(combined, current):
            stop = "combined_error_increased"
            break
        accepted, current = rows, combined
        trace.append(current)
    diag = {"combined_trace": trace, "stop": stop, "rejected_first_row": len(accepted) == 0}
    return FixedRows(accepted, U, diag)


def fit_selection_matrix(jacobians, u_ns, u_ts, opts=None, jacobian_provider=None):
    """Learn orthonormal selection rows ``Lambda`` with ``A_n = Lambda J_n``.

    Parameters
    ----------
    jacobians : ndarray, shape (N, R, U)
        Task Jacobian at every observation.
    u_ns, u_ts : ndarray, shape (N, U)
    opts : LmOptions, optional
    jacobian_provider : callable, optional
        States -> Jacobians, stored on the estimate for later prediction.
    """
    opts = opts or LmOptions()
    J = _stack(jacobians)
    u_ns = _stack(np.atleast_2d(u_ns))
    u_ts = _stack(np.atleast_2d(u_ts))
    n, R, U = J.shape
    rng = np.random.default_rng(opts.seed)
    accepted = np.zeros((0, R))

    def combined_for(lam):
        A = _stack(np.einsum("kr,nru->nku", lam, J))
        P, _ = kernels.rowspace_projectors(A, RANK_TOL)
        return objective_combined(np.eye(U) - P, None, u_ns, u_ts)

    current = combined_for(accepted)
    trace = [current]
    stop = "full_rank"
    while len(accepted) < R:
        basis = orthonormal_complement_basis(accepted, R)
        A_acc = np.einsum("kr,nru->nku", accepted, J)
        JB = np.einsum("dr,nru->ndu", basis, J)

        def resid(v, A_acc=A_acc, JB=JB):
            cand = np.einsum("d,ndu->nu", v, JB)
            A = _stack(np.concatenate([A_acc, cand[:, None, :]], axis=1))
            proj, _ = kernels.rowspace_project(A, u_ns, RANK_TOL)
            return proj

        row, _ = _fit_direction(resid, basis, opts, rng)
        lam = np.vstack([accepted, row])
        combined = combined_for(lam)
        if not _accepts(combined, current):
            stop = "combined_error_increased"
            break
        accepted, current = lam, combined
        trace.append(current)
    diag = {"combined_trace": trace, "stop": stop, "rejected_first_row": len(accepted) == 0}
    return SelectionEstimate(accepted, jacobian_provider, U, diag)


def fit_state_dependent_rows(X, u_ns, u_ts, phi, opts=None, seed=0, feature_map=None):
    """Learn rows ``a_s(x)`` whose angles are ``W_s phi(x)``.

    Each row first gets a constant direction (multistart over angles, the
    same search as for fixed rows); that direction seeds the weights, which
    are then refined by Levenberg-Marquardt with an exact Jacobian.

    Parameters
    ----------
    X : ndarray, shape (N, n)
        States.
    u_ns, u_ts : ndarray, shape (N, U)
    phi : int
        Number of basis functions (ignored when ``feature_map`` is given).
    opts : LmOptions, optional
    seed : int
        Seeds the k-means centres.
    """
    opts = opts or LmOptions()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    u_ns = _stack(np.atleast_2d(u_ns))
    u_ts = _stack(np.atleast_2d(u_ts))
    n, U = u_ns.shape
    d = U - 1
    fmap = feature_map or RbfFeatureMap.from_states(X, phi, seed)
    F = _stack(rbf_features(X, fmap))
    nf = F.shape[1]
    rng = np.random.default_rng(opts.seed)
    prev = np.zeros((n, 0, U))
    models = []

    def combined_for(rows):
        P, _ = kernels.rowspace_projectors(_stack(rows), RANK_TOL)
        return objective_combined(np.eye(U) - P, None, u_ns, u_ts)

    current = combined_for(prev)
    trace = [current]
    stop = "full_rank"
    for _ in range(U):
        prev_c = _stack(prev)

        def resid_const(t, prev_c=prev_c):
            theta = _stack(np.broadcast_to(t, (n, d)))
            return kernels.state_row_terms(theta, prev_c, u_ns, ROW_EPS)[0]

        def resid_w(w, prev_c=prev_c):
            theta = _stack(F @ w.reshape(d, nf).T)
            return kernels.state_row_terms(theta, prev_c, u_ns, ROW_EPS)[0]

        def jac_w(w, prev_c=prev_c):
            theta = _stack(F @ w.reshape(d, nf).T)
            grad = kernels.state_row_terms(theta, prev_c, u_ns, ROW_EPS)[1]
            return (grad[:, :, None] * F[:, None, :]).reshape(n, d * nf)

        start = _multistart(resid_const, d, opts, rng)
        W0 = np.outer(start.theta, np.ones(nf))
        res = levenberg_marquardt(resid_w, W0.ravel(), opts, jac=jac_w)
        W = res.theta.reshape(d, nf)
        theta = _stack(F @ W.T)
        rows, _ = kernels.state_rows(theta, prev_c, ROW_EPS)
        cand = np.concatenate([prev, rows[:, None, :]], axis=1)
        combined = combined_for(cand)
        if not _accepts(combined, current):
            stop = "combined_error_increased"
            break
        prev, current = cand, combined
        models.append(RbfAngleModel(fmap, W))
        trace.append(current)
    diag = {"combined_trace": trace, "stop": stop, "rejected_first_row": not models}
    return StateDependentRows(models, U, fmap, diag)
