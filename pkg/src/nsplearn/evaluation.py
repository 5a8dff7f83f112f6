"""Error measures for learnt projections and trajectory comparisons."""
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConstraintError, DimensionMismatchError, InvalidInputError
from .nullspace import predict_nullspace_component


def observation_variance(us):
    """Total variance of the actions about their mean: ``mean |u_n - mean(u)|^2``."""
    us = np.atleast_2d(np.asarray(us, dtype=float))
    return float(np.mean(np.sum((us - us.mean(axis=0)) ** 2, axis=1)))


def _check(sigma_u_sq, *arrays):
    n = len(arrays[0])
    if any(len(a) != n for a in arrays):
        raise DimensionMismatchError("inputs differ in number of observations")
    if not sigma_u_sq > 0:
        raise InvalidInputError("normalising variance must be positive")
    return n


def nppe(N_true, N_est, pi, sigma_u_sq):
    """Normalised projected policy error."""
    n = _check(sigma_u_sq, N_true, N_est, pi)
    d = np.einsum("nij,nj->ni", np.asarray(N_true) - np.asarray(N_est), pi)
    return float(np.sum(d * d) / (n * sigma_u_sq))


def npoe(u_ns, u_ts, N_est, sigma_u_sq):
    """Normalised projected observation error."""
    n = _check(sigma_u_sq, u_ns, u_ts, N_est)
    r1 = u_ns - np.einsum("nij,nj->ni", N_est, u_ns)
    r2 = np.einsum("nij,nj->ni", N_est, u_ts)
    return float((np.sum(r1 * r1) + np.sum(r2 * r2)) / (n * sigma_u_sq))


def nnce(u_ns, u_ns_est, sigma_u_sq):
    """Normalised null-space component error."""
    n = _check(sigma_u_sq, u_ns, u_ns_est)
    d = np.asarray(u_ns) - np.asarray(u_ns_est)
    return float(np.sum(d * d) / (n * sigma_u_sq))


@dataclass
class EvaluationReport:
    nppe: float
    npoe: float
    nnce: float
    sigma_u_sq: float
    n_points: int
    n_rows: int = None
    trials: list = field(default_factory=list, repr=False)

    def as_row(self):
        return {"nnce": self.nnce, "nppe": self.nppe, "npoe": self.npoe}


def evaluate(estimate, model, dataset):
    """All three metrics of a learnt estimate on a ground-truth dataset.

    ``model`` predicts the null-space component; pass ``None`` to use the
    true components (NNCE is then zero).
    """
    if not dataset.has_ground_truth:
        raise InvalidInputError("metrics need a dataset with ground truth")
    var = observation_variance(dataset.u)
    N_true = dataset.true_projections()
    N_est = estimate.projections(dataset.x, len(dataset))
    u_ns_est = dataset.u_ns if model is None else predict_nullspace_component(model, dataset.x)
    return EvaluationReport(
        nppe=nppe(N_true, N_est, dataset.pi, var),
        npoe=npoe(dataset.u_ns, dataset.u_ts, N_est, var),
        nnce=nnce(dataset.u_ns, u_ns_est, var),
        sigma_u_sq=var,
        n_points=len(dataset),
        n_rows=estimate.n_rows,
    )


def summarize(reports):
    """Mean, standard deviation and median of each metric over trials.

    ``reports`` may hold :class:`EvaluationReport` objects or plain dicts.
    """
    out = {}
    for key in ("nnce", "nppe", "npoe"):
        vals = np.array([r[key] if isinstance(r, dict) else getattr(r, key) for r in reports])
        out[key] = {"mean": float(vals.mean()), "sd": float(vals.std()), "median": float(np.median(vals))}
    return out


@dataclass
class TrajectoryComparison:
    learnt: np.ndarray
    true: np.ndarray
    max_deviation: float
    mean_deviation: float
    path_length: float


def _rollout(projection, desired_velocity, null_policy, x0, n_steps, dt, label):
    x = np.array(x0, dtype=float)
    path = [x.copy()]
    for step in range(n_steps):
        try:
            N = projection(x)
        except DegenerateConstraintError as exc:
            raise DegenerateConstraintError(f"{label} constraint degenerate during rollout", index=step) from exc
        v = np.asarray(desired_velocity(x), dtype=float)
        u = (v - N @ v) + N @ np.asarray(null_policy(x), dtype=float)
        x = x + dt * u
        path.append(x.copy())
    return np.array(path)


def reproduce_trajectory(estimate, true_projection, desired_velocity, null_policy, x0, n_steps, dt=0.1):
    """Roll out the same policies under the learnt and the true constraint.

    The task term at state ``x`` is the part of ``desired_velocity(x)`` lying
    in the constrained subspace, ``(I - N(x)) v(x)``. For a constraint
    ``A`` and task command ``b = A v`` this equals ``pinv(A) b``, and it does
    not depend on how the constraint rows are chosen.

    Parameters
    ----------
    estimate : ConstraintEstimate
    true_projection : callable
        State -> true null-space projector.
    desired_velocity : callable
        State -> state-space velocity realising the task.
    null_policy : callable
        State -> null-space policy action.
    x0 : array_like
    n_steps : int
    dt : float
    """
    learnt = _rollout(estimate.projection_at, desired_velocity, null_policy, x0, n_steps, dt, "learnt")
    true = _rollout(true_projection, desired_velocity, null_policy, x0, n_steps, dt, "true")
    dev = np.linalg.norm(learnt - true, axis=1)
    length = float(np.sum(np.linalg.norm(np.diff(true, axis=0), axis=1)))
    return TrajectoryComparison(learnt, true, float(dev.max()), float(dev.mean()), length)
