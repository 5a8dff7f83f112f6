"""Learning the null-space component of observed actions.

The model is ``u_ns(x) = W phi(x)`` over normalised Gaussian features. Its
weights minimise ``sum_n |P_n u_n - u_ns(x_n)|^2`` where ``P_n`` projects onto
the current prediction ``u_ns(x_n)``. The task component of an observation is
what remains of ``u`` after removing the prediction.
"""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, InvalidInputError
from .lm import LmOptions, levenberg_marquardt

PREDICTION_EPS = 1e-8


def kmeans_centres(states, phi, seed=0, max_iter=100):
    """Lloyd's k-means, initialised from ``phi`` distinct states drawn with ``seed``."""
    X = np.atleast_2d(np.asarray(states, dtype=float))
    distinct = np.unique(X, axis=0)
    if phi < 1 or phi > len(distinct):
        raise ConfigError(f"cannot place {phi} centres on {len(distinct)} distinct states")
    rng = np.random.default_rng(seed)
    C = distinct[np.sort(rng.choice(len(distinct), size=phi, replace=False))].copy()
    labels = None
    for _ in range(max_iter):
        d2 = np.sum((X[:, None, :] - C[None, :, :]) ** 2, axis=-1)
        new = np.argmin(d2, axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for j in range(phi):
            members = X[labels == j]
            if len(members):
                C[j] = members.mean(axis=0)
            else:
                # reseed an empty cluster at the worst-served state
                far = int(np.argmax(d2[np.arange(len(X)), labels]))
                C[j] = X[far]
    return C


def default_bandwidth(centres):
    """Twice the median nearest-neighbour distance between centres (1.0 for one centre)."""
    C = np.asarray(centres, dtype=float)
    if len(C) < 2:
        return 1.0
    d = np.sqrt(np.sum((C[:, None, :] - C[None, :, :]) ** 2, axis=-1))
    np.fill_diagonal(d, np.inf)
    bw = 2.0 * float(np.median(d.min(axis=1)))
    return bw if bw > 0 else 1.0


@dataclass(frozen=True)
class RbfFeatureMap:
    centres: np.ndarray
    bandwidth: float

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.centres, dtype=float))
        if len(C) < 1:
            raise InvalidInputError("need at least one centre")
        if not self.bandwidth > 0:
            raise InvalidInputError("bandwidth must be positive")
        object.__setattr__(self, "centres", C)
        object.__setattr__(self, "bandwidth", float(self.bandwidth))

    @property
    def n_features(self):
        return len(self.centres)

    @classmethod
    def from_states(cls, states, phi, seed=0, bandwidth=None):
        C = kmeans_centres(states, phi, seed)
        return cls(C, default_bandwidth(C) if bandwidth is None else bandwidth)

    def __call__(self, x):
        return rbf_features(x, self)


def rbf_features(x, fmap):
    """Normalised Gaussian features; rows sum to one.

    Accepts one state ``(n,)`` or a stack ``(N, n)``.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    d2 = np.sum((X[:, None, :] - fmap.centres[None, :, :]) ** 2, axis=-1)
    logits = -d2 / (2.0 * fmap.bandwidth**2)
    logits -= logits.max(axis=1, keepdims=True)
    k = np.exp(logits)
    F = k / k.sum(axis=1, keepdims=True)
    return F[0] if single else F


@dataclass
class RbfVectorModel:
    feature_map: RbfFeatureMap
    weights: np.ndarray
    objective: float = None
    history: list = field(default_factory=list, repr=False)

    def __call__(self, x):
        return predict_nullspace_component(self, x)


def predict_nullspace_component(model, x):
    F = rbf_features(x, model.feature_map)
    return F @ model.weights.T


def residual_task_component(model, x, u):
    """``u - u_ns(x)``; the two parts add back to ``u`` by construction."""
    return np.asarray(u, dtype=float) - predict_nullspace_component(model, x)


def nullspace_objective(weights, features, actions, eps=PREDICTION_EPS):
    r = kernels.ns_residuals(features, actions, np.ascontiguousarray(weights), eps)
    return float(np.sum(r * r))


def nullspace_gradient(weights, features, actions, eps=PREDICTION_EPS):
    """Gradient of the objective with respect to the weight matrix."""
    W = np.ascontiguousarray(weights)
    r = kernels.ns_residuals(features, actions, W, eps)
    J = kernels.ns_jacobian(features, actions, W, eps)
    return (2.0 * J.T @ r.ravel()).reshape(W.shape)


BANDWIDTH_SCALES = (0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0)
CENTRE_RESTARTS = 8


def _fit_weights(F, Y, opts, ridge):
    m, nf = Y.shape[1], F.shape[1]
    W0 = np.linalg.solve(F.T @ F + ridge * np.eye(nf), F.T @ Y).T

    def resid(w):
        return kernels.ns_residuals(F, Y, np.ascontiguousarray(w.reshape(m, nf)), PREDICTION_EPS)

    def jac(w):
        return kernels.ns_jacobian(F, Y, np.ascontiguousarray(w.reshape(m, nf)), PREDICTION_EPS)

    return levenberg_marquardt(resid, W0.ravel(), opts, jac=jac)


def fit_nullspace_component(data, phi, seed=0, opts=None, ridge=1e-6, bandwidth=None, centres=None,
                            restarts=CENTRE_RESTARTS, scales=BANDWIDTH_SCALES):
    """Fit ``u_ns(x) = W phi(x)`` to raw observations.

    The objective only penalises the length of each prediction along its own
    direction, so the fit quality hinges on how well the feature map can
    represent the true component. Unless ``bandwidth`` is given, every
    combination of ``restarts`` k-means initialisations and bandwidths
    ``scale * default_bandwidth(centres)`` is fitted and the lowest
    objective wins.

    Parameters
    ----------
    data : Dataset or tuple of arrays
        Anything with ``x`` and ``u`` arrays, or an ``(x, u)`` pair.
    phi : int
        Number of radial basis functions; centres come from k-means.
    seed : int
        Seeds the k-means initialisations.
    opts : LmOptions, optional
    ridge : float
        Regulariser of the least-squares start ``u ~ W phi``.
    bandwidth : float, optional
        Fixed kernel width; disables the bandwidth search.
    centres : array_like, optional
        Fixed centres; disables the k-means restarts.
    restarts : int
    scales : sequence of float

    Returns
    -------
    RbfVectorModel
        With the final objective value and the per-iteration history.
    """
    X, Y = (data if isinstance(data, tuple) else (data.x, data.u))
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if len(X) == 0 or len(X) != len(Y):
        raise InvalidInputError("need a nonempty set of matching states and actions")
    if restarts < 1 or not len(scales):
        raise ConfigError("need at least one restart and one bandwidth scale")
    opts = opts or LmOptions()
    Y = np.ascontiguousarray(Y)
    if centres is not None:
        centre_sets = [np.atleast_2d(np.asarray(centres, dtype=float))]
    else:
        seeds = np.random.SeedSequence(seed).generate_state(restarts) if restarts > 1 else [seed]
        centre_sets = [kmeans_centres(X, phi, int(s)) for s in seeds]
    best = None
    for C in centre_sets:
        widths = [bandwidth] if bandwidth is not None else [s * default_bandwidth(C) for s in scales]
        for bw in widths:
            fmap = RbfFeatureMap(C, bw)
            F = np.ascontiguousarray(rbf_features(X, fmap))
            res = _fit_weights(F, Y, opts, ridge)
            if best is None or res.objective < best[1].objective:
                best = (fmap, res)
    fmap, res = best
    return RbfVectorModel(fmap, res.theta.reshape(Y.shape[1], fmap.n_features), res.objective, res.history)
