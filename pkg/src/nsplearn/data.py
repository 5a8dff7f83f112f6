"""Synthetic constrained demonstrations with their ground-truth decomposition.

Every observation follows ``u = pinv(A) b + N pi`` with ``N = I - pinv(A) A``.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from . import arm as armlib
from .errors import DimensionMismatchError, GenerationError, InvalidInputError
from .policies import PolicySpec, joint_attractor_policy, task_linear_attractor
from .projection import pseudo_inverse, unit_vector_from_angles


@dataclass(frozen=True)
class GroundTruth:
    A: np.ndarray
    b: np.ndarray
    pi: np.ndarray
    u_ts: np.ndarray
    u_ns: np.ndarray

    @property
    def N(self):
        return np.eye(len(self.pi)) - pseudo_inverse(self.A) @ self.A


@dataclass(frozen=True)
class Observation:
    x: np.ndarray
    u: np.ndarray
    ground_truth: GroundTruth = None


@dataclass(eq=False)
class Dataset:
    """Observations stored column-wise.

    ``A`` has shape ``(N, k, m)`` and ``b`` shape ``(N, k)``; ground-truth
    arrays are ``None`` when the dataset carries actions only.
    """

    x: np.ndarray
    u: np.ndarray
    A: np.ndarray = None
    b: np.ndarray = None
    pi: np.ndarray = None
    u_ts: np.ndarray = None
    u_ns: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        self.u = np.atleast_2d(np.asarray(self.u, dtype=float))
        if len(self.x) != len(self.u):
            raise DimensionMismatchError("states and actions differ in count")
        gt = [self.A, self.b, self.pi, self.u_ts, self.u_ns]
        if any(g is not None for g in gt) and not all(g is not None for g in gt):
            raise InvalidInputError("ground truth must be complete or absent")
        if self.has_ground_truth:
            n, m = self.u.shape
            self.A = np.asarray(self.A, dtype=float).reshape(n, -1, m)
            self.b = np.asarray(self.b, dtype=float).reshape(n, -1)
            if self.b.shape[1] != self.A.shape[1]:
                raise DimensionMismatchError("b and A disagree on constraint rows")
            for name in ("pi", "u_ts", "u_ns"):
                arr = np.asarray(getattr(self, name), dtype=float).reshape(n, m)
                setattr(self, name, arr)
        bounds = self.meta.get("trajectories")
        if bounds is not None:
            edges = [i for pair in bounds for i in pair]
            ok = edges and edges[0] == 0 and edges[-1] == len(self.x) and all(
                a == b for a, b in zip(edges[1:-1:2], edges[2::2])) and all(
                lo < hi for lo, hi in bounds)
            if not ok:
                raise InvalidInputError("trajectory boundaries do not partition the observations")

    def __len__(self):
        return len(self.x)

    def __getitem__(self, i):
        gt = None
        if self.has_ground_truth:
            gt = GroundTruth(self.A[i], self.b[i], self.pi[i], self.u_ts[i], self.u_ns[i])
        return Observation(self.x[i], self.u[i], gt)

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def __eq__(self, other):
        if not isinstance(other, Dataset) or self.meta != other.meta:
            return False
        for name in ("x", "u", "A", "b", "pi", "u_ts", "u_ns"):
            a, b = getattr(self, name), getattr(other, name)
            if (a is None) != (b is None):
                return False
            if a is not None and (a.shape != b.shape or not np.array_equal(a, b)):
                return False
        return True

    @property
    def has_ground_truth(self):
        return self.A is not None

    @property
    def state_dim(self):
        return self.x.shape[1]

    @property
    def action_dim(self):
        return self.u.shape[1]

    def true_projections(self):
        """Stack of ``I - pinv(A_n) A_n``."""
        if not self.has_ground_truth:
            raise InvalidInputError("dataset has no ground truth")
        Ap = np.linalg.pinv(self.A, rcond=1e-10)
        return np.eye(self.action_dim) - Ap @ self.A

    def trajectories(self):
        bounds = self.meta.get("trajectories") or [[0, len(self)]]
        return [slice(lo, hi) for lo, hi in bounds]


NOISE_STREAM = 3


def _toy_rng(seed, stream):
    return np.random.default_rng([int(seed), int(stream)])


def draw_toy_angle(seed):
    """Constraint angle in (0, pi] for the toy problem."""
    return float(np.pi - _toy_rng(seed, 0).uniform(0.0, np.pi))


def generate_toy_dataset(policy, n_points, seed, angle=None, beta=0.1, stream=1):
    """Points ``x ~ U(-1, 1)^2`` under a single 1-D constraint in the plane.

    Parameters
    ----------
    policy : PolicySpec
        Null-space policy.
    n_points : int
    seed : int
    angle : float, optional
        Constraint direction ``(cos a, sin a)``. Drawn from ``seed`` when
        omitted, so a training and a test set built from the same seed share
        the constraint.
    beta : float
        Gain of the task-space attractor.
    stream : int
        Independent random stream for the points; use different streams for
        training and test data.
    """
    if not isinstance(policy, PolicySpec):
        raise InvalidInputError("policy must be a PolicySpec")
    if n_points < 1:
        raise InvalidInputError("n_points must be at least 1")
    if angle is None:
        angle = draw_toy_angle(seed)
    a = unit_vector_from_angles([angle])
    rng = _toy_rng(seed, stream)
    x = rng.uniform(-1.0, 1.0, size=(n_points, 2))
    rho_star = rng.uniform(-2.0, 2.0, size=n_points)
    rho = x @ a
    b = task_linear_attractor(rho, rho_star, beta)
    pi = policy(x)
    N = np.eye(2) - np.outer(a, a)
    u_ts = b[:, None] * a[None, :]
    u_ns = pi @ N.T
    meta = {
        "scenario": "toy",
        "seed": int(seed),
        "stream": int(stream),
        "constraint": {"type": "fixed", "angle": float(angle), "rows": [a.tolist()]},
        "policy": policy.to_dict(),
        "noise_fraction": 0.0,
    }
    A = np.broadcast_to(a, (n_points, 1, 2)).copy()
    return Dataset(x, u_ts + u_ns, A, b[:, None], pi, u_ts, u_ns, meta)


def _draw_start(rng):
    deg = np.array([rng.uniform(0, 10), rng.uniform(90, 100), rng.uniform(0, 10)])
    return np.deg2rad(deg)


def _draw_target(rng):
    return np.array([rng.uniform(-1.0, 1.0), rng.uniform(0.0, 2.0), rng.uniform(0.0, np.pi)])


def rollout(lam, q0, r_star, n_steps, dt, arm=armlib.DEFAULT_ARM, null_policy=None, beta=0.1):
    """Integrate ``q <- q + dt u`` with ``u = pinv(A) b + N pi`` under ``A = Lambda J``.

    Returns arrays ``(q, u, A, b, pi, u_ts, u_ns)`` with one row per step.
    """
    lam = np.atleast_2d(np.asarray(lam, dtype=float))
    null_policy = null_policy or joint_attractor_policy
    q = np.array(q0, dtype=float)
    out = {k: [] for k in ("q", "u", "A", "b", "pi", "u_ts", "u_ns")}
    for step in range(n_steps):
        A = armlib.task_constraint(lam, q, arm, check=False)
        s = np.linalg.svd(A, compute_uv=False)
        if s[-1] <= 1e-10 * s[0]:
            raise GenerationError(f"constraint became singular at step {step}")
        b = lam @ task_linear_attractor(armlib.forward_kinematics(q, arm), r_star, beta)
        pi = null_policy(q)
        Ap = pseudo_inverse(A)
        u_ts = Ap @ b
        u_ns = pi - Ap @ (A @ pi)
        u = u_ts + u_ns
        for k, v in zip(out, (q.copy(), u, A, b, pi, u_ts, u_ns)):
            out[k].append(v)
        q = q + dt * u
    return tuple(np.array(v) for v in out.values())


def generate_arm_trajectories(lam, n_traj, n_steps, dt=0.1, seed=0, arm=armlib.DEFAULT_ARM, beta=0.1,
                              null_policy=None, max_redraws=1000, name=None, stream=1):
    """Trajectories of the three-link arm under the selection ``lam``.

    Each trajectory draws a start configuration and then a task target,
    redrawing the target until inverse kinematics from the start succeeds.
    ``stream`` selects an independent random stream for the same ``seed``,
    e.g. 1 for training and 2 for test trajectories.
    """
    lam = np.atleast_2d(np.asarray(lam, dtype=float))
    if n_traj < 1 or n_steps < 1:
        raise InvalidInputError("n_traj and n_steps must be at least 1")
    if not dt > 0:
        raise InvalidInputError("dt must be positive")
    rng = np.random.default_rng([int(seed), int(stream)])
    parts = []
    bounds = []
    targets = []
    for _ in range(n_traj):
        q0 = _draw_start(rng)
        for _ in range(max_redraws):
            r_star = _draw_target(rng)
            if armlib.ik_feasible(r_star, lam, arm, q0):
                break
        else:
            raise GenerationError(f"no feasible target after {max_redraws} draws")
        parts.append(rollout(lam, q0, r_star, n_steps, dt, arm, null_policy, beta))
        lo = len(bounds) and bounds[-1][1]
        bounds.append([lo, lo + n_steps])
        targets.append(r_star.tolist())
    q, u, A, b, pi, u_ts, u_ns = (np.concatenate(c) for c in zip(*parts))
    meta = {
        "scenario": name or "arm",
        "seed": int(seed),
        "stream": int(stream),
        "constraint": {"type": "selection", "lambda": lam.tolist(), "links": list(arm.link_lengths)},
        "policy": PolicySpec("joint_attractor").to_dict() if null_policy is None else {"kind": "custom"},
        "noise_fraction": 0.0,
        "dt": float(dt),
        "targets": targets,
        "trajectories": bounds,
    }
    return Dataset(q, u, A, b, pi, u_ts, u_ns, meta)


def add_policy_noise(dataset, noise_fraction, seed):
    """Re-synthesise actions with a noisy null-space policy.

    Noise is isotropic Gaussian with per-component variance
    ``noise_fraction`` times the component-averaged variance of ``pi``. Only
    ``u`` changes; the ground-truth arrays stay noiseless.
    """
    if not 0.0 <= noise_fraction <= 1.0:
        raise InvalidInputError("noise_fraction must be in [0, 1]")
    if not dataset.has_ground_truth:
        raise InvalidInputError("adding policy noise needs ground truth")
    if noise_fraction == 0.0:
        return dataset
    var = float(np.mean(np.var(dataset.pi, axis=0)))
    rng = np.random.default_rng([int(seed), NOISE_STREAM])
    eps = rng.normal(0.0, np.sqrt(noise_fraction * var), size=dataset.pi.shape)
    N = dataset.true_projections()
    u = dataset.u_ts + np.einsum("nij,nj->ni", N, dataset.pi + eps)
    meta = dict(dataset.meta, noise_fraction=float(noise_fraction), noise_seed=int(seed))
    return replace(dataset, u=u, meta=meta)
