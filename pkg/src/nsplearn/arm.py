"""Kinematic model of a planar three-link arm.

Joint angles are relative; the absolute angle of link ``i`` is the sum of the
first ``i`` joints, measured from the +x axis with the base at the origin and
z pointing up. The task pose is ``(r_x, r_z, r_theta)``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConstraintError, DimensionMismatchError, InvalidInputError
from .projection import RANK_TOL

LAMBDA_XZ = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
LAMBDA_XTHETA = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
LAMBDA_ZTHETA = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])

SELECTIONS = {
    "xz": LAMBDA_XZ,
    "xtheta": LAMBDA_XTHETA,
    "ztheta": LAMBDA_ZTHETA,
}


@dataclass(frozen=True)
class ArmModel:
    link_lengths: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        lengths = tuple(float(v) for v in self.link_lengths)
        if len(lengths) != 3 or min(lengths) <= 0 or not all(np.isfinite(lengths)):
            raise InvalidInputError(f"need three positive link lengths, got {self.link_lengths!r}")
        object.__setattr__(self, "link_lengths", lengths)

    @property
    def reach(self):
        return sum(self.link_lengths)

    def forward_kinematics(self, q):
        return forward_kinematics(q, self)

    def jacobian(self, q):
        return jacobian(q, self)


DEFAULT_ARM = ArmModel()


def _joints(q):
    q = np.asarray(q, dtype=float)
    if q.shape[-1] != 3:
        raise DimensionMismatchError(f"expected 3 joint angles, got shape {q.shape}")
    return q


def forward_kinematics(q, arm=DEFAULT_ARM):
    """End-effector pose for one configuration or a stack of them."""
    q = _joints(q)
    c = np.cumsum(q, axis=-1)
    l = np.asarray(arm.link_lengths)
    return np.stack([np.cos(c) @ l, np.sin(c) @ l, c[..., 2]], axis=-1)


def jacobian(q, arm=DEFAULT_ARM):
    """Analytic ``d pose / d q``, shape ``(..., 3, 3)``."""
    q = _joints(q)
    c = np.cumsum(q, axis=-1)
    l = np.asarray(arm.link_lengths)
    # joint j moves every link from j onwards
    lx = -np.sin(c) * l
    lz = np.cos(c) * l
    tail_x = np.cumsum(lx[..., ::-1], axis=-1)[..., ::-1]
    tail_z = np.cumsum(lz[..., ::-1], axis=-1)[..., ::-1]
    ones = np.ones_like(tail_x)
    return np.stack([tail_x, tail_z, ones], axis=-2)


def task_constraint(lam, q, arm=DEFAULT_ARM, check=True):
    """Constraint ``Lambda J(q)``; a stack of ``q`` gives a stack of constraints."""
    lam = np.atleast_2d(np.asarray(lam, dtype=float))
    A = lam @ jacobian(q, arm)
    if check:
        flat = A.reshape(-1, *A.shape[-2:])
        s = np.linalg.svd(flat, compute_uv=False)
        bad = np.flatnonzero(s[:, -1] <= RANK_TOL * s[:, 0])
        if bad.size:
            raise DegenerateConstraintError("Lambda J is rank deficient", index=int(bad[0]) if A.ndim > 2 else None)
    return A


def wrap_angle(a):
    return (np.asarray(a) + np.pi) % (2.0 * np.pi) - np.pi


def selected_error(r_star, r, lam):
    """``Lambda (r* - r)`` with the orientation difference wrapped to (-pi, pi]."""
    d = np.asarray(r_star, dtype=float) - np.asarray(r, dtype=float)
    d = np.concatenate([d[..., :2], wrap_angle(d[..., 2:])], axis=-1)
    return d @ np.atleast_2d(lam).T


def ik_feasible(r_star, lam, arm=DEFAULT_ARM, q_init=(0.0, 0.0, 0.0), tol=1e-6, max_iter=200, damping=0.1):
    """Whether damped least squares reaches the selected coordinates of ``r_star``.

    ``r_star`` is either a full pose or just the selected coordinates.
    """
    lam = np.atleast_2d(np.asarray(lam, dtype=float))
    r_star = np.asarray(r_star, dtype=float)
    if r_star.size == lam.shape[0] and lam.shape[0] != 3:
        # only selected coordinates were given; lift them into a full pose
        r_star = lam.T @ r_star
    q = np.array(q_init, dtype=float)
    k = lam.shape[0]
    for _ in range(max_iter + 1):
        e = selected_error(r_star, forward_kinematics(q, arm), lam)
        if np.linalg.norm(e) < tol:
            return True
        Js = lam @ jacobian(q, arm)
        q = q + Js.T @ np.linalg.solve(Js @ Js.T + damping**2 * np.eye(k), e)
    return False
