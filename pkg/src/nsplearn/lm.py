"""Levenberg-Marquardt for small dense nonlinear least-squares problems."""
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, InvalidStartError


@dataclass(frozen=True)
class LmOptions:
    damping: float = 1e-3
    damping_up: float = 10.0
    damping_down: float = 0.1
    max_iter: int = 500
    rtol: float = 1e-10
    multistart: int = 8
    seed: int = 0

    def __post_init__(self):
        for name in ("damping", "damping_up", "damping_down", "max_iter", "rtol", "multistart"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"LmOptions.{name} must be positive")


@dataclass
class LmResult:
    theta: np.ndarray
    objective: float
    n_iter: int
    history: list = field(default_factory=list)
    reason: str = ""


def fd_jacobian(residual_fn, theta, r0=None):
    """Central-difference Jacobian with step ``1e-6 * max(1, |theta_i|)``."""
    theta = np.asarray(theta, dtype=float)
    if r0 is None:
        r0 = np.asarray(residual_fn(theta), dtype=float).ravel()
    J = np.empty((r0.size, theta.size))
    for i in range(theta.size):
        h = 1e-6 * max(1.0, abs(theta[i]))
        tp = theta.copy()
        tm = theta.copy()
        tp[i] += h
        tm[i] -= h
        rp = np.asarray(residual_fn(tp), dtype=float).ravel()
        rm = np.asarray(residual_fn(tm), dtype=float).ravel()
        J[:, i] = (rp - rm) / (2.0 * h)
    return J


def levenberg_marquardt(residual_fn, theta0, opts=None, jac=None):
    """Minimise ``sum(residual_fn(theta)**2)``.

    Parameters
    ----------
    residual_fn : callable
        Maps a parameter vector to a residual array (any shape; flattened).
    theta0 : array_like
        Starting point.
    opts : LmOptions, optional
    jac : callable, optional
        Returns the residual Jacobian ``(n_residuals, n_params)``. Central
        finite differences are used when omitted.

    Returns
    -------
    LmResult
        ``history`` holds the objective after every accepted step, starting
        with the objective at ``theta0``; it never increases.
    """
    opts = opts or LmOptions()
    theta = np.array(theta0, dtype=float).ravel()
    shape = np.shape(theta0)

    def resid(t):
        return np.asarray(residual_fn(t.reshape(shape)), dtype=float).ravel()

    def jacobian(t, r):
        if jac is None:
            return fd_jacobian(resid, t, r)
        return np.asarray(jac(t.reshape(shape)), dtype=float).reshape(r.size, t.size)

    r = resid(theta)
    if not np.all(np.isfinite(r)):
        raise InvalidStartError("residuals are not finite at the starting point")
    f = float(r @ r)
    history = [f]
    lam = opts.damping
    reason = "max_iter"
    it = 0
    if f == 0.0:
        return LmResult(theta.reshape(shape), f, 0, history, "zero_residual")
    while it < opts.max_iter:
        it += 1
        J = jacobian(theta, r)
        A = J.T @ J
        g = J.T @ r
        diag = np.diag(A).copy()
        floor = 1e-9 * diag.max() if diag.max() > 0 else 1.0
        diag = np.maximum(diag, floor)
        accepted = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(A + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= opts.damping_up
                continue
            cand = theta + step
            r_new = resid(cand)
            f_new = float(r_new @ r_new) if np.all(np.isfinite(r_new)) else np.inf
            if f_new < f:
                accepted = True
                break
            lam *= opts.damping_up
        if not accepted:
            reason = "no_decrease"
            break
        lam = max(lam * opts.damping_down, 1e-15)
        decrease = f - f_new
        theta, r, f = cand, r_new, f_new
        history.append(f)
        if f == 0.0:
            reason = "zero_residual"
            break
        if decrease <= opts.rtol * history[-2]:
            reason = "rtol"
            break
    return LmResult(theta.reshape(shape), f, it, history, reason)
