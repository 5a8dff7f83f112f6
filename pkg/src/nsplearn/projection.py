"""Pseudo-inverse, null-space projectors and spherical unit-vector parameters."""
import numpy as np

from .errors import DegenerateConstraintError, DimensionMismatchError, InvalidInputError

RANK_TOL = 1e-10


def pseudo_inverse(M, tol=1e-10):
    """Moore-Penrose pseudo-inverse by SVD.

    Singular values below ``tol * sigma_max`` are treated as zero.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(M)):
        raise InvalidInputError("matrix has non-finite entries")
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    m, n = M.shape
    if M.size == 0:
        return np.zeros((n, m))
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((n, m))
    keep = s > tol * s[0]
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def projection_from_constraint(A):
    """Null-space projector ``I - pinv(A) A`` for a full-row-rank constraint.

    Parameters
    ----------
    A : array_like, shape (k, U)
        Constraint rows. ``k = 0`` gives the identity.

    Returns
    -------
    N : ndarray, shape (U, U)

    Raises
    ------
    DegenerateConstraintError
        If ``A`` does not have rank ``k``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    k, U = A.shape
    if k == 0:
        return np.eye(U)
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("constraint has non-finite entries")
    if k > U:
        raise DimensionMismatchError(f"{k} constraint rows exceed action dimension {U}")
    _, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s[0] == 0.0 or s[-1] <= RANK_TOL * s[0]:
        raise DegenerateConstraintError(f"constraint of {k} rows is rank deficient")
    # V V^T equals pinv(A) A for full row rank and is symmetric by construction.
    return np.eye(U) - Vt.T @ Vt


def unit_vector_from_angles(theta, U=None):
    """Map ``U - 1`` hyperspherical angles to a unit vector in R^U.

    ``a_1 = cos t_1``, ``a_i = sin t_1 ... sin t_{i-1} cos t_i`` and the last
    component is the product of all sines.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.ndim != 1:
        raise DimensionMismatchError("theta must be a vector")
    if U is None:
        U = theta.size + 1
    if U < 2 or theta.size != U - 1:
        raise DimensionMismatchError(f"need {U - 1} angles for U={U}, got {theta.size}")
    a = np.empty(U)
    sin_prod = 1.0
    for i in range(U - 1):
        a[i] = sin_prod * np.cos(theta[i])
        sin_prod *= np.sin(theta[i])
    a[U - 1] = sin_prod
    return a


def angles_from_unit_vector(a):
    """Inverse of :func:`unit_vector_from_angles`.

    Angles lie in ``[0, pi]`` except the last, which is wrapped to
    ``[0, 2 pi)``. The input is normalised before conversion.
    """
    a = np.asarray(a, dtype=float).ravel()
    if a.size < 2:
        raise DimensionMismatchError("need at least two components")
    norm = np.linalg.norm(a)
    if not np.isfinite(norm) or norm == 0.0:
        raise InvalidInputError("cannot take angles of a zero or non-finite vector")
    if abs(norm - 1.0) > 1e-8:
        raise InvalidInputError(f"vector is not unit length (norm {norm!r})")
    a = a / norm
    U = a.size
    theta = np.empty(U - 1)
    for i in range(U - 2):
        theta[i] = np.arctan2(np.linalg.norm(a[i + 1:]), a[i])
    theta[U - 2] = np.mod(np.arctan2(a[U - 1], a[U - 2]), 2.0 * np.pi)
    return theta


def orthonormal_complement_basis(rows, U=None, tol=1e-8):
    """Orthonormal basis of the orthogonal complement of ``rows``.

    Gram-Schmidt (two passes) of the standard basis against the given rows.

    Parameters
    ----------
    rows : array_like, shape (k, U)
        Pairwise orthonormal vectors. May be empty if ``U`` is given.
    U : int, optional
        Ambient dimension; required when ``rows`` is empty.

    Returns
    -------
    ndarray, shape (U - k, U)
    """
    rows = np.asarray(rows, dtype=float)
    if rows.size == 0:
        if U is None:
            raise DimensionMismatchError("U is required when rows is empty")
        rows = np.zeros((0, U))
    rows = np.atleast_2d(rows)
    k, dim = rows.shape
    if U is None:
        U = dim
    if dim != U:
        raise DimensionMismatchError(f"rows have dimension {dim}, expected {U}")
    if k > U:
        raise InvalidInputError("more rows than dimensions")
    if k and np.max(np.abs(rows @ rows.T - np.eye(k))) > tol:
        raise InvalidInputError("rows are not orthonormal")
    basis = [r for r in rows]
    out = []
    for e in np.eye(U):
        if len(basis) == U:
            break
        v = e.copy()
        for _ in range(2):
            for b in basis:
                v -= (b @ v) * b
        n = np.linalg.norm(v)
        if n > 1e-6:
            v /= n
            basis.append(v)
            out.append(v)
    return np.array(out).reshape(len(out), U)
