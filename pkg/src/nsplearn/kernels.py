"""Per-observation numeric kernels used inside the optimisation loops.

Each kernel has a jitted loop implementation (``*_nb``) and a vectorised
numpy implementation (``*_np``) with identical signatures. The public name is
bound to one of them by :mod:`nsplearn._accel`.
"""
import numpy as np

from ._accel import njit, pick


# --- row-space projection -------------------------------------------------


@njit
def _orthonormal_rows_nb(A, tol, Q):
    # Modified Gram-Schmidt with one re-orthogonalisation pass. Returns rank.
    k, U = A.shape
    scale = 0.0
    for i in range(k):
        s = 0.0
        for j in range(U):
            s += A[i, j] * A[i, j]
        if s > scale:
            scale = s
    scale = np.sqrt(scale)
    r = 0
    for i in range(k):
        for j in range(U):
            Q[r, j] = A[i, j]
        for _ in range(2):
            for m in range(r):
                d = 0.0
                for j in range(U):
                    d += Q[m, j] * Q[r, j]
                for j in range(U):
                    Q[r, j] -= d * Q[m, j]
        nrm = 0.0
        for j in range(U):
            nrm += Q[r, j] * Q[r, j]
        nrm = np.sqrt(nrm)
        if scale > 0.0 and nrm > tol * scale:
            for j in range(U):
                Q[r, j] /= nrm
            r += 1
    return r


@njit
def _rowspace_project_nb(A, V, tol):
    n, k, U = A.shape
    out = np.zeros((n, U))
    Q = np.empty((max(k, 1), U))
    bad = -1
    for p in range(n):
        r = _orthonormal_rows_nb(A[p], tol, Q)
        if r < k and bad < 0:
            bad = p
        for m in range(r):
            d = 0.0
            for j in range(U):
                d += Q[m, j] * V[p, j]
            for j in range(U):
                out[p, j] += d * Q[m, j]
    return out, bad


def _svd_rows(A, tol):
    n, k, U = A.shape
    if k == 0:
        return np.zeros((n, 0, U)), -1
    _, s, vt = np.linalg.svd(A, full_matrices=False)
    smax = s[:, :1]
    keep = (s > tol * smax) & (smax > 0.0)
    deficient = np.flatnonzero(keep.sum(axis=1) < k)
    bad = int(deficient[0]) if deficient.size else -1
    return vt * keep[:, :, None], bad


def _rowspace_project_np(A, V, tol):
    Vr, bad = _svd_rows(A, tol)
    coef = np.einsum("nkj,nj->nk", Vr, V)
    return np.einsum("nkj,nk->nj", Vr, coef), bad


@njit
def _rowspace_projectors_nb(A, tol):
    n, k, U = A.shape
    P = np.zeros((n, U, U))
    Q = np.empty((max(k, 1), U))
    bad = -1
    for p in range(n):
        r = _orthonormal_rows_nb(A[p], tol, Q)
        if r < k and bad < 0:
            bad = p
        for m in range(r):
            for i in range(U):
                for j in range(U):
                    P[p, i, j] += Q[m, i] * Q[m, j]
    return P, bad


def _rowspace_projectors_np(A, tol):
    Vr, bad = _svd_rows(A, tol)
    return np.einsum("nki,nkj->nij", Vr, Vr), bad


rowspace_project = pick(_rowspace_project_nb, _rowspace_project_np)
rowspace_projectors = pick(_rowspace_projectors_nb, _rowspace_projectors_np)


# --- null-space component objective -----------------------------------------


@njit
def _ns_residuals_nb(F, Y, W, eps):
    n, nf = F.shape
    m = W.shape[0]
    R = np.zeros((n, m))
    pred = np.empty(m)
    eps2 = eps * eps
    for p in range(n):
        nn = 0.0
        dot = 0.0
        for i in range(m):
            s = 0.0
            for j in range(nf):
                s += W[i, j] * F[p, j]
            pred[i] = s
            nn += s * s
            dot += s * Y[p, i]
        if nn < eps2:
            continue
        c = dot / nn - 1.0
        for i in range(m):
            R[p, i] = c * pred[i]
    return R


def _ns_residuals_np(F, Y, W, eps):
    pred = F @ W.T
    nn = np.einsum("ni,ni->n", pred, pred)
    ok = nn >= eps * eps
    c = np.where(ok, np.einsum("ni,ni->n", pred, Y) / np.where(ok, nn, 1.0) - 1.0, 0.0)
    return c[:, None] * pred


@njit
def _ns_jacobian_nb(F, Y, W, eps):
    n, nf = F.shape
    m = W.shape[0]
    J = np.zeros((n * m, m * nf))
    pred = np.empty(m)
    D = np.empty((m, m))
    eps2 = eps * eps
    for p in range(n):
        nn = 0.0
        dot = 0.0
        for i in range(m):
            s = 0.0
            for j in range(nf):
                s += W[i, j] * F[p, j]
            pred[i] = s
            nn += s * s
            dot += s * Y[p, i]
        if nn < eps2:
            continue
        c = dot / nn - 1.0
        for i in range(m):
            for l in range(m):
                g = Y[p, l] / nn - 2.0 * dot * pred[l] / (nn * nn)
                D[i, l] = pred[i] * g
            D[i, i] += c
        for i in range(m):
            row = p * m + i
            for l in range(m):
                d = D[i, l]
                if d == 0.0:
                    continue
                for j in range(nf):
                    J[row, l * nf + j] = d * F[p, j]
    return J


def _ns_jacobian_np(F, Y, W, eps):
    n, nf = F.shape
    m = W.shape[0]
    pred = F @ W.T
    nn = np.einsum("ni,ni->n", pred, pred)
    ok = nn >= eps * eps
    safe = np.where(ok, nn, 1.0)
    dot = np.einsum("ni,ni->n", pred, Y)
    c = dot / safe - 1.0
    g = Y / safe[:, None] - 2.0 * (dot / safe**2)[:, None] * pred
    D = pred[:, :, None] * g[:, None, :] + c[:, None, None] * np.eye(m)
    D[~ok] = 0.0
    return np.einsum("nil,nj->nilj", D, F).reshape(n * m, m * nf)


ns_residuals = pick(_ns_residuals_nb, _ns_residuals_np)
ns_jacobian = pick(_ns_jacobian_nb, _ns_jacobian_np)


# --- hyperspherical maps ----------------------------------------------------


@njit
def _spherical_nb(theta):
    n, d = theta.shape
    out = np.empty((n, d + 1))
    for p in range(n):
        sp = 1.0
        for i in range(d):
            out[p, i] = sp * np.cos(theta[p, i])
            sp *= np.sin(theta[p, i])
        out[p, d] = sp
    return out


def _spherical_np(theta):
    n, d = theta.shape
    sines = np.concatenate([np.ones((n, 1)), np.cumprod(np.sin(theta), axis=1)], axis=1)
    cosines = np.concatenate([np.cos(theta), np.ones((n, 1))], axis=1)
    return sines * cosines


@njit
def _spherical_jac_nb(theta):
    n, d = theta.shape
    J = np.zeros((n, d + 1, d))
    s = np.empty(d)
    c = np.empty(d)
    for p in range(n):
        for i in range(d):
            s[i] = np.sin(theta[p, i])
            c[i] = np.cos(theta[p, i])
        for i in range(d + 1):
            # component i = prod_{v<i} s_v * (c_i if i < d else 1)
            tail = c[i] if i < d else 1.0
            for j in range(min(i + 1, d)):
                val = 1.0
                for v in range(i):
                    val *= c[v] if v == j else s[v]
                if j == i:
                    val *= -s[i]
                else:
                    val *= tail
                J[p, i, j] = val
    return J


def _spherical_jac_np(theta):
    n, d = theta.shape
    s = np.sin(theta)
    c = np.cos(theta)
    J = np.zeros((n, d + 1, d))
    for i in range(d + 1):
        tail = c[:, i] if i < d else np.ones(n)
        for j in range(min(i + 1, d)):
            val = np.ones(n)
            for v in range(i):
                val = val * (c[:, v] if v == j else s[:, v])
            J[:, i, j] = val * (-s[:, i] if j == i else tail)
    return J


spherical = pick(_spherical_nb, _spherical_np)
spherical_jac = pick(_spherical_jac_nb, _spherical_jac_np)


# --- state-dependent constraint rows --------------------------------------


@njit
def _state_rows_nb(theta, prev, eps):
    # a = normalise((I - sum_j prev_j prev_j^T) v(theta)); norm is returned too
    n, d = theta.shape
    U = d + 1
    k = prev.shape[1]
    v = _spherical_nb(theta)
    a = np.empty((n, U))
    norms = np.empty(n)
    for p in range(n):
        for j in range(U):
            a[p, j] = v[p, j]
        for m in range(k):
            dd = 0.0
            for j in range(U):
                dd += prev[p, m, j] * v[p, j]
            for j in range(U):
                a[p, j] -= dd * prev[p, m, j]
        nrm = 0.0
        for j in range(U):
            nrm += a[p, j] * a[p, j]
        nrm = np.sqrt(nrm)
        norms[p] = nrm
        inv = 1.0 / max(nrm, eps)
        for j in range(U):
            a[p, j] *= inv
    return a, norms


def _state_rows_np(theta, prev, eps):
    v = _spherical_np(theta)
    w = v - np.einsum("nkj,nk->nj", prev, np.einsum("nkj,nj->nk", prev, v))
    norms = np.linalg.norm(w, axis=1)
    return w / np.maximum(norms, eps)[:, None], norms


@njit
def _state_row_terms_nb(theta, prev, Y, eps):
    n, d = theta.shape
    U = d + 1
    k = prev.shape[1]
    a, norms = _state_rows_nb(theta, prev, eps)
    dv = _spherical_jac_nb(theta)
    r = np.empty(n)
    grad = np.zeros((n, d))
    z = np.empty(U)
    for p in range(n):
        ay = 0.0
        for j in range(U):
            ay += a[p, j] * Y[p, j]
        r[p] = ay
        # gradient of a.y through the normalised projection: Q (I - a a^T) y / |w|
        for j in range(U):
            z[j] = Y[p, j] - ay * a[p, j]
        for m in range(k):
            dd = 0.0
            for j in range(U):
                dd += prev[p, m, j] * z[j]
            for j in range(U):
                z[j] -= dd * prev[p, m, j]
        inv = 1.0 / max(norms[p], eps)
        for i in range(d):
            g = 0.0
            for j in range(U):
                g += dv[p, j, i] * z[j]
            grad[p, i] = g * inv
    return r, grad


def _state_row_terms_np(theta, prev, Y, eps):
    a, norms = _state_rows_np(theta, prev, eps)
    dv = _spherical_jac_np(theta)
    r = np.einsum("nj,nj->n", a, Y)
    z = Y - r[:, None] * a
    z = z - np.einsum("nkj,nk->nj", prev, np.einsum("nkj,nj->nk", prev, z))
    grad = np.einsum("nji,nj->ni", dv, z) / np.maximum(norms, eps)[:, None]
    return r, grad


state_rows = pick(_state_rows_nb, _state_rows_np)
state_row_terms = pick(_state_row_terms_nb, _state_row_terms_np)

IMPLEMENTATIONS = {
    "rowspace_project": (_rowspace_project_nb, _rowspace_project_np),
    "rowspace_projectors": (_rowspace_projectors_nb, _rowspace_projectors_np),
    "ns_residuals": (_ns_residuals_nb, _ns_residuals_np),
    "ns_jacobian": (_ns_jacobian_nb, _ns_jacobian_np),
    "spherical": (_spherical_nb, _spherical_np),
    "spherical_jac": (_spherical_jac_nb, _spherical_jac_np),
    "state_rows": (_state_rows_nb, _state_rows_np),
    "state_row_terms": (_state_row_terms_nb, _state_row_terms_np),
}
