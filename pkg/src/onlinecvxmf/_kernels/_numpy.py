"""Pure-numpy reference kernels.

Same signatures and semantics as the numba kernels in ``_numba.py``; used when
numba is unavailable or ``ONLINECVXMF_BACKEND=numpy`` is set.
"""

from __future__ import annotations

import numpy as np

_SPREAD_EPS = 1e-14


def project_simplex(v):
    """Euclidean projection of ``v`` onto the probability simplex (sort based)."""
    v = np.asarray(v, dtype=np.float64)
    n = v.shape[0]
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, n + 1)
    rho = np.count_nonzero(u - css / ind > 0)
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def kkt_residual(G, r, lam, kappa, alpha):
    """Max subgradient violation of the elastic-net problem at ``alpha``."""
    g = r - G @ alpha - 2.0 * kappa * alpha
    nz = alpha != 0
    res = np.where(nz, np.abs(g - lam * np.sign(alpha)), np.maximum(np.abs(g) - lam, 0.0))
    return float(res.max()) if res.size else 0.0


def _cd_sweeps(G, r, lam, kappa, alpha, tol, max_iter):
    k = r.shape[0]
    grad = r - G @ alpha
    it = 0
    for it in range(1, max_iter + 1):
        for j in range(k):
            denom = G[j, j] + 2.0 * kappa
            if denom <= 0.0:
                new = 0.0
            else:
                rho = grad[j] + G[j, j] * alpha[j]
                new = np.sign(rho) * max(abs(rho) - lam, 0.0) / denom
            delta = new - alpha[j]
            if delta != 0.0:
                grad -= G[:, j] * delta
                alpha[j] = new
        if kkt_residual(G, r, lam, kappa, alpha) <= tol:
            break
    return it


def _polish(G, r, lam, kappa, alpha):
    """Exact solve on the current support and sign pattern, kept only if it helps."""
    S = np.flatnonzero(alpha)
    if S.size == 0:
        return alpha
    M = G[np.ix_(S, S)] + 2.0 * kappa * np.eye(S.size)
    z = np.linalg.lstsq(M, r[S] - lam * np.sign(alpha[S]), rcond=None)[0]
    if np.any(np.sign(z) != np.sign(alpha[S])):
        return alpha
    cand = np.zeros_like(alpha)
    cand[S] = z
    if kkt_residual(G, r, lam, kappa, cand) < kkt_residual(G, r, lam, kappa, alpha):
        return cand
    return alpha


def lasso_cd(G, r, lam, kappa, alpha, tol, max_iter):
    """Cyclic coordinate descent for 0.5||x - D a||^2 + lam|a|_1 + kappa|a|^2.

    Works on the Gram form ``G = D^T D``, ``r = D^T x``. Stops once the KKT
    residual drops to ``tol``. Ill-conditioned problems where the sweep cap
    is hit get an exact solve on the support found so far, then one more
    round of sweeps.
    """
    alpha = np.array(alpha, dtype=np.float64)
    it = 0
    for _ in range(2):
        it += _cd_sweeps(G, r, lam, kappa, alpha, tol, max_iter)
        if kkt_residual(G, r, lam, kappa, alpha) <= tol:
            break
        alpha = _polish(G, r, lam, kappa, alpha)
        if kkt_residual(G, r, lam, kappa, alpha) <= tol:
            break
    return alpha, it


def lasso_cd_many(D, X, lam, kappa, tol, max_iter):
    """Sparse-code every column of ``X`` against ``D``; returns k x n codes."""
    k = D.shape[1]
    n = X.shape[1]
    G = D.T @ D
    R = D.T @ X
    out = np.zeros((k, n))
    zero = np.zeros(k)
    for i in range(n):
        out[:, i], _ = lasso_cd(G, R[:, i], lam, kappa, zero, tol, max_iter)
    return out


def hull_lipschitz(X, a):
    """Gradient Lipschitz constant of w -> 0.5 a ||X w||^2 on the simplex.

    Only directions with zero coordinate sum matter, so the centred matrix is
    used; this is far tighter than sigma_max(X^T X) when the points sit far
    from the origin.
    """
    m, n = X.shape
    Xc = X - X.mean(axis=1)[:, None]
    M = Xc @ Xc.T if m <= n else Xc.T @ Xc
    top = np.linalg.eigvalsh(M)[-1]
    if top <= _SPREAD_EPS * float(np.sum(X * X)):
        return 0.0  # all points coincide up to rounding
    return a * top * (1.0 + 1e-10)


def _q(X, c, a, w):
    d = X @ w
    return 0.5 * a * (d @ d) - c @ d, d


def column_pg(X, c, a, w0, tol, max_iter):
    """Projected gradient for min_w 0.5 a ||X w||^2 - c^T X w over the simplex.

    Fixed step 1/L; each accepted iterate does not increase the objective.
    Returns ``(w, q, n_iter)``.
    """
    w = np.array(w0, dtype=np.float64)
    q, d = _q(X, c, a, w)
    n = X.shape[1]
    if n == 1:
        return w, q, 0
    L = hull_lipschitz(X, a)
    if L <= 0.0:
        return w, q, 0
    it = 0
    for it in range(1, max_iter + 1):
        g = X.T @ (a * d - c)
        w_new = project_simplex(w - g / L)
        q_new, d_new = _q(X, c, a, w_new)
        if q_new > q:
            break
        dec = q - q_new
        w, d, q = w_new, d_new, q_new
        if dec <= tol * max(1.0, abs(q)):
            break
    return w, q, it


def best_candidate(Xhat, x, c, a, w0, tol, max_iter):
    """Evaluate the N+1 swap candidates for one representative set.

    Candidate 0 is ``Xhat`` itself; candidate l >= 1 has column l-1 replaced
    by ``x``. Each is solved by ``column_pg`` warm-started at ``w0``. Returns
    ``(l_star, w_star, q_values)``; ties go to the smaller index.
    """
    n = Xhat.shape[1]
    qs = np.empty(n + 1)
    best_l = 0
    best_w = np.array(w0, dtype=np.float64)
    best_q = np.inf
    Y = np.array(Xhat, dtype=np.float64)
    for l in range(n + 1):
        if l > 0:
            if l > 1:
                Y[:, l - 2] = Xhat[:, l - 2]
            Y[:, l - 1] = x
        w, q, _ = column_pg(Y, c, a, w0, tol, max_iter)
        qs[l] = q
        if q < best_q:
            best_q = q
            best_l = l
            best_w = w
    return best_l, best_w, qs
