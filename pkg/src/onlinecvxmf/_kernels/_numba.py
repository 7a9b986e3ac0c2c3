"""numba-compiled kernels; loop-level twins of ``_numpy.py``."""

from __future__ import annotations

import numpy as np
from numba import njit

# centred spread below this fraction of ||X||_F^2 is rounding noise: points coincide
_SPREAD_EPS = 1e-14


@njit(cache=True)
def project_simplex(v):
    n = v.shape[0]
    u = np.sort(v)[::-1]
    css = 0.0
    rho = 0
    theta_css = 0.0
    for i in range(n):
        css += u[i]
        if u[i] - (css - 1.0) / (i + 1) > 0.0:
            rho = i + 1
            theta_css = css - 1.0
    theta = theta_css / rho
    w = np.empty(n)
    for i in range(n):
        w[i] = max(v[i] - theta, 0.0)
    return w


@njit(cache=True)
def kkt_residual(G, r, lam, kappa, alpha):
    k = r.shape[0]
    worst = 0.0
    for j in range(k):
        g = r[j] - 2.0 * kappa * alpha[j]
        for l in range(k):
            g -= G[j, l] * alpha[l]
        if alpha[j] != 0.0:
            v = abs(g - lam * np.sign(alpha[j]))
        else:
            v = max(abs(g) - lam, 0.0)
        if v > worst:
            worst = v
    return worst


@njit(cache=True)
def _cd_sweeps(G, r, lam, kappa, alpha, tol, max_iter):
    k = r.shape[0]
    grad = r.copy()
    for j in range(k):
        for l in range(k):
            grad[j] -= G[j, l] * alpha[l]
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
                for l in range(k):
                    grad[l] -= G[l, j] * delta
                alpha[j] = new
        if kkt_residual(G, r, lam, kappa, alpha) <= tol:
            break
    return it


@njit(cache=True)
def _polish(G, r, lam, kappa, alpha):
    # exact solve on the current support and sign pattern
    k = r.shape[0]
    S = np.flatnonzero(alpha != 0.0)
    s = S.shape[0]
    if s == 0:
        return alpha
    M = np.empty((s, s))
    b = np.empty(s)
    for p in range(s):
        b[p] = r[S[p]] - lam * np.sign(alpha[S[p]])
        for q in range(s):
            M[p, q] = G[S[p], S[q]]
        M[p, p] += 2.0 * kappa
    z = np.linalg.lstsq(M, b)[0]
    cand = np.zeros(k)
    for p in range(s):
        if np.sign(z[p]) != np.sign(alpha[S[p]]):
            return alpha
        cand[S[p]] = z[p]
    if kkt_residual(G, r, lam, kappa, cand) < kkt_residual(G, r, lam, kappa, alpha):
        return cand
    return alpha


@njit(cache=True)
def lasso_cd(G, r, lam, kappa, alpha, tol, max_iter):
    alpha = alpha.copy()
    it = 0
    for _ in range(2):
        it += _cd_sweeps(G, r, lam, kappa, alpha, tol, max_iter)
        if kkt_residual(G, r, lam, kappa, alpha) <= tol:
            break
        alpha = _polish(G, r, lam, kappa, alpha)
        if kkt_residual(G, r, lam, kappa, alpha) <= tol:
            break
    return alpha, it


@njit(cache=True)
def lasso_cd_many(D, X, lam, kappa, tol, max_iter):
    k = D.shape[1]
    n = X.shape[1]
    G = D.T @ D
    R = D.T @ X
    out = np.zeros((k, n))
    zero = np.zeros(k)
    for i in range(n):
        a, _ = lasso_cd(G, R[:, i].copy(), lam, kappa, zero, tol, max_iter)
        out[:, i] = a
    return out


@njit(cache=True)
def hull_lipschitz(X, a):
    m, n = X.shape
    Xc = np.empty((m, n))
    for i in range(m):
        mu = 0.0
        for j in range(n):
            mu += X[i, j]
        mu /= n
        for j in range(n):
            Xc[i, j] = X[i, j] - mu
    if m <= n:
        M = np.zeros((m, m))
        for i in range(m):
            for p in range(i, m):
                s = 0.0
                for j in range(n):
                    s += Xc[i, j] * Xc[p, j]
                M[i, p] = s
                M[p, i] = s
    else:
        M = np.zeros((n, n))
        for i in range(n):
            for p in range(i, n):
                s = 0.0
                for j in range(m):
                    s += Xc[j, i] * Xc[j, p]
                M[i, p] = s
                M[p, i] = s
    top = np.linalg.eigvalsh(M)[-1]
    scale = 0.0
    for i in range(m):
        for j in range(n):
            scale += X[i, j] * X[i, j]
    if top <= _SPREAD_EPS * scale:
        return 0.0
    return a * top * (1.0 + 1e-10)


@njit(cache=True)
def _matvec(X, w, out):
    m, n = X.shape
    for i in range(m):
        s = 0.0
        for j in range(n):
            s += X[i, j] * w[j]
        out[i] = s


@njit(cache=True)
def _q(d, c, a):
    s = 0.0
    t = 0.0
    for i in range(d.shape[0]):
        s += d[i] * d[i]
        t += c[i] * d[i]
    return 0.5 * a * s - t


@njit(cache=True)
def column_pg(X, c, a, w0, tol, max_iter):
    m, n = X.shape
    w = w0.copy()
    d = np.empty(m)
    _matvec(X, w, d)
    q = _q(d, c, a)
    if n == 1:
        return w, q, 0
    L = hull_lipschitz(X, a)
    if L <= 0.0:
        return w, q, 0
    resid = np.empty(m)
    step = np.empty(n)
    d_new = np.empty(m)
    it = 0
    for it in range(1, max_iter + 1):
        for i in range(m):
            resid[i] = a * d[i] - c[i]
        for j in range(n):
            s = 0.0
            for i in range(m):
                s += X[i, j] * resid[i]
            step[j] = w[j] - s / L
        w_new = project_simplex(step)
        _matvec(X, w_new, d_new)
        q_new = _q(d_new, c, a)
        if q_new > q:
            break
        dec = q - q_new
        w = w_new
        d[:] = d_new
        q = q_new
        if dec <= tol * max(1.0, abs(q)):
            break
    return w, q, it


@njit(cache=True)
def best_candidate(Xhat, x, c, a, w0, tol, max_iter):
    n = Xhat.shape[1]
    qs = np.empty(n + 1)
    best_l = 0
    best_w = w0.copy()
    best_q = np.inf
    Y = Xhat.copy()
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
