"""Inner optimizers: elastic-net sparse coding and the hull-constrained
dictionary update (block coordinate descent over simplex-weighted columns)."""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels
from .core import (
    SIMPLEX_SUM_TOL,
    Dictionary,
    LassoSettings,
    QpSettings,
    RepresentativeSet,
    SufficientStats,
    objective_from_stats,
)

__all__ = [
    "LassoSettings",
    "QpSettings",
    "sparse_code",
    "sparse_code_many",
    "kkt_residual",
    "project_simplex",
    "column_terms",
    "solve_column_qp",
    "block_cd_dictionary",
]


def _finite(name, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValueError(f"{name}: non-finite input")


def sparse_code(x, D, lam: float, elastic_kappa: float = 0.0, settings: LassoSettings = LassoSettings()):
    """Solve min_a 0.5||x - D a||^2 + lam ||a||_1 + kappa ||a||^2 by coordinate descent."""
    x = np.asarray(x, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    _finite("sparse_code", x, D, [lam, elastic_kappa])
    if lam < 0 or elastic_kappa < 0:
        raise ValueError("lambda and kappa must be non-negative")
    G = D.T @ D
    alpha, _ = _kernels.lasso_cd(G, D.T @ x, lam, elastic_kappa, np.zeros(D.shape[1]), settings.tol, settings.max_iter)
    return alpha


def sparse_code_many(X, D, lam: float, elastic_kappa: float = 0.0, settings: LassoSettings = LassoSettings()):
    """Column-wise ``sparse_code`` for an m x n matrix; returns k x n codes."""
    X = np.asarray(X, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    _finite("sparse_code_many", X, D)
    return _kernels.lasso_cd_many(D, X, lam, elastic_kappa, settings.tol, settings.max_iter)


def kkt_residual(x, D, alpha, lam: float, elastic_kappa: float = 0.0) -> float:
    D = np.asarray(D, dtype=np.float64)
    return _kernels.kkt_residual(D.T @ D, D.T @ np.asarray(x, dtype=np.float64), lam, elastic_kappa, alpha)


def project_simplex(v):
    """Euclidean projection onto {w >= 0, sum(w) = 1}."""
    v = np.asarray(v, dtype=np.float64)
    _finite("project_simplex", v)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("project_simplex expects a non-empty vector")
    return _kernels.project_simplex(v)


def _check_simplex(w, n, what="w_init"):
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (n,):
        raise ValueError(f"{what} has shape {w.shape}, expected ({n},)")
    if np.any(w < 0) or abs(w.sum() - 1.0) > SIMPLEX_SUM_TOL or not np.all(np.isfinite(w)):
        raise ValueError(f"{what} is not on the probability simplex")
    return w


def column_terms(stats: SufficientStats, D, j: int, ridge_kappa1: float = 0.0):
    """Curvature ``a`` and linear term ``c`` of the objective in column j alone.

    With the other columns fixed the objective reads 0.5 a ||d||^2 - c^T d + const.
    """
    A, B = stats.A, stats.B
    a = A[j, j] + ridge_kappa1
    c = B[:, j] - D @ A[:, j] + A[j, j] * D[:, j]
    return a, c


def solve_column_qp(
    stats: SufficientStats,
    D,
    j: int,
    rep: RepresentativeSet,
    w_init,
    settings: QpSettings = QpSettings(),
    ridge_kappa1: float = 0.0,
):
    """Re-optimize column j over Cvx(rep) with the other columns fixed.

    Returns ``(w, objective)`` where objective is the full
    ``objective_from_stats`` value after the update. Columns whose coefficient
    has never been used (``A[j, j] == 0``) are left where they are.
    """
    D = np.asarray(D, dtype=np.float64)
    w0 = _check_simplex(w_init, rep.capacity)
    a, c = column_terms(stats, D, j, ridge_kappa1)
    if stats.A[j, j] == 0.0 or not a > 0:
        w = w0.copy()
    else:
        w, _, _ = _kernels.column_pg(rep.samples, c, a, w0, settings.tol, settings.inner_max_iter)
    D_new = D.copy()
    D_new[:, j] = rep.samples @ w
    return w, objective_from_stats(D_new, stats, ridge_kappa1)


def block_cd_dictionary(
    stats: SufficientStats,
    rep_sets: Sequence[RepresentativeSet],
    D_init: Dictionary,
    settings: QpSettings = QpSettings(),
    ridge_kappa1: float = 0.0,
    on_sweep: Optional[Callable[[int, Dictionary, float], None]] = None,
):
    """Cyclic block coordinate descent over the dictionary columns.

    Sweeps columns in ascending order until a sweep lowers the objective by
    less than ``settings.tol`` (relative) or ``max_sweeps`` is hit.
    """
    k = D_init.k
    if len(rep_sets) != k or len(D_init.weights) != k:
        raise ValueError("need one representative set and weight vector per column")
    weights = [_check_simplex(w, r.capacity, f"weights[{i}]").copy() for i, (w, r) in enumerate(zip(D_init.weights, rep_sets))]
    D = np.column_stack([r.samples @ w for r, w in zip(rep_sets, weights)])
    f = objective_from_stats(D, stats, ridge_kappa1)
    for sweep in range(settings.max_sweeps):
        f_prev = f
        for j in range(k):
            if stats.A[j, j] == 0.0:
                continue
            a, c = column_terms(stats, D, j, ridge_kappa1)
            w, _, _ = _kernels.column_pg(rep_sets[j].samples, c, a, weights[j], settings.tol, settings.inner_max_iter)
            weights[j] = w
            D[:, j] = rep_sets[j].samples @ w
        f = objective_from_stats(D, stats, ridge_kappa1)
        if on_sweep is not None:
            on_sweep(sweep, Dictionary(D.copy(), [w.copy() for w in weights]), f)
        if f_prev - f <= settings.tol * max(1.0, abs(f)):
            break
    return Dictionary(D, weights), f
