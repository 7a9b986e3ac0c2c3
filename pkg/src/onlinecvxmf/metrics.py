"""Evaluation metrics and the restricted-vs-unrestricted surrogate gap."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment, nnls

from .core import Dictionary, LassoSettings, RepresentativeSet, SufficientStats, objective_from_stats
from .online import assign_cluster
from .solvers import column_terms, sparse_code_many

MAX_MATCH_K = 64
DELTA_MAX_T = 5000


def _as_matrix(data):
    X = getattr(data, "X", data)
    return np.asarray(X, dtype=np.float64)


def approx_error(data, D, lam: float, elastic_kappa: float = 0.0, settings: LassoSettings = LassoSettings()) -> float:
    """(1/n) ||X - D Lambda||_F with Lambda the per-sample sparse codes against D."""
    X = _as_matrix(data)
    D = np.asarray(D, dtype=np.float64)
    if D.shape[0] != X.shape[0]:
        raise ValueError(f"D has {D.shape[0]} rows but samples have dimension {X.shape[0]}")
    codes = sparse_code_many(X, D, lam, elastic_kappa, settings)
    return float(np.linalg.norm(X - D @ codes) / X.shape[1])


def predict_clusters(data, D, lam: float, elastic_kappa: float = 0.0, settings: LassoSettings = LassoSettings()):
    """Cluster of each sample: argmax of its code, nearest basis when the code is zero."""
    X = _as_matrix(data)
    D = np.asarray(D, dtype=np.float64)
    codes = sparse_code_many(X, D, lam, elastic_kappa, settings)
    return np.array([assign_cluster(codes[:, i], D, X[:, i]) for i in range(X.shape[1])], dtype=np.int64)


def clustering_accuracy(pred, truth) -> float:
    """Best agreement over one-to-one relabelings of ``pred`` (optimal assignment)."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth must have the same length")
    if pred.size == 0:
        raise ValueError("empty labelings")
    p_vals, p_idx = np.unique(pred, return_inverse=True)
    t_vals, t_idx = np.unique(truth, return_inverse=True)
    confusion = np.zeros((p_vals.size, t_vals.size))
    np.add.at(confusion, (p_idx, t_idx), 1.0)
    rows, cols = linear_sum_assignment(-confusion)
    return float(confusion[rows, cols].sum() / pred.size)


def basis_recovery(D, means) -> float:
    """Mean distance between dictionary columns and ``means`` (k x m) under the best matching."""
    D = np.asarray(D, dtype=np.float64)
    means = np.atleast_2d(np.asarray(means, dtype=np.float64))
    k = D.shape[1]
    if means.shape != (k, D.shape[0]):
        raise ValueError(f"means must be {k} x {D.shape[0]}, got {means.shape}")
    if k > MAX_MATCH_K:
        raise ValueError(f"matching is limited to k <= {MAX_MATCH_K}")
    cost = np.linalg.norm(D[:, :, None] - means.T[:, None, :], axis=0)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean())


def _hull_projection(P, u, w0):
    """Weights of the point of Cvx(P) nearest to ``u``.

    NNLS with a heavily weighted sum-to-one row, then renormalized onto the
    simplex; falls back to ``w0`` if that is not closer.
    """
    M = 1e4 * (1.0 + float(np.abs(P).max()) + float(np.abs(u).max()))
    aug = np.vstack([P, np.full((1, P.shape[1]), M)])
    w, _ = nnls(aug, np.append(u, M), maxiter=50 * P.shape[1])
    s = w.sum()
    if not s > 0:
        return w0
    w = w / s
    if np.sum((P @ w - u) ** 2) <= np.sum((P @ w0 - u) ** 2):
        return w
    return w0


def unrestricted_dictionary(
    seen,
    stats: SufficientStats,
    rep_sets: Sequence[RepresentativeSet],
    dictionary: Dictionary,
    max_sweeps: int = 200,
    tol: float = 1e-12,
):
    """Minimize the surrogate with every column in the hull of all seen samples.

    Block coordinate descent where each column update is an exact projection
    onto the hull of the pool (seen samples plus current representatives, so
    the current dictionary is feasible). Returns ``(Dictionary, objective)``
    with weights over the pool; no ridge term is applied.
    """
    m, k = stats.B.shape
    seen = np.asarray(seen, dtype=np.float64).reshape(m, -1)
    pool = np.hstack([seen] + [r.samples for r in rep_sets])
    weights = []
    offset = seen.shape[1]
    for r, w in zip(rep_sets, dictionary.weights):
        full = np.zeros(pool.shape[1])
        full[offset:offset + r.capacity] = w
        weights.append(full)
        offset += r.capacity
    D = pool @ np.column_stack(weights)
    f = objective_from_stats(D, stats, 0.0)
    for _ in range(max_sweeps):
        f_prev = f
        for j in range(k):
            if stats.A[j, j] == 0.0:
                continue
            a, c = column_terms(stats, D, j, 0.0)
            weights[j] = _hull_projection(pool, c / a, weights[j])
            D[:, j] = pool @ weights[j]
        f = objective_from_stats(D, stats, 0.0)
        if f_prev - f <= tol * max(1.0, abs(f)):
            break
    return Dictionary(D, weights), f


def delta_diagnostic(
    seen,
    stats: SufficientStats,
    rep_sets: Sequence[RepresentativeSet],
    dictionary: Dictionary,
    max_t: int = DELTA_MAX_T,
) -> float:
    """Surrogate gap between the hull-restricted dictionary and the all-samples optimum."""
    if stats.t > max_t:
        raise ValueError(f"delta diagnostic is limited to t <= {max_t} (got t={stats.t})")
    _, f_star = unrestricted_dictionary(seen, stats, rep_sets, dictionary)
    # D_t itself is feasible for the larger problem, so the gap is >= 0 up to rounding
    return objective_from_stats(dictionary.columns, stats, 0.0) - f_star


def metrics_report(
    data,
    D,
    lam: float,
    elastic_kappa: float = 0.0,
    labels=None,
    means=None,
    delta: Optional[float] = None,
    wall_time_s: Optional[float] = None,
    settings: LassoSettings = LassoSettings(),
) -> dict:
    X = _as_matrix(data)
    D = np.asarray(D, dtype=np.float64)
    codes = sparse_code_many(X, D, lam, elastic_kappa, settings)
    l2 = float(np.linalg.norm(X - D @ codes) / X.shape[1])
    acc = None
    if labels is not None:
        pred = [assign_cluster(codes[:, i], D, X[:, i]) for i in range(X.shape[1])]
        acc = clustering_accuracy(pred, labels)
    rec = basis_recovery(D, means) if means is not None else None
    return {"l2": l2, "accuracy": acc, "basis_recovery": rec, "delta": delta, "wall_time_s": wall_time_s}
