"""Streaming convex matrix factorization.

Each step sparse-codes the incoming sample against the previous dictionary,
folds it into the running statistics, picks the basis to update, tries every
single-slot swap of the sample into that basis's representative set, and
commits the swap (or no swap) with the lowest objective.
"""

from __future__ import annotations

import itertools
import time
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import _kernels
from .core import (
    Dictionary,
    Model,
    ModelConfig,
    QpSettings,
    RepresentativeSet,
    StepReport,
    SufficientStats,
    full_surrogate,
    objective_from_stats,
)
from .initialization import initialize
from .solvers import block_cd_dictionary, column_terms, solve_column_qp, sparse_code, sparse_code_many


def update_stats(stats: SufficientStats, x, alpha, lam: float = 0.0) -> SufficientStats:
    """Fold one (x, alpha) pair into the running averages; returns new stats."""
    x = np.asarray(x, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    t = stats.t + 1
    A = ((t - 1) * stats.A + np.outer(alpha, alpha)) / t
    B = ((t - 1) * stats.B + np.outer(x, alpha)) / t
    const = ((t - 1) * stats.const + 0.5 * float(x @ x) + lam * float(np.abs(alpha).sum())) / t
    return SufficientStats(A, B, t, const)


def nearest_column(D, x) -> int:
    D = np.asarray(D)
    return int(np.argmin(np.sum((D - np.asarray(x)[:, None]) ** 2, axis=0)))


def assign_cluster(alpha, D, x) -> int:
    """argmax of the code; all-zero codes fall back to the nearest basis."""
    alpha = np.asarray(alpha)
    if np.any(alpha != 0):
        return int(np.argmax(alpha))
    return nearest_column(D, x)


def select_update_index(variant: str, alpha, D, x, rng: np.random.Generator, probs=None) -> int:
    """Basis index to update: uniform draw ("ru") or code argmax ("rr")."""
    D = D.columns if isinstance(D, Dictionary) else np.asarray(D)
    k = D.shape[1]
    if variant == "ru":
        if probs is None:
            return int(rng.integers(k))
        return int(rng.choice(k, p=np.asarray(probs)))
    if variant == "rr":
        return assign_cluster(alpha, D, x)
    raise ValueError(f"unknown variant {variant!r}")


def candidate_sets(rep: RepresentativeSet, x) -> list:
    """[rep, rep with slot 0 := x, ..., rep with slot N-1 := x]."""
    x = np.asarray(x, dtype=np.float64)
    return [rep] + [rep.swapped(l, x) for l in range(rep.capacity)]


def choose_candidate(
    stats: SufficientStats,
    D_prev: Dictionary,
    rep_sets: Sequence[RepresentativeSet],
    i_t: int,
    candidates: Sequence[RepresentativeSet],
    settings: QpSettings = QpSettings(),
    ridge_kappa1: float = 0.0,
):
    """Pick the best representative set for column ``i_t`` among ``candidates``.

    Every candidate first gets column ``i_t`` re-optimized alone (warm start:
    the previous weights, slot for slot); the winner then gets block sweeps
    over all columns. Returns ``(l_star, dictionary, objective, candidate_objectives)``;
    ties go to the smaller index.
    """
    w0 = D_prev.weights[i_t]
    objs = np.full(len(candidates), np.inf)
    best_l, best_w = 0, w0
    if stats.A[i_t, i_t] != 0.0:
        for l, cand in enumerate(candidates):
            w, f = solve_column_qp(stats, D_prev.columns, i_t, cand, w0, settings, ridge_kappa1)
            objs[l] = f
            if f < objs[best_l] or l == 0:
                best_l, best_w = l, w
    else:
        objs[0] = objective_from_stats(D_prev.columns, stats, ridge_kappa1)
    return _commit_candidate(stats, D_prev, rep_sets, i_t, candidates[best_l], best_l, best_w, objs, settings, ridge_kappa1)


def _commit_candidate(stats, D_prev, rep_sets, i_t, chosen, l_star, w, objs, settings, ridge_kappa1):
    reps = list(rep_sets)
    reps[i_t] = chosen
    weights = [v.copy() for v in D_prev.weights]
    weights[i_t] = np.asarray(w, dtype=np.float64)
    start = Dictionary.from_weights(reps, weights)
    dic, f = block_cd_dictionary(stats, reps, start, settings, ridge_kappa1)
    return l_star, dic, f, objs


def _swap_update(stats, D_prev, rep_sets, i_t, x, settings, ridge_kappa1):
    # fused equivalent of candidate_sets + choose_candidate
    rep = rep_sets[i_t]
    w0 = D_prev.weights[i_t]
    if stats.A[i_t, i_t] == 0.0:
        l_star, w = 0, w0
        objs = np.full(rep.capacity + 1, np.inf)
        objs[0] = objective_from_stats(D_prev.columns, stats, ridge_kappa1)
        chosen = rep
    else:
        a, c = column_terms(stats, D_prev.columns, i_t, ridge_kappa1)
        l_star, w, qs = _kernels.best_candidate(rep.samples, x, c, a, w0, settings.tol, settings.inner_max_iter)
        # qs omit the part of the objective that does not involve column i_t
        rest = objective_from_stats(D_prev.columns, stats, ridge_kappa1) - _column_q(D_prev.columns[:, i_t], a, c)
        objs = qs + rest
        chosen = rep if l_star == 0 else rep.swapped(l_star - 1, x)
    return _commit_candidate(stats, D_prev, rep_sets, i_t, chosen, l_star, w, objs, settings, ridge_kappa1)


def _column_q(d, a, c):
    return 0.5 * a * float(d @ d) - float(c @ d)


def model_from_init(X_init, config: ModelConfig, rng: Optional[np.random.Generator] = None) -> Model:
    X_init = np.asarray(X_init, dtype=np.float64)
    config = config.with_dim(X_init.shape[0])
    if rng is None:
        rng = np.random.default_rng(config.seed)
    res = initialize(X_init, config, rng)
    stats = SufficientStats.zeros(config.m, config.k)
    if config.warm_start_stats:
        lam = config.lambda_
        codes = sparse_code_many(X_init, res.D0, lam, config.elastic_kappa, config.lasso_settings())
        for n in range(X_init.shape[1]):
            stats = update_stats(stats, X_init[:, n], codes[:, n], lam)
    return Model(config, res.dictionary, res.rep_sets, stats, rng)


def step(model: Model, x) -> StepReport:
    """Process one sample in place; on error the model is left untouched."""
    cfg = model.config
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (cfg.m,):
        raise ValueError(f"sample has shape {x.shape}, expected ({cfg.m},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample has non-finite entries")
    lam = cfg.lambda_
    qp = cfg.qp_settings()

    t0 = time.perf_counter()
    alpha = sparse_code(x, model.D, lam, cfg.elastic_kappa, cfg.lasso_settings())
    t1 = time.perf_counter()
    stats = update_stats(model.stats, x, alpha, lam)
    rng_state = model.rng.bit_generator.state
    try:
        i_t = select_update_index(cfg.variant, alpha, model.D, x, model.rng, cfg.update_probs)
        l_star, dic, f, objs = _swap_update(
            stats, model.dictionary, model.rep_sets, i_t, x, qp, cfg.ridge_kappa1
        )
    except BaseException:
        model.rng.bit_generator.state = rng_state
        raise
    t2 = time.perf_counter()

    if l_star > 0:
        model.rep_sets[i_t] = model.rep_sets[i_t].swapped(l_star - 1, x)
    model.dictionary = dic
    model.stats = stats
    return StepReport(
        t=stats.t,
        alpha=alpha,
        chosen_index=i_t,
        chosen_candidate=l_star,
        objective=f,
        surrogate=full_surrogate(dic.columns, stats),
        ms_sparse_code=(t1 - t0) * 1e3,
        ms_dict_update=(t2 - t1) * 1e3,
        candidate_objectives=objs,
    )


def fit(
    stream: Iterable,
    config: ModelConfig,
    T: Optional[int] = None,
    callback: Optional[Callable[[Model, StepReport], None]] = None,
):
    """Initialize on the first N samples, then run up to T online steps.

    ``T=None`` consumes the whole stream. Returns ``(model, reports)``.
    """
    it = iter(stream)
    buf = [np.asarray(x, dtype=np.float64) for x in itertools.islice(it, config.init_sample_count)]
    if len(buf) < config.init_sample_count:
        raise ValueError(
            f"stream ended after {len(buf)} samples; initialization needs {config.init_sample_count}"
        )
    model = model_from_init(np.column_stack(buf), config)
    reports = []
    if T is not None and T <= 0:
        return model, reports
    steps = it if T is None else itertools.islice(it, T)
    for x in steps:
        rep = step(model, x)
        reports.append(rep)
        if callback is not None:
            callback(model, rep)
    if not reports:
        raise ValueError("stream has no samples left after initialization")
    return model, reports
