"""Reference methods: unconstrained online MF and desk-scale batch convex MF."""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .core import (
    BATCH_QP,
    MODEL_FORMAT,
    Dictionary,
    ModelConfig,
    QpSettings,
    RepresentativeSet,
    StepReport,
    SufficientStats,
    full_surrogate,
    objective_from_stats,
)
from .initialization import best_of_lloyd, initialize
from .online import update_stats
from .solvers import block_cd_dictionary, column_terms, sparse_code, sparse_code_many

BATCH_MAX_SAMPLES = 20_000


class ResourceGuardError(RuntimeError):
    """Raised when a batch method is asked to hold more data than it allows."""


# ---------------------------------------------------------------------------
# online MF (columns in the unit ball, no hull constraint)


@dataclass
class OnlineMFModel:
    config: ModelConfig
    D: np.ndarray
    stats: SufficientStats

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "method": "online-mf",
            "config": self.config.to_dict(),
            "D": self.D.tolist(),
            "A": self.stats.A.tolist(),
            "B": self.stats.B.tolist(),
            "t": self.stats.t,
            "surrogate_const": self.stats.const,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def project_unit_ball(D):
    norms = np.linalg.norm(D, axis=0)
    return D / np.maximum(1.0, norms)


def ball_block_cd(stats: SufficientStats, D, settings: QpSettings = QpSettings(), ridge_kappa1: float = 0.0):
    """Block coordinate descent with every column confined to the unit ball.

    Each column update is exact: the unconstrained column minimizer scaled
    back onto the ball. Columns with ``A[j, j] == 0`` are left untouched.
    """
    D = np.array(D, dtype=np.float64)
    f = objective_from_stats(D, stats, ridge_kappa1)
    for _ in range(settings.max_sweeps):
        f_prev = f
        for j in range(D.shape[1]):
            if stats.A[j, j] == 0.0:
                continue
            a, c = column_terms(stats, D, j, ridge_kappa1)
            u = c / a
            D[:, j] = u / max(1.0, float(np.linalg.norm(u)))
        f = objective_from_stats(D, stats, ridge_kappa1)
        if f_prev - f <= settings.tol * max(1.0, abs(f)):
            break
    return D, f


def online_mf_init(X_init, config: ModelConfig, rng=None) -> OnlineMFModel:
    X_init = np.asarray(X_init, dtype=np.float64)
    config = config.with_dim(X_init.shape[0])
    res = initialize(X_init, config, rng)
    D0 = project_unit_ball(res.D0)
    stats = SufficientStats.zeros(config.m, config.k)
    if config.warm_start_stats:
        lam = config.lambda_
        codes = sparse_code_many(X_init, D0, lam, config.elastic_kappa, config.lasso_settings())
        for n in range(X_init.shape[1]):
            stats = update_stats(stats, X_init[:, n], codes[:, n], lam)
    return OnlineMFModel(config, D0, stats)


def online_mf_step(model: OnlineMFModel, x) -> StepReport:
    cfg = model.config
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (cfg.m,):
        raise ValueError(f"sample has shape {x.shape}, expected ({cfg.m},)")
    lam = cfg.lambda_
    t0 = time.perf_counter()
    alpha = sparse_code(x, model.D, lam, cfg.elastic_kappa, cfg.lasso_settings())
    t1 = time.perf_counter()
    stats = update_stats(model.stats, x, alpha, lam)
    D, f = ball_block_cd(stats, model.D, cfg.qp_settings(), cfg.ridge_kappa1)
    t2 = time.perf_counter()
    model.D, model.stats = D, stats
    return StepReport(
        t=stats.t,
        alpha=alpha,
        chosen_index=None,
        chosen_candidate=None,
        objective=f,
        surrogate=full_surrogate(D, stats),
        ms_sparse_code=(t1 - t0) * 1e3,
        ms_dict_update=(t2 - t1) * 1e3,
    )


def fit_online_mf(stream: Iterable, config: ModelConfig, T: Optional[int] = None, callback=None):
    it = iter(stream)
    buf = [np.asarray(x, dtype=np.float64) for x in itertools.islice(it, config.init_sample_count)]
    if len(buf) < config.init_sample_count:
        raise ValueError(
            f"stream ended after {len(buf)} samples; initialization needs {config.init_sample_count}"
        )
    model = online_mf_init(np.column_stack(buf), config)
    reports = []
    if T is not None and T <= 0:
        return model, reports
    for x in it if T is None else itertools.islice(it, T):
        rep = online_mf_step(model, x)
        reports.append(rep)
        if callback is not None:
            callback(model, rep)
    if not reports:
        raise ValueError("stream has no samples left after initialization")
    return model, reports


# ---------------------------------------------------------------------------
# batch convex MF: every column in the hull of the full dataset


@dataclass
class BatchResult:
    config: ModelConfig
    dictionary: Dictionary
    codes: np.ndarray  # k x n
    objectives: list = field(default_factory=list)
    n_iter: int = 0

    @property
    def D(self) -> np.ndarray:
        return self.dictionary.columns

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "method": "batch-cvxmf",
            "config": self.config.to_dict(),
            "D": self.D.tolist(),
            "weights": [w.tolist() for w in self.dictionary.weights],
            "rep_region": "dataset",
            "objectives": list(self.objectives),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def batch_objective(X, D, codes, lam, elastic_kappa=0.0, ridge_kappa1=0.0) -> float:
    """(1/n) sum 0.5||x - D a||^2 + lam|a|_1 + kappa|a|^2, plus 0.5 kappa1 ||D||_F^2."""
    R = X - D @ codes
    n = X.shape[1]
    data = (0.5 * np.sum(R * R) + lam * np.abs(codes).sum() + elastic_kappa * np.sum(codes * codes)) / n
    return float(data + 0.5 * ridge_kappa1 * np.sum(D * D))


def batch_cvxmf(
    X,
    config: ModelConfig,
    iters: int = 100,
    settings: QpSettings = BATCH_QP,
    rel_tol: float = 1e-6,
    max_samples: int = BATCH_MAX_SAMPLES,
):
    """Alternate full-data sparse coding and hull-constrained dictionary updates.

    Initial weights are uniform over K-means clusters of the whole dataset.
    Stops after ``iters`` alternations or when the objective's relative
    decrease drops below ``rel_tol``.
    """
    X = np.asarray(X, dtype=np.float64)
    m, n = X.shape
    if n > max_samples:
        raise ResourceGuardError(
            f"batch-cvxmf holds all {n} samples in every dictionary update (limit {max_samples}); "
            "use the online solver (online-cvxmf) for data of this size"
        )
    config = config.with_dim(m)
    k = config.k
    if n < k:
        raise ValueError(f"need at least k={k} samples, got {n}")
    lam = config.lambda_
    rng = np.random.default_rng(config.seed)
    labels = best_of_lloyd(X, k, rng).labels
    weights = []
    for i in range(k):
        w = (labels == i).astype(np.float64)
        weights.append(w / w.sum())
    region = RepresentativeSet(X)
    reps = [region] * k
    dic = Dictionary.from_weights(reps, weights)
    def code(D):
        c = sparse_code_many(X, D, lam, config.elastic_kappa, config.lasso_settings())
        return c, batch_objective(X, D, c, lam, config.elastic_kappa, config.ridge_kappa1)

    codes, obj = code(dic.columns)
    objectives = [obj]
    it = 0
    for it in range(1, iters + 1):
        stats = SufficientStats(codes @ codes.T / n, X @ codes.T / n, n, 0.0)
        dic, _ = block_cd_dictionary(stats, reps, dic, settings, config.ridge_kappa1)
        codes, obj = code(dic.columns)
        objectives.append(obj)
        if objectives[-2] - obj <= rel_tol * abs(obj):
            break
    return BatchResult(config, dic, codes, objectives, it)
