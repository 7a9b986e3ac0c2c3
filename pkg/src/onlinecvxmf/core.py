"""Shared model state and the quadratic dictionary objective.

Matrices follow the column convention: samples are columns of an ``m x n``
array, the dictionary ``D`` is ``m x k`` and representative sets are
``m x N_i``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional, Sequence

import numpy as np

VARIANTS = ("ru", "rr")
MODEL_FORMAT = "onlinecvxmf.model/1"

# invariant tolerances
HULL_TOL = 1e-6
SIMPLEX_SUM_TOL = 1e-9
SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True)
class LassoSettings:
    """Stopping rule for the sparse coder: KKT residual <= tol, or max_iter sweeps."""

    tol: float = 1e-8
    max_iter: int = 1000

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("LassoSettings.tol must be > 0")
        if self.max_iter < 1:
            raise ValueError("LassoSettings.max_iter must be >= 1")


@dataclass(frozen=True)
class QpSettings:
    """Stopping rules for the hull-constrained dictionary update.

    ``tol`` bounds the relative objective decrease (``dec <= tol * max(1, |f|)``)
    both per projected-gradient iteration and per block sweep.
    """

    tol: float = 1e-9
    max_sweeps: int = 10
    inner_max_iter: int = 500

    def __post_init__(self):
        if not self.tol > 0 or self.max_sweeps < 1 or self.inner_max_iter < 1:
            raise ValueError("QpSettings fields must all be positive")


BATCH_QP = QpSettings(max_sweeps=200)


@dataclass(frozen=True)
class ModelConfig:
    k: int
    m: Optional[int] = None
    lam: Optional[float] = None
    lambda_c: float = 0.2
    elastic_kappa: float = 1e-6
    ridge_kappa1: float = 1e-6
    variant: str = "rr"
    init_sample_count: int = 150
    # seed the statistics with the initialization buffer coded against D0
    warm_start_stats: bool = True
    seed: int = 0
    # optional non-uniform index distribution for the "ru" variant
    update_probs: Optional[tuple] = None
    lasso_tol: float = 1e-8
    lasso_max_iter: int = 1000
    qp_tol: float = 1e-9
    qp_max_sweeps: int = 10
    qp_inner_max_iter: int = 500

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.m is not None and self.m < 1:
            raise ValueError("m must be >= 1")
        if self.lam is not None and not self.lam >= 0:
            raise ValueError("lambda must be >= 0")
        if not self.lambda_c >= 0:
            raise ValueError("lambda_c must be >= 0")
        if not self.elastic_kappa >= 0 or not self.ridge_kappa1 >= 0:
            raise ValueError("regularizers must be >= 0")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.init_sample_count < self.k:
            raise ValueError("init_sample_count must be >= k")
        if self.update_probs is not None:
            p = np.asarray(self.update_probs, dtype=float)
            if p.shape != (self.k,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
                raise ValueError("update_probs must be a length-k probability vector")
            object.__setattr__(self, "update_probs", tuple(float(v) for v in p))
        # fail early on bad solver settings
        self.lasso_settings()
        self.qp_settings()

    @property
    def lambda_(self) -> float:
        """Effective l1 penalty: explicit ``lam`` or ``lambda_c / sqrt(m)``."""
        if self.lam is not None:
            return float(self.lam)
        if self.m is None:
            raise ValueError("lambda is undefined until m is known")
        return self.lambda_c / math.sqrt(self.m)

    def lasso_settings(self) -> LassoSettings:
        return LassoSettings(self.lasso_tol, self.lasso_max_iter)

    def qp_settings(self) -> QpSettings:
        return QpSettings(self.qp_tol, self.qp_max_sweeps, self.qp_inner_max_iter)

    def with_dim(self, m: int) -> "ModelConfig":
        if self.m is not None and self.m != m:
            raise ValueError(f"config has m={self.m} but data has m={m}")
        return replace(self, m=m)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        if d["update_probs"] is not None:
            d["update_probs"] = list(d["update_probs"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if d.get("update_probs") is not None:
            d["update_probs"] = tuple(d["update_probs"])
        return cls(**d)


@dataclass
class RepresentativeSet:
    samples: np.ndarray  # m x N_i

    def __post_init__(self):
        self.samples = np.array(self.samples, dtype=np.float64, ndmin=2)
        if self.samples.shape[1] < 1:
            raise ValueError("a representative set needs at least one sample")

    @property
    def capacity(self) -> int:
        return self.samples.shape[1]

    def swapped(self, slot: int, x: np.ndarray) -> "RepresentativeSet":
        """Copy with column ``slot`` (0-based) replaced by ``x``."""
        out = self.samples.copy()
        out[:, slot] = x
        return RepresentativeSet(out)


@dataclass
class Dictionary:
    """Basis matrix whose column i equals ``rep_sets[i].samples @ weights[i]``."""

    columns: np.ndarray  # m x k
    weights: list

    @classmethod
    def from_weights(cls, rep_sets: Sequence[RepresentativeSet], weights) -> "Dictionary":
        weights = [np.asarray(w, dtype=np.float64) for w in weights]
        cols = np.column_stack([r.samples @ w for r, w in zip(rep_sets, weights)])
        return cls(cols, weights)

    @property
    def k(self) -> int:
        return self.columns.shape[1]

    def copy(self) -> "Dictionary":
        return Dictionary(self.columns.copy(), [w.copy() for w in self.weights])


@dataclass
class SufficientStats:
    """Running averages A = mean(a a^T), B = mean(x a^T) over t samples.

    ``const`` is the D-independent part of the surrogate,
    mean(0.5 ||x||^2 + lambda ||a||_1), tracked so the full surrogate value
    can be reported.
    """

    A: np.ndarray
    B: np.ndarray
    t: int = 0
    const: float = 0.0

    @classmethod
    def zeros(cls, m: int, k: int) -> "SufficientStats":
        return cls(np.zeros((k, k)), np.zeros((m, k)), 0, 0.0)

    def copy(self) -> "SufficientStats":
        return SufficientStats(self.A.copy(), self.B.copy(), self.t, self.const)


@dataclass
class StepReport:
    t: int
    alpha: np.ndarray
    chosen_index: Optional[int]
    chosen_candidate: Optional[int]
    objective: float  # quadratic objective (ridge included) at D_t
    surrogate: float  # full surrogate value at D_t, constant included
    ms_sparse_code: float = 0.0
    ms_dict_update: float = 0.0
    candidate_objectives: Optional[np.ndarray] = field(default=None, repr=False)

    def trace_record(self, timings: bool = False, method: Optional[str] = None) -> dict:
        rec = {
            "t": self.t,
            "i_t": self.chosen_index,
            "l_star": self.chosen_candidate,
            "surrogate": float(self.surrogate),
            "alpha_nnz": int(np.count_nonzero(self.alpha)),
            "ms_sparse_code": round(self.ms_sparse_code, 4) if timings else None,
            "ms_dict_update": round(self.ms_dict_update, 4) if timings else None,
        }
        if method is not None:
            rec["method"] = method
        return rec


def _check_dims(D: np.ndarray, stats: SufficientStats):
    m, k = D.shape
    if stats.A.shape != (k, k) or stats.B.shape != (m, k):
        raise ValueError(
            f"dimension mismatch: D is {D.shape}, A is {stats.A.shape}, B is {stats.B.shape}"
        )


def objective_from_stats(D, stats: SufficientStats, ridge_kappa1: float = 0.0) -> float:
    """0.5 tr(D^T D (A + kappa1 I)) - tr(D^T B)."""
    D = np.asarray(D, dtype=np.float64)
    _check_dims(D, stats)
    if stats.t < 1:
        raise ValueError("statistics are empty (t = 0)")
    G = D.T @ D
    quad = np.sum(G * stats.A) + ridge_kappa1 * np.trace(G)
    return float(0.5 * quad - np.sum(D * stats.B))


def full_surrogate(D, stats: SufficientStats) -> float:
    """Surrogate value including its D-independent constant."""
    return objective_from_stats(D, stats, 0.0) + stats.const


def surrogate_direct(D, samples, alphas, lam: float) -> float:
    """(1/t) sum_n 0.5||x_n - D a_n||^2 + lam ||a_n||_1, summed explicitly."""
    if len(samples) == 0 or len(samples) != len(alphas):
        raise ValueError("need equal-length, non-empty sample and code lists")
    D = np.asarray(D, dtype=np.float64)
    X = np.column_stack([np.asarray(x, dtype=np.float64) for x in samples])
    Lam = np.column_stack([np.asarray(a, dtype=np.float64) for a in alphas])
    R = X - D @ Lam
    return float((0.5 * np.sum(R * R) + lam * np.abs(Lam).sum()) / X.shape[1])


@dataclass
class Model:
    config: ModelConfig
    dictionary: Dictionary
    rep_sets: list
    stats: SufficientStats
    rng: np.random.Generator = field(repr=False, default=None)

    def __post_init__(self):
        if self.rng is None:
            self.rng = np.random.default_rng(self.config.seed)

    @property
    def D(self) -> np.ndarray:
        return self.dictionary.columns

    def copy(self) -> "Model":
        rng = np.random.default_rng()
        rng.bit_generator.state = self.rng.bit_generator.state
        return Model(
            self.config,
            self.dictionary.copy(),
            [RepresentativeSet(r.samples.copy()) for r in self.rep_sets],
            self.stats.copy(),
            rng,
        )

    def check_invariants(self, capacities: Optional[Sequence[int]] = None) -> list:
        """Return a list of human-readable violations (empty when healthy)."""
        return check_invariants(self, capacities)

    # serialization

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "method": "online-cvxmf",
            "config": self.config.to_dict(),
            "D": self.D.tolist(),
            "weights": [w.tolist() for w in self.dictionary.weights],
            "rep_sets": [r.samples.tolist() for r in self.rep_sets],
            "A": self.stats.A.tolist(),
            "B": self.stats.B.tolist(),
            "t": self.stats.t,
            "surrogate_const": self.stats.const,
            "rng_state": self.rng.bit_generator.state,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Model":
        if d.get("format") != MODEL_FORMAT or d.get("method") != "online-cvxmf":
            raise ValueError("not an online-cvxmf model document")
        config = ModelConfig.from_dict(d["config"])
        rep_sets = [RepresentativeSet(np.array(r, dtype=np.float64)) for r in d["rep_sets"]]
        weights = [np.array(w, dtype=np.float64) for w in d["weights"]]
        D = np.array(d["D"], dtype=np.float64)
        stats = SufficientStats(
            np.array(d["A"], dtype=np.float64).reshape(config.k, config.k),
            np.array(d["B"], dtype=np.float64).reshape(D.shape[0], config.k),
            int(d["t"]),
            float(d["surrogate_const"]),
        )
        rng = np.random.default_rng()
        rng.bit_generator.state = d["rng_state"]
        model = cls(config, Dictionary(D, weights), rep_sets, stats, rng)
        problems = model.check_invariants()
        if problems:
            raise ValueError("model document violates invariants: " + "; ".join(problems))
        return model

    @classmethod
    def from_json(cls, text: str) -> "Model":
        return cls.from_dict(json.loads(text))


def check_invariants(model: Model, capacities: Optional[Sequence[int]] = None) -> list:
    bad = []
    k = model.config.k
    dic = model.dictionary
    if dic.columns.shape[1] != k or len(dic.weights) != k or len(model.rep_sets) != k:
        return [f"expected {k} columns, weight vectors and representative sets"]
    for i, (rep, w) in enumerate(zip(model.rep_sets, dic.weights)):
        if capacities is not None and rep.capacity != capacities[i]:
            bad.append(f"rep set {i} has {rep.capacity} columns, expected {capacities[i]}")
        if w.shape != (rep.capacity,):
            bad.append(f"weights {i} have length {w.shape[0]}, rep set has {rep.capacity}")
            continue
        if np.any(w < 0):
            bad.append(f"weights {i} have negative entries")
        if abs(w.sum() - 1.0) > SIMPLEX_SUM_TOL:
            bad.append(f"weights {i} sum to {w.sum()!r}")
        gap = np.linalg.norm(rep.samples @ w - dic.columns[:, i])
        if gap > HULL_TOL:
            bad.append(f"column {i} is {gap:.3g} away from its stated convex combination")
    A = model.stats.A
    if np.abs(A - A.T).max(initial=0.0) > SYMMETRY_TOL:
        bad.append("A is not symmetric")
    elif A.size and np.linalg.eigvalsh(A).min() < -PSD_TOL:
        bad.append("A is not positive semi-definite")
    return bad
