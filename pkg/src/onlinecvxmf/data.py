"""Synthetic truncated Gaussian mixtures, CSV I/O and sample streams."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Union

import numpy as np


class CsvFormatError(ValueError):
    pass


@dataclass
class Dataset:
    X: np.ndarray  # m x n, samples as columns
    labels: Optional[np.ndarray] = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise ValueError("X must be a 2-D m x n array")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("dataset has non-finite entries")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.X.shape[1],):
                raise ValueError("labels must have one entry per sample")

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]


@dataclass
class MixtureSpec:
    means: np.ndarray  # k x m
    cov_scale: float = 1.0
    truncation: float = 3.0
    probabilities: Optional[np.ndarray] = None

    def __post_init__(self):
        self.means = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        if not self.cov_scale > 0:
            raise ValueError("cov_scale must be > 0")
        if not self.truncation > 0:
            raise ValueError("truncation must be > 0")
        if self.probabilities is None:
            self.probabilities = np.full(self.k, 1.0 / self.k)
        self.probabilities = np.asarray(self.probabilities, dtype=np.float64)
        if self.probabilities.shape != (self.k,) or np.any(self.probabilities < 0):
            raise ValueError("probabilities must be a non-negative k-vector")
        if abs(self.probabilities.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def m(self) -> int:
        return self.means.shape[1]

    @property
    def sigma(self) -> float:
        return math.sqrt(self.cov_scale)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "m": self.m,
            "means": self.means.tolist(),
            "cov_scale": self.cov_scale,
            "truncation": self.truncation,
            "probabilities": self.probabilities.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MixtureSpec":
        return cls(np.array(d["means"]), d["cov_scale"], d["truncation"], np.array(d["probabilities"]))


def random_mixture_spec(k: int, m: int, cov_scale: float = 1.0, seed=0, low=0.0, high=20.0, truncation=3.0) -> MixtureSpec:
    """Component means uniform on [low, high]^m, isotropic covariance ``cov_scale * I``."""
    rng = np.random.default_rng(seed)
    return MixtureSpec(rng.uniform(low, high, size=(k, m)), cov_scale, truncation)


def gen_mixture(spec: MixtureSpec, n: int, seed=0, max_rounds: int = 10_000) -> Dataset:
    """Draw n samples; each is resampled until it lies within truncation*sigma of its mean."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    labels = rng.choice(spec.k, size=n, p=spec.probabilities)
    radius = spec.truncation * spec.sigma
    noise = np.empty((n, spec.m))
    pending = np.arange(n)
    for _ in range(max_rounds):
        z = rng.normal(0.0, spec.sigma, size=(pending.size, spec.m))
        ok = np.sqrt(np.sum(z * z, axis=1)) <= radius
        noise[pending[ok]] = z[ok]
        pending = pending[~ok]
        if pending.size == 0:
            break
    else:
        raise RuntimeError("rejection sampling stalled; truncation radius too small for this dimension")
    X = (spec.means[labels] + noise).T
    prov = {"generator": "truncated_gaussian_mixture", "seed": seed, "n": n, **spec.to_dict()}
    return Dataset(X, labels, prov)


def _parse_float(cell, lineno, col):
    try:
        return float(cell)
    except ValueError:
        raise CsvFormatError(f"non-numeric value {cell!r} at line {lineno}, column {col + 1}") from None


def read_csv(path: Union[str, Path], header: Union[bool, str] = "auto", label_column: bool = False) -> Dataset:
    """Read a rows-as-samples CSV.

    ``header="auto"`` treats the first line as a header when any of its cells
    fails to parse as a number. With ``label_column`` the last column holds
    integer labels.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [(i + 1, r) for i, r in enumerate(csv.reader(fh)) if r and any(c.strip() for c in r)]
    if not rows:
        raise CsvFormatError(f"{path}: empty file")
    if header == "auto":
        first = rows[0][1]
        try:
            [float(c) for c in first]
            header = False
        except ValueError:
            header = True
    if header:
        rows = rows[1:]
    if not rows:
        raise CsvFormatError(f"{path}: no data rows after the header")
    width = len(rows[0][1])
    values = []
    for lineno, r in rows:
        if len(r) != width:
            raise CsvFormatError(f"{path}: ragged row at line {lineno}: expected {width} fields, got {len(r)}")
        values.append([_parse_float(c, lineno, j) for j, c in enumerate(r)])
    table = np.array(values, dtype=np.float64)
    labels = None
    if label_column:
        if width < 2:
            raise CsvFormatError(f"{path}: label column requested but only {width} column present")
        lab = table[:, -1]
        if not np.all(lab == np.round(lab)):
            raise CsvFormatError(f"{path}: label column is not integer-valued")
        labels = lab.astype(np.int64)
        table = table[:, :-1]
    if not np.all(np.isfinite(table)):
        raise CsvFormatError(f"{path}: non-finite values")
    return Dataset(table.T.copy(), labels, {"path": str(path)})


def write_csv(ds: Dataset, path: Union[str, Path], header: bool = True) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            names = [f"x{j}" for j in range(ds.m)]
            if ds.labels is not None:
                names.append("label")
            w.writerow(names)
        for i in range(ds.n):
            row = [repr(float(v)) for v in ds.X[:, i]]
            if ds.labels is not None:
                row.append(str(int(ds.labels[i])))
            w.writerow(row)


def stream(ds: Dataset, order: str = "as-is", seed=0, epochs: Optional[int] = 1) -> Iterator[np.ndarray]:
    """Yield samples one at a time; each epoch visits every column once.

    ``epochs=None`` repeats forever. Shuffled orders are drawn per epoch from
    a generator seeded with ``seed``.
    """
    if order not in ("as-is", "shuffled"):
        raise ValueError("order must be 'as-is' or 'shuffled'")
    rng = np.random.default_rng(seed)
    counter = range(epochs) if epochs is not None else iter(int, 1)
    for _ in counter:
        idx = rng.permutation(ds.n) if order == "shuffled" else range(ds.n)
        for i in idx:
            yield ds.X[:, i].copy()
