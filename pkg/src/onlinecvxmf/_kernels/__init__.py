"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once, at import time, from the ``ONLINECVXMF_BACKEND``
environment variable (``numba`` by default, ``numpy`` to force the fallback).
If numba cannot be imported the numpy path is used silently.
"""

from __future__ import annotations

import os

import numpy as np

from . import _numpy as numpy_kernels

try:
    from . import _numba as numba_kernels

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_kernels = None
    NUMBA_AVAILABLE = False

_requested = os.environ.get("ONLINECVXMF_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"ONLINECVXMF_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

BACKEND = "numba" if (_requested == "numba" and NUMBA_AVAILABLE) else "numpy"
_impl = numba_kernels if BACKEND == "numba" else numpy_kernels


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def project_simplex(v):
    return _impl.project_simplex(_f64(v))


def kkt_residual(G, r, lam, kappa, alpha):
    return float(_impl.kkt_residual(_f64(G), _f64(r), float(lam), float(kappa), _f64(alpha)))


def lasso_cd(G, r, lam, kappa, alpha, tol, max_iter):
    a, it = _impl.lasso_cd(_f64(G), _f64(r), float(lam), float(kappa), _f64(alpha), float(tol), int(max_iter))
    return a, int(it)


def lasso_cd_many(D, X, lam, kappa, tol, max_iter):
    return _impl.lasso_cd_many(_f64(D), _f64(X), float(lam), float(kappa), float(tol), int(max_iter))


def hull_lipschitz(X, a):
    return float(_impl.hull_lipschitz(_f64(X), float(a)))


def column_pg(X, c, a, w0, tol, max_iter):
    w, q, it = _impl.column_pg(_f64(X), _f64(c), float(a), _f64(w0), float(tol), int(max_iter))
    return w, float(q), int(it)


def best_candidate(Xhat, x, c, a, w0, tol, max_iter):
    l, w, qs = _impl.best_candidate(
        _f64(Xhat), _f64(x), _f64(c), float(a), _f64(w0), float(tol), int(max_iter)
    )
    return int(l), w, qs
