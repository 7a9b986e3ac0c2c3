"""Property-based checks of the structural invariants."""

import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from onlinecvxmf.core import Dictionary, QpSettings, RepresentativeSet, SufficientStats, objective_from_stats, surrogate_direct
from onlinecvxmf.metrics import approx_error, clustering_accuracy
from onlinecvxmf.online import candidate_sets, update_stats
from onlinecvxmf.solvers import block_cd_dictionary, kkt_residual, project_simplex, sparse_code

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
unit = st.floats(-1, 1, allow_nan=False, allow_infinity=False)


@given(arrays(np.float64, st.integers(1, 12), elements=finite))
def test_simplex_projection_feasible_and_idempotent(v):
    w = project_simplex(v)
    assert np.all(w >= 0) and abs(w.sum() - 1) <= 1e-12
    assert np.allclose(project_simplex(w), w, atol=1e-12)


@given(st.integers(1, 10).flatmap(lambda n: st.tuples(arrays(np.float64, n, elements=finite), arrays(np.float64, n, elements=finite))))
def test_simplex_projection_nonexpansive(pair):
    u, v = pair
    assert np.linalg.norm(project_simplex(u) - project_simplex(v)) <= np.linalg.norm(u - v) * (1 + 1e-12) + 1e-12


@given(st.integers(0, 2**32 - 1), st.integers(1, 40))
def test_stats_recursion_matches_direct_sums(seed, t):
    r = np.random.default_rng(seed)
    X, alphas = r.normal(size=(3, t)), r.normal(size=(2, t))
    s = SufficientStats.zeros(3, 2)
    for n in range(t):
        s = update_stats(s, X[:, n], alphas[:, n])
    assert s.t == t
    assert np.abs(s.A - alphas @ alphas.T / t).max() <= 1e-10
    assert np.abs(s.B - X @ alphas.T / t).max() <= 1e-10
    assert np.abs(s.A - s.A.T).max() <= 1e-12


@given(st.integers(0, 2**32 - 1), st.floats(0, 2), st.floats(0, 0.1))
def test_sparse_code_kkt(seed, lam, kappa):
    r = np.random.default_rng(seed)
    D, x = r.normal(size=(4, 3)), r.normal(size=4)
    a = sparse_code(x, D, lam, kappa)
    assert kkt_residual(x, D, a, lam, kappa) <= 1e-7


@given(st.integers(0, 2**32 - 1))
def test_objective_difference_constant_in_D(seed):
    r = np.random.default_rng(seed)
    X, alphas = r.normal(size=(3, 6)), r.normal(size=(2, 6))
    stats = SufficientStats(alphas @ alphas.T / 6, X @ alphas.T / 6, 6, 0.0)
    d = [objective_from_stats(D, stats) - surrogate_direct(D, list(X.T), list(alphas.T), 0.3)
         for D in (r.normal(size=(3, 2)), r.normal(size=(3, 2)) * 10)]
    assert abs(d[0] - d[1]) <= 1e-9 * max(1.0, abs(d[0]))


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_candidate_sets_shape(seed, N):
    r = np.random.default_rng(seed)
    rep = RepresentativeSet(r.normal(size=(3, N)))
    x = r.normal(size=3)
    c = candidate_sets(rep, x)
    assert len(c) == N + 1 and all(s.capacity == N for s in c)
    for l in range(1, N + 1):
        diff = np.flatnonzero(np.any(c[l].samples != rep.samples, axis=0))
        assert set(diff) <= {l - 1} and np.array_equal(c[l].samples[:, l - 1], x)


@given(st.integers(0, 2**32 - 1))
def test_block_cd_feasible_and_monotone(seed):
    r = np.random.default_rng(seed)
    k = int(r.integers(1, 4))
    alphas = r.uniform(size=(k, 10))
    X = r.normal(size=(3, 10))
    stats = SufficientStats(alphas @ alphas.T / 10, X @ alphas.T / 10, 10, 0.0)
    reps = [RepresentativeSet(r.normal(size=(3, int(r.integers(1, 6))))) for _ in range(k)]
    start = Dictionary.from_weights(reps, [project_simplex(r.normal(size=p.capacity)) for p in reps])
    dic, f = block_cd_dictionary(stats, reps, start, QpSettings(), 1e-6)
    assert f <= objective_from_stats(start.columns, stats, 1e-6) + 1e-12
    for w, rep, col in zip(dic.weights, reps, dic.columns.T):
        assert np.all(w >= 0) and abs(w.sum() - 1) <= 1e-9
        assert np.linalg.norm(rep.samples @ w - col) <= 1e-6


@given(st.integers(0, 2**32 - 1))
def test_accuracy_relabel_invariant(seed):
    r = np.random.default_rng(seed)
    pred, truth = r.integers(0, 5, 30), r.integers(0, 5, 30)
    p1, p2 = r.permutation(5), r.permutation(5) + 10
    base = clustering_accuracy(pred, truth)
    assert np.isclose(clustering_accuracy(p1[pred], p1[truth]), base)
    assert np.isclose(clustering_accuracy(p2[pred], truth), base)
    assert 0 < base <= 1
