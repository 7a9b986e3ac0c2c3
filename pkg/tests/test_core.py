import json

import numpy as np
import pytest

from onlinecvxmf.core import (
    Dictionary,
    Model,
    ModelConfig,
    RepresentativeSet,
    SufficientStats,
    full_surrogate,
    objective_from_stats,
    surrogate_direct,
)
from onlinecvxmf.data import random_mixture_spec, gen_mixture, stream
from onlinecvxmf.online import fit


def test_objective_zero_dictionary():
    stats = SufficientStats(np.eye(2), np.ones((3, 2)), 5, 0.0)
    assert objective_from_stats(np.zeros((3, 2)), stats) == 0.0


def test_objective_scalar_expansion():
    stats = SufficientStats(np.array([[1.0]]), np.array([[2.0]]), 1, 0.0)
    for d in (-1.0, 0.0, 0.5, 2.0, 3.0):
        assert objective_from_stats(np.array([[d]]), stats) == pytest.approx(0.5 * d * d - 2 * d)
    assert objective_from_stats(np.array([[2.0]]), stats) == -2.0


def test_objective_ridge_term():
    stats = SufficientStats(np.array([[1.0]]), np.array([[2.0]]), 1, 0.0)
    # 0.5 d^2 (1 + k1) - 2d at d=2, k1=0.5
    assert objective_from_stats(np.array([[2.0]]), stats, 0.5) == pytest.approx(3.0 - 4.0)


def test_objective_matches_direct_sum_minus_constant(rng):
    m, k, t, lam = 3, 2, 7, 0.3
    X = rng.normal(size=(m, t))
    alphas = rng.normal(size=(k, t))
    stats = SufficientStats(alphas @ alphas.T / t, X @ alphas.T / t, t, 0.0)
    const = sum(0.5 * X[:, n] @ X[:, n] + lam * np.abs(alphas[:, n]).sum() for n in range(t)) / t
    for _ in range(5):
        D = rng.normal(size=(m, k))
        direct = surrogate_direct(D, list(X.T), list(alphas.T), lam)
        assert objective_from_stats(D, stats) == pytest.approx(direct - const, abs=1e-10)


def test_objective_minus_direct_is_constant_in_D(rng):
    m, k, t, lam = 4, 3, 11, 0.1
    X = rng.normal(size=(m, t))
    alphas = rng.normal(size=(k, t))
    stats = SufficientStats(alphas @ alphas.T / t, X @ alphas.T / t, t, 0.0)
    diffs = []
    for _ in range(2):
        D = rng.normal(size=(m, k)) * 3
        diffs.append(objective_from_stats(D, stats) - surrogate_direct(D, list(X.T), list(alphas.T), lam))
    assert abs(diffs[0] - diffs[1]) <= 1e-9


def test_surrogate_direct_examples():
    x = np.array([1.0, -2.0])
    assert surrogate_direct(np.ones((2, 1)), [x], [np.zeros(1)], 7.0) == pytest.approx(2.5)
    D = np.array([[1.0, 0.0], [2.0, 1.0]])
    a = np.array([0.3, -0.4])
    assert surrogate_direct(D, [D @ a], [a], 0.0) == 0.0
    with pytest.raises(ValueError):
        surrogate_direct(D, [], [], 0.1)


def test_full_surrogate_adds_constant():
    stats = SufficientStats(np.array([[1.0]]), np.array([[2.0]]), 1, 4.0)
    assert full_surrogate(np.array([[2.0]]), stats) == pytest.approx(2.0)


def test_objective_dimension_mismatch():
    stats = SufficientStats(np.eye(2), np.ones((3, 2)), 1, 0.0)
    with pytest.raises(ValueError):
        objective_from_stats(np.zeros((3, 3)), stats)
    with pytest.raises(ValueError):
        objective_from_stats(np.zeros((2, 2)), stats)
    with pytest.raises(ValueError):
        objective_from_stats(np.zeros((3, 2)), SufficientStats(np.eye(2), np.ones((3, 2)), 0, 0.0))


def test_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(k=0)
    with pytest.raises(ValueError):
        ModelConfig(k=3, init_sample_count=2)
    with pytest.raises(ValueError):
        ModelConfig(k=2, elastic_kappa=-1.0)
    with pytest.raises(ValueError):
        ModelConfig(k=2, variant="xx")
    with pytest.raises(ValueError):
        ModelConfig(k=2, update_probs=(0.3, 0.3))
    with pytest.raises(ValueError):
        ModelConfig(k=2, lam=-0.1)


def test_config_lambda_and_round_trip():
    cfg = ModelConfig(k=2, m=16)
    assert cfg.lambda_ == pytest.approx(0.2 / 4)
    assert ModelConfig(k=2, m=16, lam=0.7).lambda_ == 0.7
    with pytest.raises(ValueError):
        ModelConfig(k=2).lambda_
    back = ModelConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert back == cfg
    with pytest.raises(ValueError):
        ModelConfig.from_dict({"k": 2, "bogus": 1})


def test_dictionary_and_rep_set_helpers():
    rep = RepresentativeSet(np.array([[0.0, 2.0], [0.0, 4.0]]))
    assert rep.capacity == 2
    sw = rep.swapped(1, np.array([9.0, 9.0]))
    assert np.array_equal(sw.samples[:, 1], [9.0, 9.0]) and rep.samples[0, 1] == 2.0
    dic = Dictionary.from_weights([rep], [np.array([0.5, 0.5])])
    assert np.allclose(dic.columns[:, 0], [1.0, 2.0])


def _small_model(T=30, seed=0):
    spec = random_mixture_spec(3, 4, seed=seed)
    ds = gen_mixture(spec, 200, seed=seed)
    return fit(stream(ds), ModelConfig(k=3, init_sample_count=40, seed=seed, variant="ru"), T=T)[0]


def test_model_json_round_trip_is_bit_identical():
    model = _small_model()
    text = model.to_json()
    again = Model.from_json(text)
    assert again.to_json() == text
    assert np.array_equal(again.D, model.D)
    # restored generator continues the same stream
    assert again.rng.integers(1 << 30) == model.copy().rng.integers(1 << 30)


def test_model_load_rejects_broken_documents():
    doc = json.loads(_small_model().to_json())
    doc["D"][0][0] += 1.0
    with pytest.raises(ValueError, match="convex combination"):
        Model.from_dict(doc)
    doc = json.loads(_small_model().to_json())
    doc["format"] = "something-else"
    with pytest.raises(ValueError):
        Model.from_dict(doc)


def test_check_invariants_reports_problems():
    model = _small_model(T=5)
    assert model.check_invariants() == []
    bad = model.copy()
    bad.dictionary.weights[0] = bad.dictionary.weights[0] * 2
    assert any("sum" in p for p in bad.check_invariants())
    caps = [r.capacity for r in model.rep_sets]
    caps[1] += 1
    assert any("columns, expected" in p for p in model.check_invariants(caps))
    bad = model.copy()
    bad.stats.A[0, 1] += 1e-6
    assert any("symmetric" in p for p in bad.check_invariants())
