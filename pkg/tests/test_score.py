import itertools
import math
import threading

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import multivariate_t

from gaussdag.dag import Dag, all_complete_dags, complete_dag
from gaussdag.data import Dataset, SufficientStats
from gaussdag.errors import ChildInParents, DimensionMismatch, EmptyIndexSet
from gaussdag.prior import NormalWishartPrior, default_prior, from_prior_model
from gaussdag.score import (
    FamilyScoreCache,
    ScoreContext,
    family_score,
    family_scores,
    log_marginal_likelihood,
    log_ml_subset,
    oracle_log_ml_sequential,
    predictive_log_density,
    score_subset_restricted,
    t_log_density,
)

from conftest import random_dataset, random_spd, rel_close

HAND = math.log(2.0 / (9.0 * math.pi))


def hand_ctx():
    pr = NormalWishartPrior(np.zeros(2), 1.0, 3.0, np.eye(2))
    return pr, ScoreContext.from_dataset(pr, Dataset(("a", "b"), [[1.0, 0.0]]))


def test_hand_instance_closed_form():
    _, ctx = hand_ctx()
    np.testing.assert_allclose(ctx.R, np.diag([1.5, 1.0]))
    assert log_ml_subset(ctx, [0, 1]) == pytest.approx(HAND, rel=1e-12)
    assert HAND == pytest.approx(-2.64881, abs=1e-5)


def test_hand_instance_t_density():
    pr, _ = hand_ctx()
    assert predictive_log_density(pr, [1.0, 0.0]) == pytest.approx(HAND, rel=1e-12)
    # scipy's shape matrix is the inverse of the precision: (am+1)/(am*dof) T
    ref = multivariate_t(loc=[0, 0], shape=np.eye(2), df=2).logpdf([1.0, 0.0])
    assert ref == pytest.approx(HAND, rel=1e-12)


def test_hand_instance_single_variable():
    _, ctx = hand_ctx()
    assert log_ml_subset(ctx, [1]) == pytest.approx(math.log(1 / (2 * math.sqrt(2))), rel=1e-12)


def test_empty_data_scores_zero():
    pr = default_prior(3)
    ctx = ScoreContext(pr, SufficientStats(0, np.zeros(3), np.zeros((3, 3))))
    for Y in ([0], [1, 2], [0, 1, 2]):
        assert log_ml_subset(ctx, Y) == 0.0
    assert log_marginal_likelihood(ctx, None, complete_dag([2, 0, 1])) == 0.0


def test_subset_errors():
    _, ctx = hand_ctx()
    with pytest.raises(EmptyIndexSet):
        log_ml_subset(ctx, [])
    with pytest.raises(IndexError):
        log_ml_subset(ctx, [2])


def test_family_score_errors():
    _, ctx = hand_ctx()
    with pytest.raises(ChildInParents):
        family_score(ctx, None, 0, [0])
    with pytest.raises(DimensionMismatch):
        family_score(ctx, None, 5, [])
    with pytest.raises(DimensionMismatch):
        log_marginal_likelihood(ctx, None, Dag.empty(3))
    with pytest.raises(DimensionMismatch):
        ScoreContext(default_prior(3), SufficientStats(0, np.zeros(2), np.zeros((2, 2))))


def test_family_without_parents_is_subset_score():
    ctx = ScoreContext.from_dataset(default_prior(3), random_dataset(3, 20, 1))
    assert family_score(ctx, None, 1, []) == log_ml_subset(ctx, [1])


def test_empty_graph_is_sum_of_singletons():
    ctx = ScoreContext.from_dataset(default_prior(3), random_dataset(3, 20, 1, correlated=False))
    assert log_marginal_likelihood(ctx, None, Dag.empty(3)) == pytest.approx(
        sum(log_ml_subset(ctx, [i]) for i in range(3)), rel=1e-14)


@pytest.mark.parametrize("seed", range(3))
def test_complete_dag_telescopes(seed):
    d = random_dataset(4, 25, seed)
    ctx = ScoreContext.from_dataset(default_prior(4), d)
    full = log_ml_subset(ctx, range(4))
    for g in all_complete_dags(4):
        assert rel_close(log_marginal_likelihood(ctx, None, g), full, 1e-9)


def test_chain_equivalents_score_equal():
    ctx = ScoreContext.from_dataset(default_prior(3), random_dataset(3, 40, 8))
    a = Dag.from_arcs(3, [(0, 1), (1, 2)])
    b = Dag.from_arcs(3, [(2, 1), (1, 0)])
    c = Dag.from_arcs(3, [(1, 0), (1, 2)])
    collider = Dag.from_arcs(3, [(0, 1), (2, 1)])
    sa, sb, sc = (log_marginal_likelihood(ctx, None, g) for g in (a, b, c))
    assert rel_close(sa, sb, 1e-9) and rel_close(sa, sc, 1e-9)
    assert not rel_close(sa, log_marginal_likelihood(ctx, None, collider), 1e-6)


@pytest.mark.parametrize("seed", range(3))
def test_covered_arc_mechanism(seed):
    ctx = ScoreContext.from_dataset(default_prior(4), random_dataset(4, 30, seed))
    for i, j in itertools.permutations(range(4), 2):
        rest = [k for k in range(4) if k not in (i, j)]
        for r in range(len(rest) + 1):
            for pi in itertools.combinations(rest, r):
                lhs = family_score(ctx, None, i, pi + (j,)) + family_score(ctx, None, j, pi)
                rhs = family_score(ctx, None, j, pi + (i,)) + family_score(ctx, None, i, pi)
                assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("N", [1, 10, 50])
def test_sequential_oracle(n, N):
    rng = np.random.default_rng(100 * n + N)
    pr = from_prior_model(rng.normal(size=n), random_spd(n, rng), rng.uniform(0.5, 3), n + 2 + rng.uniform(0, 4))
    d = random_dataset(n, N, seed=N + n)
    ctx = ScoreContext.from_dataset(pr, d)
    assert rel_close(oracle_log_ml_sequential(pr, d), log_ml_subset(ctx, range(n)), 1e-8)


def test_sequential_oracle_trivial_cases():
    pr = default_prior(2)
    assert oracle_log_ml_sequential(pr, Dataset(("a", "b"), np.zeros((0, 2)))) == 0.0
    x = [0.4, -1.1]
    assert oracle_log_ml_sequential(pr, Dataset(("a", "b"), [x])) == predictive_log_density(pr, x)


def test_t_density_matches_scipy(rng):
    P = random_spd(3, rng)
    x, loc = rng.normal(size=3), rng.normal(size=3)
    ref = multivariate_t(loc=loc, shape=np.linalg.inv(P), df=3.7).logpdf(x)
    assert t_log_density(x, loc, P, 3.7) == pytest.approx(ref, rel=1e-12)


def test_predictive_mode_at_location():
    pr = NormalWishartPrior(np.array([0.3, -0.2]), 1.0, 3.0, np.eye(2))
    grid = np.linspace(-2, 2, 41)
    best = max(((a, b) for a in grid for b in grid), key=lambda x: predictive_log_density(pr, x))
    np.testing.assert_allclose(best, [0.3, -0.2], atol=1e-12)


def test_predictive_integrates_to_one():
    pr = NormalWishartPrior(np.zeros(2), 1.0, 4.0, np.eye(2))
    f = lambda y, x: math.exp(predictive_log_density(pr, [x, y]))
    total, _ = integrate.dblquad(f, -np.inf, np.inf, -np.inf, np.inf, epsabs=1e-7)
    assert total == pytest.approx(1.0, abs=1e-3)


def test_predictive_shape_error():
    with pytest.raises(DimensionMismatch):
        predictive_log_density(default_prior(2), [1.0, 2.0, 3.0])


@pytest.mark.parametrize("Y", [[0], [1, 3], [0, 2, 3], [0, 1, 2, 3]])
def test_subset_consistency(Y):
    rng = np.random.default_rng(3)
    pr = from_prior_model(rng.normal(size=4), random_spd(4, rng), 2.0, 8.0)
    d = random_dataset(4, 30, 6)
    ctx = ScoreContext.from_dataset(pr, d)
    assert log_ml_subset(ctx, Y) == pytest.approx(score_subset_restricted(pr, d, Y), rel=1e-10)


def test_row_permutation_invariance():
    d = random_dataset(3, 30, 2)
    perm = np.random.default_rng(0).permutation(30)
    pr = default_prior(3)
    g = Dag.from_arcs(3, [(0, 1), (2, 1)])
    a = log_marginal_likelihood(ScoreContext.from_dataset(pr, d), None, g)
    b = log_marginal_likelihood(ScoreContext.from_dataset(pr, Dataset(d.names, d.rows[perm])), None, g)
    assert a == pytest.approx(b, rel=1e-12)


def test_cache_consistency():
    ctx = ScoreContext.from_dataset(default_prior(4), random_dataset(4, 30, 4))
    cache = FamilyScoreCache(ctx)
    g = Dag.from_arcs(4, [(0, 1), (2, 1), (1, 3)])
    first = family_scores(ctx, cache, g)
    assert cache.misses == 4 and len(cache) == 4
    again = family_scores(ctx, cache, g)
    assert first == again and cache.hits == 4
    fresh = family_scores(ScoreContext.from_dataset(ctx.prior, random_dataset(4, 30, 4)), None, g)
    assert first == fresh
    other = ScoreContext.from_dataset(ctx.prior, random_dataset(4, 30, 5))
    with pytest.raises(ValueError):
        family_score(other, cache, 0, [])


def test_cache_concurrent_matches_serial():
    d = random_dataset(5, 40, 11)
    pr = default_prior(5)
    keys = [(c, pa) for c in range(5) for r in range(3)
            for pa in itertools.combinations([k for k in range(5) if k != c], r)]
    serial = {k: family_score(ScoreContext.from_dataset(pr, d), None, *k) for k in keys}
    ctx = ScoreContext.from_dataset(pr, d)
    cache = FamilyScoreCache(ctx)
    out = {}

    def work(offset):
        for k in keys[offset:] + keys[:offset]:
            out[k] = cache.get_or_compute(k[0], k[1])

    threads = [threading.Thread(target=work, args=(7 * t,)) for t in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert out == serial
