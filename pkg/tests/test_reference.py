import math

import numpy as np
import pytest
from scipy import stats

from gaussdag.data import GaussianDagParams
from gaussdag.errors import NonPositive, NonPositiveVariance, NotPositiveDefinite
from gaussdag.prior import from_prior_model
from gaussdag.reference import (
    JointGaussianParams,
    McCheck,
    NEGATIVE_CONTROL_MIN_SAMPLES,
    dcor_squared_u,
    fd_jacobian_det_2d,
    jacobian_2d,
    jacobian_report,
    joint_log_density,
    joint_to_regression,
    local_log_density_product,
    max_abs_pearson,
    max_abs_spearman_dispersion,
    mc_global_independence_check,
    mc_local_prior_check,
    mc_prior_moment_check,
    mc_subset_prior_check,
    random_complete_params,
    regression_to_joint,
    roundtrip_report,
    run_verification_suite,
    sample_decoupled,
    sample_normal_wishart,
    verification_priors,
    wishart_bartlett,
    wishart_outer,
)

from conftest import random_spd


def two_node(b=1.0, v1=1.0, v2=1.0, m1=0.0, m2=0.0):
    return GaussianDagParams(((), (0,)), [m1, m2], [[], [b]], [v1, v2])


def test_regression_to_joint_2d():
    j = regression_to_joint(two_node(), [0, 1])
    np.testing.assert_allclose(j.W, [[2.0, -1.0], [-1.0, 1.0]])
    np.testing.assert_allclose(j.mu, [0.0, 0.0])
    j = regression_to_joint(two_node(b=0.0, v1=2.0, v2=4.0, m1=1.0, m2=3.0), [0, 1])
    np.testing.assert_allclose(j.W, np.diag([0.5, 0.25]))
    np.testing.assert_allclose(j.mu, [1.0, 3.0])


def test_regression_2d_relations():
    b, v1, v2, m1, m2 = 0.7, 1.3, 0.4, -0.5, 2.0
    j = regression_to_joint(two_node(b, v1, v2, m1, m2), [0, 1])
    np.testing.assert_allclose(j.W[0, 0], 1 / v1 + b * b / v2)
    np.testing.assert_allclose(j.W[0, 1], -b / v2)
    np.testing.assert_allclose(j.W[1, 1], 1 / v2)
    np.testing.assert_allclose(j.mu, [m1, m2 + b * m1])
    back = joint_to_regression(j, [0, 1])
    assert back.intercepts[1] == pytest.approx(j.mu[1] - b * j.mu[0])


def test_joint_to_regression_diagonal():
    j = JointGaussianParams([1.0, 2.0, 3.0], np.diag([2.0, 4.0, 5.0]))
    p = joint_to_regression(j, [2, 0, 1])
    for c in p.coefs:
        assert np.all(c == 0)
    np.testing.assert_allclose(p.variances, [0.5, 0.25, 0.2])
    np.testing.assert_allclose(p.intercepts, [1.0, 2.0, 3.0])


def test_joint_to_regression_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        joint_to_regression(JointGaussianParams([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]]), [0, 1])


def test_regression_rejects_wrong_parents():
    with pytest.raises(ValueError):
        regression_to_joint(two_node(), [1, 0])


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_roundtrip_and_factorization(n):
    rng = np.random.default_rng(n)
    order = list(rng.permutation(n))
    p = random_complete_params(order, rng)
    j = regression_to_joint(p, order)
    back = joint_to_regression(j, order)
    np.testing.assert_allclose(back.intercepts, p.intercepts, atol=1e-10)
    np.testing.assert_allclose(back.variances, p.variances, rtol=1e-10)
    for a, b in zip(back.coefs, p.coefs):
        np.testing.assert_allclose(a, b, atol=1e-10)
    mvn = stats.multivariate_normal(j.mu, np.linalg.inv(j.W))
    for _ in range(100):
        x = j.mu + 2 * rng.normal(size=n)
        ref = mvn.logpdf(x)
        assert local_log_density_product(p, x) == pytest.approx(ref, rel=1e-9, abs=1e-9)
        assert joint_log_density(j, x) == pytest.approx(ref, rel=1e-9, abs=1e-9)


def test_jacobian_values():
    assert jacobian_2d(1.0, 1.0) == 1.0
    assert jacobian_2d(1.0, 2.0) == 0.125
    with pytest.raises(NonPositive):
        jacobian_2d(0.0, 1.0)


@pytest.mark.parametrize("seed", range(5))
def test_jacobian_fd(seed):
    rng = np.random.default_rng(seed)
    theta = np.array([rng.uniform(0.3, 3), rng.uniform(0.3, 3), *rng.normal(size=3)])
    exact = jacobian_2d(theta[0], theta[1])
    assert fd_jacobian_det_2d(theta) == pytest.approx(exact, rel=1e-5)


def test_deterministic_reports():
    assert jacobian_report(0).passed
    rep = roundtrip_report(0)
    assert rep.passed
    assert {c.name for c in rep.checks} == {"roundtrip.max_error", "factorization.max_rel_error"}


def test_mc_check_pass_semantics():
    assert McCheck("a", 0.1, 0.1).passed
    assert not McCheck("a", 0.11, 0.1).passed
    assert not McCheck("a", float("nan"), 0.1).passed


def test_sampler_determinism_and_workers():
    pr, _ = verification_priors()
    a = sample_normal_wishart(pr, 5, 60_000)
    b = sample_normal_wishart(pr, 5, 60_000, workers=3)
    np.testing.assert_array_equal(a.mu, b.mu)
    np.testing.assert_array_equal(a.W, b.W)
    c = sample_normal_wishart(pr, 6, 1000)
    assert not np.array_equal(a.mu[:1000], c.mu)
    assert len(a) == 60_000 and a[0].n == 3


def test_bartlett_marginal_is_gamma():
    # W_11 ~ Gamma(alpha/2, scale 2 (T^{-1})_11): an independent closed-form marginal
    rng = np.random.default_rng(0)
    T = random_spd(3, rng)
    alpha = 4.3
    W = wishart_bartlett(alpha, T, 40_000, np.random.default_rng(1))
    s11 = np.linalg.inv(T)[0, 0]
    ks = stats.kstest(W[:, 0, 0], stats.gamma(a=alpha / 2, scale=2 * s11).cdf).statistic
    assert ks < 2.5 / math.sqrt(40_000)


def test_bartlett_matches_outer_and_scipy():
    rng = np.random.default_rng(2)
    T = random_spd(3, rng)
    M = 40_000
    wb = wishart_bartlett(6, T, M, np.random.default_rng(3))
    wo = wishart_outer(6, T, M, np.random.default_rng(4))
    ws = stats.wishart(df=6, scale=np.linalg.inv(T)).rvs(M, random_state=5)
    EW = 6 * np.linalg.inv(T)
    for w in (wb, wo, ws):
        se = w.std(axis=0) / math.sqrt(M)
        assert np.all(np.abs(w.mean(axis=0) - EW) < 5 * se)
    with pytest.raises(ValueError):
        wishart_outer(2.5, T, 10, rng)


def test_dependence_statistics_detect_and_accept():
    rng = np.random.default_rng(0)
    M = 20_000
    x = rng.normal(size=M)
    y = rng.normal(size=M)
    thr = 5 / math.sqrt(M)
    assert max_abs_pearson(x, y) < thr
    assert max_abs_spearman_dispersion(x, y) < thr
    assert dcor_squared_u(x, y) < 5 * math.sqrt(2) / 2000
    # uncorrelated but dependent: Pearson misses it, the others do not
    z = x * x + 0.1 * y
    assert max_abs_pearson(x, z) < thr
    assert max_abs_spearman_dispersion(x, z) > thr
    assert dcor_squared_u(x, z) > 5 * math.sqrt(2) / 2000
    # scale mixture: sign-free dependence through the spread only
    s = np.exp(rng.normal(size=M))
    assert max_abs_spearman_dispersion(s, y * s) > thr


def test_prior_and_subset_moments():
    pr, _ = verification_priors()
    samples = sample_normal_wishart(pr, 0, 50_000)
    assert mc_prior_moment_check(pr, 0, 0, samples=samples).passed
    for Y in ([0, 2], [1], [0, 1, 2]):
        assert mc_subset_prior_check(pr, Y, 0, 0, samples=samples).passed


@pytest.mark.parametrize("partition", [([0, 1], [2]), ([0], [1, 2]), ([1], [0, 2])])
def test_global_independence_passes(partition):
    pr, _ = verification_priors()
    rep = mc_global_independence_check(pr, partition, 1, 50_000)
    assert rep.passed, [c for c in rep.checks if not c.passed]


def test_global_independence_rejects_empty_block():
    pr, _ = verification_priors()
    with pytest.raises(ValueError):
        mc_global_independence_check(pr, ([0, 1, 2], []), 0, 100)


@pytest.mark.parametrize("order, i", [([0, 1, 2], 2), ([2, 0, 1], 1), ([1, 2, 0], 1), ([0, 1, 2], 0)])
def test_local_prior_passes(order, i):
    pr, _ = verification_priors()
    rep = mc_local_prior_check(pr, order, i, 2, 50_000)
    assert rep.passed, [c for c in rep.checks if not c.passed]


def test_local_prior_passes_non_default_prior():
    rng = np.random.default_rng(8)
    pr = from_prior_model(rng.normal(size=4), random_spd(4, rng), 0.7, 7.5)
    rep = mc_local_prior_check(pr, [3, 1, 0, 2], 0, 4, 50_000)
    assert rep.passed, [c for c in rep.checks if not c.passed]


def test_negative_control_decoupled_fails():
    _, control = verification_priors()
    M = NEGATIVE_CONTROL_MIN_SAMPLES
    rep = mc_global_independence_check(control, ([0, 1], [2]), 0, M, samples=sample_decoupled(control, 0, M))
    assert not rep.passed
    # the same prior sampled correctly passes
    assert mc_global_independence_check(control, ([0, 1], [2]), 0, M).passed


def test_negative_control_raw_local_fails():
    pr, _ = verification_priors()
    rep = mc_local_prior_check(pr, [0, 1, 2], 2, 0, NEGATIVE_CONTROL_MIN_SAMPLES, standardize=False)
    assert not rep.passed


def test_suite_expected_outcomes_small_m():
    results = run_verification_suite(seed=3, M=2000)
    names = [r.name for r, _ in results]
    assert len(names) == len(set(names))
    assert sum(1 for _, e in results if not e) == 2
    for rep, expected in results:
        assert rep.passed == expected, rep.name


def test_inv_v_ks_discriminates_degrees_of_freedom():
    from gaussdag.prior import local_prior_params
    from gaussdag.reference import local_parameters

    pr, _ = verification_priors()
    M = 50_000
    _, _, v = local_parameters(sample_normal_wishart(pr, 9, M), [0, 1, 2], 1)
    lp = local_prior_params(pr, [0, 1, 2], 1)
    thr = 2.5 / math.sqrt(M)

    def ks(dof):
        return stats.kstest(1 / v, stats.gamma(a=dof / 2, scale=2 / lp.scale_precision).cdf).statistic

    assert lp.dof == pr.alpha_w - pr.n + 2
    assert ks(lp.dof) < thr
    assert ks(pr.alpha_w + pr.n - 1) > thr
