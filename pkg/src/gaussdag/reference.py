"""Independent oracles: parameter transforms and Monte-Carlo checks.

Nothing here is used by the scoring path. The transforms between
regression parameters and a joint ``(mu, W)`` are recursive one-node
extensions/peelings; the samplers draw normal-Wishart parameters; the
``mc_*`` functions turn samples into :class:`McReport` objects whose checks
use thresholds that shrink like ``1/sqrt(M)``.

Threshold conventions (``M`` samples, ``K`` dCor subsample size):

* Pearson and Spearman statistics: ``max |r| <= 5 / sqrt(M)``.
* Moment errors, in units of the empirical standard deviation of the
  summand: ``max |mean - target| / sd <= 5 / sqrt(M)``.
* Bias-corrected squared distance correlation: ``<= 5 sqrt(2) / K``.
* Kolmogorov-Smirnov distance: ``<= 2.5 / sqrt(M)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats as sps
from scipy.spatial.distance import pdist, squareform

from gaussdag import linalg
from gaussdag.data import GaussianDagParams
from gaussdag.errors import NonPositive, NonPositiveVariance, NotPositiveDefinite
from gaussdag.prior import NormalWishartPrior, local_prior_params, marginal_subset_prior

Z_SCALE = 5.0
KS_SCALE = 2.5
DCOR_SUBSAMPLE = 2000
CHUNK = 25_000


@dataclass(frozen=True)
class JointGaussianParams:
    mu: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64).reshape(-1)
        W = np.asarray(self.W, dtype=np.float64)
        if W.shape != (mu.size, mu.size):
            raise ValueError("W must be n x n")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "W", W)

    @property
    def n(self) -> int:
        return self.mu.shape[0]


# -- regression <-> joint --------------------------------------------------------

def _check_order(order: Sequence[int], n: int) -> list[int]:
    order = [int(o) for o in order]
    if sorted(order) != list(range(n)):
        raise ValueError(f"{order} is not an ordering of {n} nodes")
    return order


def regression_to_joint(p: GaussianDagParams, order: Sequence[int]) -> JointGaussianParams:
    """``(mu, W)`` of the product of regressions of a complete DAG in ``order``.

    Grows the joint one node at a time: appending ``x = m + b.x_P + e`` with
    ``Var(e) = v`` to ``(mu_P, W_P)`` gives
    ``W = [[W_P + b b^T / v, -b / v], [-b^T / v, 1 / v]]`` and
    ``mu = (mu_P, m + b . mu_P)``.
    """
    n = p.n
    order = _check_order(order, n)
    W = np.zeros((n, n))
    mu = np.zeros(n)
    for k, i in enumerate(order):
        pred = sorted(order[:k])
        if list(p.parents[i]) != pred:
            raise ValueError(f"node {i} must have parents {pred} in a complete DAG of this order")
        v = float(p.variances[i])
        if not v > 0:
            raise NonPositiveVariance(f"variance of node {i} must be positive")
        b = p.coefs[i]
        if pred:
            W[np.ix_(pred, pred)] += np.outer(b, b) / v
            W[pred, i] = -b / v
            W[i, pred] = -b / v
        W[i, i] = 1.0 / v
        mu[i] = p.intercepts[i] + (b @ mu[pred] if pred else 0.0)
    return JointGaussianParams(mu, W)


def joint_to_regression(j: JointGaussianParams, order: Sequence[int]) -> GaussianDagParams:
    """Inverse of :func:`regression_to_joint` by peeling the last node.

    With block 2 the last node: ``b = -W22^{-1} W21``, ``v = W22^{-1}``,
    ``m = mu2 - b . mu1``, then recurse on ``(mu1, W11 - W12 W22^{-1} W21)``.
    """
    n = j.n
    order = _check_order(order, n)
    linalg.cholesky(linalg.symmetrize(j.W))
    intercepts = np.zeros(n)
    variances = np.zeros(n)
    coefs: list[np.ndarray] = [np.zeros(0)] * n
    parents: list[tuple[int, ...]] = [()] * n
    mu = j.mu.copy()
    W = linalg.symmetrize(j.W)
    # active holds original indices; W, mu are indexed by position in active
    active = sorted(order)
    for k in range(n - 1, -1, -1):
        i = order[k]
        pos = active.index(i)
        rest = [a for a in range(len(active)) if a != pos]
        w22 = W[pos, pos]
        if not w22 > 0:
            raise NotPositiveDefinite("precision has a non-positive diagonal")
        w21 = W[pos, rest]
        b = -w21 / w22
        variances[i] = 1.0 / w22
        intercepts[i] = mu[pos] - (b @ mu[rest] if rest else 0.0)
        coefs[i] = b
        parents[i] = tuple(active[a] for a in rest)
        W = W[np.ix_(rest, rest)] - np.outer(w21, w21) / w22
        mu = mu[rest]
        active = [active[a] for a in rest]
    return GaussianDagParams(tuple(parents), intercepts, tuple(coefs), variances)


def joint_log_density(j: JointGaussianParams, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    d = x - j.mu
    lower = linalg.cholesky(linalg.symmetrize(j.W))
    return 0.5 * (2.0 * float(np.sum(np.log(np.diag(lower)))) - j.n * math.log(2 * math.pi) - float(d @ j.W @ d))


def local_log_density_product(p: GaussianDagParams, x) -> float:
    """``sum_i log N(x_i | m_i + b_i . x_pa(i), variance v_i)``."""
    x = np.asarray(x, dtype=np.float64)
    total = 0.0
    for i in range(p.n):
        pa = list(p.parents[i])
        mean = p.intercepts[i] + (p.coefs[i] @ x[pa] if pa else 0.0)
        v = p.variances[i]
        total += -0.5 * (math.log(2 * math.pi * v) + (x[i] - mean) ** 2 / v)
    return total


# -- bivariate Jacobian ------------------------------------------------------

def jacobian_2d(v1: float, v21: float) -> float:
    """``|d(w11, w12, w22, mu1, mu2) / d(v1, v21, b12, e1, e21)| = v1^-2 v21^-3``."""
    if not (v1 > 0 and v21 > 0):
        raise NonPositive("variances must be positive")
    return v1 ** -2 * v21 ** -3


def transform_2d(theta) -> np.ndarray:
    """``(v1, v21, b12, e1, e21) -> (w11, w12, w22, mu1, mu2)``."""
    v1, v21, b12, e1, e21 = (float(t) for t in theta)
    return np.array([
        1.0 / v1 + b12 ** 2 / v21,
        -b12 / v21,
        1.0 / v21,
        e1,
        e21 + b12 * e1,
    ])


def fd_jacobian_det_2d(theta, rel_step: float = 1e-6) -> float:
    """``|det|`` of the central-difference Jacobian of :func:`transform_2d`."""
    theta = np.asarray(theta, dtype=np.float64)
    J = np.zeros((5, 5))
    for k in range(5):
        h = rel_step * max(1.0, abs(theta[k]))
        up, dn = theta.copy(), theta.copy()
        up[k] += h
        dn[k] -= h
        J[:, k] = (transform_2d(up) - transform_2d(dn)) / (2 * h)
    return abs(float(np.linalg.det(J)))


# -- samplers ----------------------------------------------------------------

@dataclass(frozen=True)
class NormalWishartSamples:
    """``M`` draws stored as arrays; indexing yields :class:`JointGaussianParams`."""

    mu: np.ndarray
    W: np.ndarray

    def __len__(self) -> int:
        return self.mu.shape[0]

    def __getitem__(self, k: int) -> JointGaussianParams:
        return JointGaussianParams(self.mu[k], self.W[k])


def _scale_factor(T: np.ndarray) -> np.ndarray:
    # lower factor of the Wishart scale matrix T^{-1}
    return np.linalg.cholesky(linalg.inverse(T))


def wishart_bartlett_factor(alpha: float, T, size: int, rng: np.random.Generator) -> np.ndarray:
    """Lower factors ``C = L A`` of Bartlett draws ``W = C C^T ~ Wishart(alpha, T)``.

    Valid for real ``alpha > n - 1``: ``L L^T = T^{-1}``, ``A`` lower
    triangular with ``A_kk = sqrt(chi2(alpha - k))`` and ``A_jk ~ N(0, 1)``.
    """
    T = np.asarray(T, dtype=np.float64)
    n = T.shape[0]
    L = _scale_factor(T)
    A = np.zeros((size, n, n))
    for k in range(n):
        A[:, k, k] = np.sqrt(rng.chisquare(alpha - k, size=size))
        if k:
            A[:, k, :k] = rng.standard_normal((size, k))
    return np.einsum("ij,mjk->mik", L, A)


def wishart_bartlett(alpha: float, T, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` draws of ``Wishart(alpha, T)`` via the Bartlett construction."""
    C = wishart_bartlett_factor(alpha, T, size, rng)
    return np.einsum("mij,mkj->mik", C, C)


def wishart_outer(alpha: int, T, size: int, rng: np.random.Generator) -> np.ndarray:
    """Integer-``alpha`` Wishart as a sum of ``alpha`` outer products of
    ``N(0, T^{-1})`` vectors; exists only to cross-check the Bartlett sampler."""
    if alpha != int(alpha) or alpha < 1:
        raise ValueError("outer-product sampler needs a positive integer alpha")
    T = np.asarray(T, dtype=np.float64)
    L = _scale_factor(T)
    Z = rng.standard_normal((size, int(alpha), T.shape[0])) @ L.T
    return np.einsum("mai,maj->mij", Z, Z)


def _chunked(seed: int, M: int, draw: Callable[[int, np.random.Generator], tuple[np.ndarray, ...]],
             workers: int = 1):
    """Draw ``M`` samples in fixed-size chunks, each with its own spawned stream.

    Chunking is fixed by ``CHUNK`` and chunks are concatenated in stream
    order, so results never depend on ``workers``.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    sizes = [CHUNK] * (M // CHUNK) + ([M % CHUNK] if M % CHUNK else [])
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(sz, np.random.default_rng(ss)) for sz, ss in zip(sizes, streams)]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: draw(*job), jobs))
    else:
        parts = [draw(*job) for job in jobs]
    return tuple(np.concatenate(arrs, axis=0) for arrs in zip(*parts))


def _mu_given_factor(nu, alpha_mu, C, rng) -> np.ndarray:
    # C lower with C C^T = W; mu = nu + C^{-T} z / sqrt(alpha_mu)
    z = rng.standard_normal(C.shape[:2])
    y = np.linalg.solve(np.swapaxes(C, 1, 2), z[..., None])[..., 0]
    return nu + y / math.sqrt(alpha_mu)


def sample_normal_wishart(pr: NormalWishartPrior, seed: int, M: int, workers: int = 1) -> NormalWishartSamples:
    """``W ~ Wishart(alpha_w, T)``, then ``mu | W ~ N(nu, precision alpha_mu W)``."""
    def draw(size, rng):
        C = wishart_bartlett_factor(pr.alpha_w, pr.T, size, rng)
        W = np.einsum("mij,mkj->mik", C, C)
        return _mu_given_factor(pr.nu, pr.alpha_mu, C, rng), W

    mu, W = _chunked(seed, M, draw, workers)
    return NormalWishartSamples(mu, W)


def sample_decoupled(pr: NormalWishartPrior, seed: int, M: int, workers: int = 1) -> NormalWishartSamples:
    """Negative control: Wishart ``W``, but ``mu`` drawn with the fixed precision
    ``alpha_mu E[W]`` regardless of the sampled ``W``."""
    fixed = pr.alpha_mu * pr.alpha_w * linalg.inverse(pr.T)
    chol = np.linalg.cholesky(fixed)

    def draw(size, rng):
        W = wishart_bartlett(pr.alpha_w, pr.T, size, rng)
        z = rng.standard_normal((size, pr.n))
        mu = pr.nu + np.linalg.solve(chol.T, z.T).T
        return mu, W

    mu, W = _chunked(seed, M, draw, workers)
    return NormalWishartSamples(mu, W)


def sample_observations(samples: NormalWishartSamples, seed: int) -> np.ndarray:
    """One ``x ~ N(mu, W^{-1})`` per parameter draw."""
    rng = np.random.default_rng(seed)
    C = np.linalg.cholesky(samples.W)
    z = rng.standard_normal(samples.mu.shape)
    y = np.linalg.solve(np.swapaxes(C, 1, 2), z[..., None])[..., 0]
    return samples.mu + y


# -- reports and statistics --------------------------------------------------

@dataclass
class McCheck:
    name: str
    statistic: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(self.statistic <= self.threshold)


@dataclass
class McReport:
    samples: int
    checks: list[McCheck] = field(default_factory=list)
    name: str = ""

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, statistic: float, threshold: float) -> None:
        self.checks.append(McCheck(name, float(statistic), float(threshold)))


def _columns(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x.reshape(x.shape[0], -1)


def max_abs_pearson(A, B) -> float:
    A, B = _columns(A), _columns(B)
    A = (A - A.mean(0)) / A.std(0)
    B = (B - B.mean(0)) / B.std(0)
    return float(np.max(np.abs(A.T @ B / A.shape[0])))


def _ranks(x: np.ndarray) -> np.ndarray:
    return np.apply_along_axis(sps.rankdata, 0, x)


def max_abs_spearman_dispersion(A, B) -> float:
    """Max Spearman correlation between absolute deviations from the median.

    Picks up the scale dependence that Pearson on raw values cannot.
    """
    A, B = _columns(A), _columns(B)
    A = _ranks(np.abs(A - np.median(A, axis=0)))
    B = _ranks(np.abs(B - np.median(B, axis=0)))
    return max_abs_pearson(A, B)


def _u_centered(x: np.ndarray) -> np.ndarray:
    a = squareform(pdist(x))
    n = a.shape[0]
    row = a.sum(axis=1)
    total = row.sum()
    u = a - row[:, None] / (n - 2) - row[None, :] / (n - 2) + total / ((n - 1) * (n - 2))
    np.fill_diagonal(u, 0.0)
    return u


def dcor_squared_u(A, B, K: int | None = DCOR_SUBSAMPLE) -> float:
    """Bias-corrected squared distance correlation on the first ``K`` rows.

    Columns are rank-transformed first; the statistic is centered at zero
    under independence with standard deviation about ``sqrt(2) / K``.
    """
    A, B = _columns(A), _columns(B)
    if K is not None:
        A, B = A[:K], B[:K]
    k = A.shape[0]
    A = _ranks(A) / k
    B = _ranks(B) / k
    ua, ub = _u_centered(A), _u_centered(B)
    norm = k * (k - 3)
    xy = float(np.sum(ua * ub)) / norm
    xx = float(np.sum(ua * ua)) / norm
    yy = float(np.sum(ub * ub)) / norm
    return xy / math.sqrt(xx * yy)


def _z_threshold(M: int) -> float:
    return Z_SCALE / math.sqrt(M)


def _dcor_threshold(K: int) -> float:
    return Z_SCALE * math.sqrt(2.0) / K


def _standardized_mean_error(x, target) -> float:
    """``max |mean(x) - target| / sd(x)`` over columns."""
    x = _columns(x)
    target = np.asarray(target, dtype=np.float64).reshape(-1)
    sd = x.std(axis=0, ddof=1)
    return float(np.max(np.abs(x.mean(axis=0) - target) / sd))


def _add_dependence(report: McReport, prefix: str, A, B, M: int) -> None:
    K = min(M, DCOR_SUBSAMPLE)
    report.add(f"{prefix}.pearson", max_abs_pearson(A, B), _z_threshold(M))
    report.add(f"{prefix}.spearman_dispersion", max_abs_spearman_dispersion(A, B), _z_threshold(M))
    report.add(f"{prefix}.dcor", dcor_squared_u(A, B, K), _dcor_threshold(K))


def _triu_entries(W: np.ndarray) -> np.ndarray:
    l = W.shape[-1]
    iu = np.triu_indices(l)
    return W[:, iu[0], iu[1]]


# -- Monte-Carlo suites ------------------------------------------------------

def global_blocks(samples: NormalWishartSamples, block1: Sequence[int], block2: Sequence[int]):
    """``A = (mu1, W11.2)`` and ``B = (mu2 + W22^{-1} W21 mu1, W12, W22)`` per draw."""
    b1, b2 = list(block1), list(block2)
    W, mu = samples.W, samples.mu
    W11 = W[:, b1][:, :, b1]
    W12 = W[:, b1][:, :, b2]
    W22 = W[:, b2][:, :, b2]
    W22_inv_W21 = np.linalg.solve(W22, np.swapaxes(W12, 1, 2))
    W11_2 = W11 - W12 @ W22_inv_W21
    mu1, mu2 = mu[:, b1], mu[:, b2]
    m2 = mu2 + (W22_inv_W21 @ mu1[..., None])[..., 0]
    return {
        "mu1": mu1,
        "W11.2": _triu_entries(W11_2),
        "m2": m2,
        "W12": W12.reshape(W12.shape[0], -1),
        "W22": _triu_entries(W22),
    }


def mc_global_independence_check(pr: NormalWishartPrior, partition, seed: int, M: int,
                                 *, samples: NormalWishartSamples | None = None) -> McReport:
    """Independence of ``{mu1, W11.2}`` from ``{mu2 + W22^{-1} W21 mu1, W12, W22}``.

    Three groupings are tested: the mean parts (``mu1`` vs the regression
    intercepts), the precision parts (``W11.2`` vs ``W12, W22``), and
    everything jointly.
    """
    block1, block2 = (sorted(b) for b in partition)
    if not block1 or not block2:
        raise ValueError("both blocks must be non-empty")
    if samples is None:
        samples = sample_normal_wishart(pr, seed, M)
    M = len(samples)
    parts = global_blocks(samples, block1, block2)
    tag = f"global[{','.join(map(str, block1))}|{','.join(map(str, block2))}]"
    report = McReport(M, name=tag)
    _add_dependence(report, f"{tag}.mu", parts["mu1"], parts["m2"], M)
    _add_dependence(report, f"{tag}.W", parts["W11.2"], np.hstack([parts["W12"], parts["W22"]]), M)
    A = np.hstack([parts["mu1"], parts["W11.2"]])
    B = np.hstack([parts["m2"], parts["W12"], parts["W22"]])
    _add_dependence(report, f"{tag}.joint", A, B, M)
    return report


def local_parameters(samples: NormalWishartSamples, order: Sequence[int], i: int):
    """Per-draw ``(m, b, v)`` of node ``i`` in the complete DAG ``order``.

    The marginal precision of ``i`` and its predecessors is formed as
    ``(Sigma_YY)^{-1}`` from the draw's covariance ``Sigma = W^{-1}``.
    """
    order = list(order)
    pos = order.index(i)
    P = sorted(order[:pos])
    Y = sorted(P + [i])
    Sigma = np.linalg.inv(samples.W)
    WY = np.linalg.inv(Sigma[:, Y][:, :, Y])
    yi = Y.index(i)
    yp = [Y.index(p) for p in P]
    wii = WY[:, yi, yi]
    b = -WY[:, yp, yi] / wii[:, None]
    v = 1.0 / wii
    m = samples.mu[:, i] - np.einsum("mk,mk->m", b, samples.mu[:, P])
    return m, b, v


def mc_local_prior_check(pr: NormalWishartPrior, order: Sequence[int], i: int, seed: int, M: int,
                         *, standardize: bool = True,
                         samples: NormalWishartSamples | None = None) -> McReport:
    """Mutual independence of standardized ``(m*, b*, v)`` for node ``i``.

    ``m* = (m - E[m | b]) sqrt(alpha_mu / v)`` and
    ``b* = U (b - E[b]) / sqrt(v)`` with ``U^T U`` the coefficient precision
    block, so both are standard normal and independent of ``v`` under a
    normal-Wishart prior. With ``standardize=False`` the raw ``(m, b)`` are
    tested against ``v`` instead (a negative control that must fail).
    """
    if samples is None:
        samples = sample_normal_wishart(pr, seed, M)
    M = len(samples)
    lp = local_prior_params(pr, order, i)
    m, b, v = local_parameters(samples, order, i)
    order_tag = "".join(map(str, order))
    tag = f"local[{i}@{order_tag}]" if standardize else f"local_raw[{i}@{order_tag}]"
    report = McReport(M, name=tag)
    log_v = np.log(v)
    if not standardize:
        raw = np.column_stack([m, b]) if b.shape[1] else m[:, None]
        _add_dependence(report, f"{tag}.mb_vs_v", raw, log_v, M)
        return report
    m_mean = lp.m_offset - b @ lp.nu_pred if b.shape[1] else np.full(M, lp.m_offset)
    m_star = (m - m_mean) * np.sqrt(lp.alpha_mu / v)
    ks = KS_SCALE / math.sqrt(M)
    report.add(f"{tag}.ks_m_star", sps.kstest(m_star, "norm").statistic, ks)
    groups = {"m*": m_star[:, None], "v": log_v[:, None]}
    if b.shape[1]:
        U = np.linalg.cholesky(lp.b_precision).T
        b_star = ((b - lp.b_mean) @ U.T) / np.sqrt(v)[:, None]
        groups["b*"] = b_star
        report.add(f"{tag}.ks_b_star", max(sps.kstest(b_star[:, k], "norm").statistic
                                            for k in range(b_star.shape[1])), ks)
    inv_v = sps.gamma(a=lp.dof / 2.0, scale=2.0 / lp.scale_precision)
    report.add(f"{tag}.ks_inv_v", sps.kstest(1.0 / v, inv_v.cdf).statistic, ks)
    names = list(groups)
    for a in range(len(names)):
        for c in range(a + 1, len(names)):
            _add_dependence(report, f"{tag}.{names[a]}_vs_{names[c]}", groups[names[a]], groups[names[c]], M)
    return report


def mc_prior_moment_check(pr: NormalWishartPrior, seed: int, M: int,
                          *, samples: NormalWishartSamples | None = None) -> McReport:
    """Moments of the prior and of one observation drawn through it.

    Checks ``E[mu] = nu``, ``E[W] = alpha_w T^{-1}``, Bartlett vs
    outer-product agreement of the first two moments of ``W`` (integer
    ``alpha_w`` rounded up), ``E[x] = nu`` and
    ``Cov(x) = (alpha_mu + 1) / (alpha_mu (alpha_w - n - 1)) T``.
    """
    if samples is None:
        samples = sample_normal_wishart(pr, seed, M)
    M = len(samples)
    thr = _z_threshold(M)
    report = McReport(M, name="prior_moments")
    report.add("prior.E[mu]", _standardized_mean_error(samples.mu, pr.nu), thr)
    EW = pr.alpha_w * linalg.inverse(pr.T)
    report.add("prior.E[W]", _standardized_mean_error(_triu_entries(samples.W), _triu_entries(EW[None])[0]), thr)

    a_int = int(math.ceil(pr.alpha_w))
    rng = np.random.default_rng([seed, 1])
    W_b = _triu_entries(wishart_bartlett(a_int, pr.T, M, rng))
    W_o = _triu_entries(wishart_outer(a_int, pr.T, M, rng))
    for label, f in (("mean", lambda w: w), ("second_moment", lambda w: w * w)):
        xb, xo = f(W_b), f(W_o)
        se = np.sqrt(xb.var(axis=0, ddof=1) + xo.var(axis=0, ddof=1))
        report.add(f"wishart.dual_sampler.{label}", float(np.max(np.abs(xb.mean(0) - xo.mean(0)) / se)), thr)

    x = sample_observations(samples, seed + 1)
    report.add("predictive.E[x]", _standardized_mean_error(x, pr.nu), thr)
    if pr.alpha_w > pr.n + 1:
        d = x - pr.nu
        iu = np.triu_indices(pr.n)
        prods = d[:, iu[0]] * d[:, iu[1]]
        report.add("predictive.Cov[x]", _standardized_mean_error(prods, pr.implied_cov()[iu]), thr)
    return report


def mc_subset_prior_check(pr: NormalWishartPrior, Y: Sequence[int], seed: int, M: int,
                          *, samples: NormalWishartSamples | None = None) -> McReport:
    """Moments of ``(mu_Y, ((W^{-1})_YY)^{-1})`` against the subset prior."""
    if samples is None:
        samples = sample_normal_wishart(pr, seed, M)
    M = len(samples)
    Y = sorted(Y)
    sub = marginal_subset_prior(pr, Y)
    l = len(Y)
    thr = _z_threshold(M)
    tag = f"subset[{','.join(map(str, Y))}]"
    report = McReport(M, name=tag)
    Sigma = np.linalg.inv(samples.W)
    WY = np.linalg.inv(Sigma[:, Y][:, :, Y])
    muY = samples.mu[:, Y]
    report.add(f"{tag}.E[W_Y]", _standardized_mean_error(
        _triu_entries(WY), _triu_entries((sub.alpha_w * linalg.inverse(sub.T))[None])[0]), thr)
    report.add(f"{tag}.E[mu_Y]", _standardized_mean_error(muY, sub.nu), thr)
    if sub.alpha_w > l + 1:
        iu = np.triu_indices(l)
        d = muY - sub.nu
        target = sub.T / (sub.alpha_mu * (sub.alpha_w - l - 1))
        report.add(f"{tag}.Cov[mu_Y]", _standardized_mean_error(d[:, iu[0]] * d[:, iu[1]], target[iu]), thr)
    if l == 1:
        dist = sps.gamma(a=sub.alpha_w / 2.0, scale=2.0 / float(sub.T[0, 0]))
        report.add(f"{tag}.ks_W_Y", sps.kstest(WY[:, 0, 0], dist.cdf).statistic, KS_SCALE / math.sqrt(M))
    return report


# -- deterministic checks ----------------------------------------------------

def jacobian_report(seed: int, points: int = 20) -> McReport:
    """Closed-form vs finite-difference Jacobian at random points (relative error)."""
    rng = np.random.default_rng(seed)
    report = McReport(points, name="jacobian")
    worst = 0.0
    for _ in range(points):
        theta = np.array([rng.uniform(0.3, 3.0), rng.uniform(0.3, 3.0),
                          rng.normal(), rng.normal(), rng.normal()])
        exact = jacobian_2d(theta[0], theta[1])
        worst = max(worst, abs(fd_jacobian_det_2d(theta) - exact) / exact)
    report.add("jacobian.fd_rel_error", worst, 1e-5)
    return report


def random_complete_params(order: Sequence[int], rng: np.random.Generator) -> GaussianDagParams:
    order = list(order)
    n = len(order)
    parents: list[tuple[int, ...]] = [()] * n
    coefs: list[np.ndarray] = [np.zeros(0)] * n
    for k, i in enumerate(order):
        parents[i] = tuple(sorted(order[:k]))
        coefs[i] = rng.normal(size=k)
    return GaussianDagParams(tuple(parents), rng.normal(size=n), tuple(coefs), rng.uniform(0.2, 2.0, size=n))


def roundtrip_report(seed: int, max_n: int = 5, points: int = 100) -> McReport:
    """Regression <-> joint round trip and pointwise density factorization."""
    rng = np.random.default_rng(seed)
    rt = 0.0
    dens = 0.0
    for n in range(1, max_n + 1):
        order = list(rng.permutation(n))
        p = random_complete_params(order, rng)
        j = regression_to_joint(p, order)
        back = joint_to_regression(j, order)
        rt = max(rt, float(np.max(np.abs(back.intercepts - p.intercepts))),
                 float(np.max(np.abs(back.variances - p.variances) / p.variances)))
        for c0, c1 in zip(back.coefs, p.coefs):
            if c1.size:
                rt = max(rt, float(np.max(np.abs(c0 - c1))))
        j2 = regression_to_joint(back, order)
        rt = max(rt, float(np.max(np.abs(j2.W - j.W) / np.max(np.abs(j.W)))))
        for _ in range(points):
            x = j.mu + rng.normal(size=n) * 2.0
            a, b = joint_log_density(j, x), local_log_density_product(p, x)
            dens = max(dens, abs(a - b) / max(1.0, abs(a)))
    report = McReport(points, name="roundtrip")
    report.add("roundtrip.max_error", rt, 1e-10)
    report.add("factorization.max_rel_error", dens, 1e-9)
    return report


# -- full suite --------------------------------------------------------------

NEGATIVE_CONTROL_MIN_SAMPLES = 100_000


def verification_priors() -> tuple[NormalWishartPrior, NormalWishartPrior]:
    """The prior under test and the heavier-tailed prior used by negative controls.

    The first has ``alpha_w = n + 6`` so every moment check has finite
    fourth moments; the second has ``alpha_w = n``, maximizing the spread of
    the regression coefficients through which decoupling shows up.
    """
    from gaussdag.prior import from_prior_model

    cov = np.array([[1.0, 0.5, 0.2], [0.5, 1.0, 0.3], [0.2, 0.3, 1.0]])
    main = from_prior_model(np.array([0.5, -1.0, 2.0]), cov, 2.0, 9.0)
    control = NormalWishartPrior(np.zeros(3), 1.0, 3.0, linalg.inverse(cov))
    return main, control


def corollary_report(pr: NormalWishartPrior) -> McReport:
    """Degrees of freedom minus block size agree across nested marginalization routes."""
    report = McReport(0, name="corollary")
    n = pr.n
    worst = 0.0
    for b in range(n):
        for a in range(n):
            for c in range(n):
                if len({a, b, c}) < 3:
                    continue
                via_ab = marginal_subset_prior(marginal_subset_prior(pr, sorted({a, b})), [sorted({a, b}).index(b)])
                via_bc = marginal_subset_prior(marginal_subset_prior(pr, sorted({b, c})), [sorted({b, c}).index(b)])
                worst = max(worst, abs(via_ab.alpha_w - via_bc.alpha_w))
    report.add("corollary.dof_routes", worst, 0.0)
    return report


def predictive_score_report() -> McReport:
    """The t predictive density at one observation equals the closed-form
    score of the single-row dataset (hand-derived instance and a random one)."""
    from gaussdag.data import Dataset
    from gaussdag.score import ScoreContext, log_ml_subset, predictive_log_density

    report = McReport(2, name="predictive")
    pr = NormalWishartPrior(np.zeros(2), 1.0, 3.0, np.eye(2))
    x = np.array([1.0, 0.0])
    ctx = ScoreContext.from_dataset(pr, Dataset(("a", "b"), x[None]))
    hand = math.log(2.0 / (9.0 * math.pi))
    err = max(abs(log_ml_subset(ctx, [0, 1]) - hand), abs(predictive_log_density(pr, x) - hand))
    report.add("predictive.hand_instance", err / abs(hand), 1e-9)
    main, _ = verification_priors()
    x = np.array([0.3, -0.7, 1.9])
    ctx = ScoreContext.from_dataset(main, Dataset(("a", "b", "c"), x[None]))
    a, b = log_ml_subset(ctx, [0, 1, 2]), predictive_log_density(main, x)
    report.add("predictive.single_row", abs(a - b) / abs(a), 1e-9)
    return report


def run_verification_suite(seed: int = 0, M: int = 100_000, workers: int = 1) -> list[tuple[McReport, bool]]:
    """Every reference check as ``(report, expected_to_pass)`` pairs.

    Negative controls are sampled with at least
    ``NEGATIVE_CONTROL_MIN_SAMPLES`` draws so they have the power to fail.
    """
    main, control = verification_priors()
    out: list[tuple[McReport, bool]] = []
    samples = sample_normal_wishart(main, seed, M, workers)
    out.append((mc_prior_moment_check(main, seed, M, samples=samples), True))
    for Y in ([0, 2], [1]):
        out.append((mc_subset_prior_check(main, Y, seed, M, samples=samples), True))
    for part in (([0, 1], [2]), ([0], [1, 2]), ([0, 2], [1])):
        out.append((mc_global_independence_check(main, part, seed, M, samples=samples), True))
    for order, i in (([0, 1, 2], 2), ([2, 0, 1], 1), ([1, 2, 0], 1)):
        out.append((mc_local_prior_check(main, order, i, seed, M, samples=samples), True))
    out.append((jacobian_report(seed), True))
    out.append((roundtrip_report(seed), True))
    out.append((corollary_report(main), True))
    out.append((predictive_score_report(), True))

    M_neg = max(M, NEGATIVE_CONTROL_MIN_SAMPLES)
    decoupled = sample_decoupled(control, seed + 1, M_neg, workers)
    neg = mc_global_independence_check(control, ([0, 1], [2]), seed + 1, M_neg, samples=decoupled)
    neg.name = "negative:" + neg.name
    out.append((neg, False))
    coupled = sample_normal_wishart(main, seed + 2, M_neg, workers)
    neg = mc_local_prior_check(main, [0, 1, 2], 2, seed + 2, M_neg, standardize=False, samples=coupled)
    neg.name = "negative:" + neg.name
    out.append((neg, False))
    return out
