"""Exact marginal likelihood of Gaussian DAG models.

For a variable subset ``Y`` of size ``l`` the closed form uses principal
submatrices of the *full* prior precision ``T`` and posterior precision
``R``, with ``alpha_w - n + l`` degrees of freedom. A DAG's score is the sum
over nodes of ``log p(D^{pa u {i}}) - log p(D^{pa})``.
"""
from __future__ import annotations

import math
import threading
from typing import Iterable, Sequence

import numpy as np

from gaussdag import linalg
from gaussdag.dag import Dag
from gaussdag.data import Dataset, SufficientStats, sufficient_stats
from gaussdag.errors import ChildInParents, DimensionMismatch, EmptyIndexSet
from gaussdag.prior import (
    NormalWishartPrior,
    PosteriorParams,
    log_wishart_norm_const,
    marginal_subset_prior,
    posterior_update,
)

_LOG_2PI = math.log(2.0 * math.pi)


class ScoreContext:
    """Prior, data statistics, and the full posterior precision ``R``.

    Subset log marginal likelihoods are memoized by sorted index tuple; the
    memo is a plain dict, and concurrent writers only ever store identical
    values for the same key.
    """

    def __init__(self, prior: NormalWishartPrior, stats: SufficientStats):
        if prior.n != stats.n:
            raise DimensionMismatch(f"prior dimension {prior.n} != data dimension {stats.n}")
        self.prior = prior
        self.stats = stats
        self.posterior: PosteriorParams = posterior_update(prior, stats)
        self.R = self.posterior.R
        self._T = np.ascontiguousarray(prior.T)
        self._R = np.ascontiguousarray(self.R)
        self._subset_memo: dict[tuple[int, ...], float] = {}

    @classmethod
    def from_dataset(cls, prior: NormalWishartPrior, d: Dataset) -> "ScoreContext":
        return cls(prior, sufficient_stats(d))

    @property
    def n(self) -> int:
        return self.prior.n

    def subset_score(self, Y: tuple[int, ...]) -> float:
        """Memoized :func:`log_ml_subset` for a sorted tuple; ``()`` scores 0."""
        hit = self._subset_memo.get(Y)
        if hit is not None:
            return hit
        value = _log_ml_sorted(self, Y) if Y else 0.0
        self._subset_memo[Y] = value
        return value


def _log_ml_sorted(ctx: ScoreContext, Y: tuple[int, ...]) -> float:
    pr = ctx.prior
    N = ctx.stats.N
    l = len(Y)
    if N == 0:
        return 0.0
    a_y = pr.alpha_w - pr.n + l
    idx = np.asarray(Y, dtype=np.intp)
    return (
        -0.5 * l * N * _LOG_2PI
        + 0.5 * l * math.log(pr.alpha_mu / (pr.alpha_mu + N))
        + log_wishart_norm_const(l, a_y)
        - log_wishart_norm_const(l, a_y + N)
        + 0.5 * a_y * linalg.log_det_principal(ctx._T, idx)
        - 0.5 * (a_y + N) * linalg.log_det_principal(ctx._R, idx)
    )


def log_ml_subset(ctx: ScoreContext, Y: Iterable[int]) -> float:
    """``log p(D^Y)``: the log marginal likelihood of the data restricted to ``Y``."""
    Y = tuple(sorted(Y))
    if not Y:
        raise EmptyIndexSet("subset must be non-empty")
    linalg.check_index_set(Y, ctx.n)
    return ctx.subset_score(Y)


class FamilyScoreCache:
    """Memo of family scores keyed by ``(child, sorted parents)``, bound to one context."""

    def __init__(self, ctx: ScoreContext):
        self.ctx = ctx
        self._lock = threading.Lock()
        self._store: dict[tuple[int, tuple[int, ...]], float] = {}
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._store)

    def get_or_compute(self, child: int, parents: tuple[int, ...]) -> float:
        key = (child, parents)
        value = self._store.get(key)
        if value is not None:
            self.hits += 1
            return value
        self.misses += 1
        fam = tuple(sorted(parents + (child,)))
        value = self.ctx.subset_score(fam) - self.ctx.subset_score(parents)
        with self._lock:
            self._store.setdefault(key, value)
        return value


def family_score(ctx: ScoreContext, cache: FamilyScoreCache | None, child: int, parents: Iterable[int]) -> float:
    parents = tuple(sorted(parents))
    if child in parents:
        raise ChildInParents(f"node {child} listed among its own parents")
    if parents:
        linalg.check_index_set(parents, ctx.n)
    if not 0 <= child < ctx.n:
        raise DimensionMismatch(f"child {child} outside dimension {ctx.n}")
    if cache is None:
        cache = FamilyScoreCache(ctx)
    elif cache.ctx is not ctx:
        raise ValueError("cache is bound to a different ScoreContext")
    return cache.get_or_compute(child, parents)


def family_scores(ctx: ScoreContext, cache: FamilyScoreCache | None, g: Dag) -> list[float]:
    if g.n != ctx.n:
        raise DimensionMismatch(f"graph has {g.n} nodes, data has {ctx.n}")
    if cache is None:
        cache = FamilyScoreCache(ctx)
    return [family_score(ctx, cache, i, g.parents[i]) for i in range(g.n)]


def log_marginal_likelihood(ctx: ScoreContext, cache: FamilyScoreCache | None, g: Dag) -> float:
    return math.fsum(family_scores(ctx, cache, g))


# -- predictive density and the sequential oracle ------------------------------

def t_log_density(x, loc, precision, dof: float) -> float:
    """Multivariate t log density with a precision-matrix parameterization."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    loc = np.asarray(loc, dtype=np.float64).reshape(-1)
    precision = np.asarray(precision, dtype=np.float64)
    p = x.shape[0]
    d = x - loc
    quad = float(d @ precision @ d)
    _, logdet = np.linalg.slogdet(precision)
    return (
        math.lgamma(0.5 * (dof + p))
        - math.lgamma(0.5 * dof)
        - 0.5 * p * math.log(dof * math.pi)
        + 0.5 * logdet
        - 0.5 * (dof + p) * math.log1p(quad / dof)
    )


def predictive_log_density(state: NormalWishartPrior | PosteriorParams, x) -> float:
    """Log density of one new observation given a normal-Wishart state.

    A multivariate t with ``alpha_w - n + 1`` degrees of freedom, location
    ``nu`` and precision ``alpha_mu (alpha_w - n + 1) / (alpha_mu + 1) T^{-1}``.
    Uses ``numpy.linalg`` throughout so it stays independent of the
    closed-form score path.
    """
    if isinstance(state, PosteriorParams):
        nu, am, aw, T = state.nu_star, state.alpha_mu_star, state.alpha_w_star, state.R
    else:
        nu, am, aw, T = state.nu, state.alpha_mu, state.alpha_w, state.T
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    n = nu.shape[0]
    if x.shape != (n,):
        raise DimensionMismatch(f"x has {x.size} entries, expected {n}")
    dof = aw - n + 1
    precision = (am * dof / (am + 1)) * np.linalg.inv(T)
    return t_log_density(x, nu, precision, dof)


def oracle_log_ml_sequential(prior: NormalWishartPrior, d: Dataset) -> float:
    """``sum_l log p(x_l | x_1..x_{l-1})``, refitting the posterior from raw rows.

    Slow by design; shares no code with the closed-form score beyond the
    prior object.
    """
    rows = np.asarray(d.rows, dtype=np.float64)
    n = prior.n
    if rows.shape[1] != n:
        raise DimensionMismatch("dataset and prior dimensions differ")
    total = 0.0
    for l in range(rows.shape[0]):
        past = rows[:l]
        am = prior.alpha_mu + l
        aw = prior.alpha_w + l
        if l:
            xbar = past.mean(axis=0)
            S = sum(np.outer(r - xbar, r - xbar) for r in past)
            nu = (prior.alpha_mu * prior.nu + l * xbar) / am
            dev = prior.nu - xbar
            R = prior.T + S + (prior.alpha_mu * l / am) * np.outer(dev, dev)
        else:
            nu, R = prior.nu, prior.T
        dof = aw - n + 1
        precision = (am * dof / (am + 1)) * np.linalg.inv(R)
        total += t_log_density(rows[l], nu, precision, dof)
    return total


def score_subset_restricted(prior: NormalWishartPrior, d: Dataset, Y: Sequence[int]) -> float:
    """Score of ``Y`` from a context built on the column-restricted data and subset prior."""
    Y = sorted(Y)
    sub = ScoreContext.from_dataset(marginal_subset_prior(prior, Y), d.columns(Y))
    return log_ml_subset(sub, range(len(Y)))
