"""Normal-Wishart prior: elicitation, subset marginalization, conjugate update.

Parameterization: ``W ~ Wishart(alpha_w, T)`` with density proportional to
``|W|^((alpha_w - n - 1)/2) exp(-tr(T W)/2)``, so ``E[W] = alpha_w T^{-1}``;
``mu | W ~ N(nu, precision alpha_mu W)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from gaussdag import linalg
from gaussdag.data import SufficientStats
from gaussdag.errors import (
    DegreesOfFreedomTooSmall,
    DimensionMismatch,
    EmptyIndexSet,
    InvalidDegreesOfFreedom,
    NonPositiveVariance,
    ParseError,
    ShapeMismatch,
)

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class NormalWishartPrior:
    nu: np.ndarray
    alpha_mu: float
    alpha_w: float
    T: np.ndarray

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=np.float64).reshape(-1)
        T = np.asarray(self.T, dtype=np.float64)
        n = nu.shape[0]
        if T.shape != (n, n):
            raise DimensionMismatch(f"T has shape {T.shape}, expected {(n, n)}")
        if not self.alpha_mu > 0:
            raise ValueError("alpha_mu must be positive")
        if not self.alpha_w > n - 1:
            raise InvalidDegreesOfFreedom(f"alpha_w={self.alpha_w} must exceed n-1={n - 1}")
        linalg.cholesky(T)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "alpha_mu", float(self.alpha_mu))
        object.__setattr__(self, "alpha_w", float(self.alpha_w))

    @property
    def n(self) -> int:
        return self.nu.shape[0]

    def implied_mean(self) -> np.ndarray:
        return self.nu.copy()

    def implied_cov(self) -> np.ndarray:
        """Covariance of one observation under the prior; needs ``alpha_w > n + 1``."""
        if not self.alpha_w > self.n + 1:
            raise DegreesOfFreedomTooSmall("prior covariance requires alpha_w > n + 1")
        return self.T * (self.alpha_mu + 1) / (self.alpha_mu * (self.alpha_w - self.n - 1))


@dataclass(frozen=True)
class PosteriorParams:
    nu_star: np.ndarray
    alpha_mu_star: float
    alpha_w_star: float
    R: np.ndarray

    @property
    def n(self) -> int:
        return self.nu_star.shape[0]

    def as_prior(self) -> NormalWishartPrior:
        return NormalWishartPrior(self.nu_star, self.alpha_mu_star, self.alpha_w_star, self.R)


def from_prior_model(mean, cov, alpha_mu: float, alpha_w: float) -> NormalWishartPrior:
    """Prior whose predictive mean and covariance match a prior model.

    Inverts ``Cov(x) = (alpha_mu + 1) / (alpha_mu (alpha_w - n - 1)) T``.
    """
    mean = np.asarray(mean, dtype=np.float64).reshape(-1)
    cov = np.asarray(cov, dtype=np.float64)
    n = mean.shape[0]
    if cov.shape != (n, n):
        raise DimensionMismatch(f"cov has shape {cov.shape}, expected {(n, n)}")
    if not alpha_w > n + 1:
        raise DegreesOfFreedomTooSmall(f"alpha_w={alpha_w} must exceed n+1={n + 1}")
    if not alpha_mu > 0:
        raise ValueError("alpha_mu must be positive")
    linalg.cholesky(cov)
    T = cov * (alpha_mu * (alpha_w - n - 1) / (alpha_mu + 1))
    return NormalWishartPrior(mean, alpha_mu, alpha_w, T)


def default_prior(n: int) -> NormalWishartPrior:
    """Zero mean, identity prior covariance, ``alpha_mu = 1``, ``alpha_w = n + 2``."""
    return from_prior_model(np.zeros(n), np.eye(n), 1.0, n + 2.0)


def log_wishart_norm_const(l: int, alpha: float) -> float:
    """``log c(l, alpha)`` for the Wishart normalizer."""
    if l < 0:
        raise ValueError("dimension must be non-negative")
    if not alpha > l - 1:
        raise InvalidDegreesOfFreedom(f"alpha={alpha} must exceed l-1={l - 1}")
    acc = 0.5 * alpha * l * math.log(2.0) + 0.25 * l * (l - 1) * math.log(math.pi)
    for i in range(1, l + 1):
        acc += math.lgamma(0.5 * (alpha + 1 - i))
    return -acc


def wishart_log_density(W, alpha: float, T) -> float:
    W = np.asarray(W, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    l = W.shape[0]
    return (
        log_wishart_norm_const(l, alpha)
        + 0.5 * alpha * linalg.log_det(T)
        + 0.5 * (alpha - l - 1) * linalg.log_det(W)
        - 0.5 * float(np.sum(T * W))
    )


def posterior_update(pr: NormalWishartPrior, s: SufficientStats) -> PosteriorParams:
    if s.n != pr.n:
        raise DimensionMismatch(f"stats dimension {s.n} != prior dimension {pr.n}")
    N = s.N
    am = pr.alpha_mu
    if N == 0:
        return PosteriorParams(pr.nu.copy(), am, pr.alpha_w, pr.T.copy())
    nu_star = (am * pr.nu + N * s.mean) / (am + N)
    d = pr.nu - s.mean
    R = pr.T + s.scatter + (am * N / (am + N)) * np.outer(d, d)
    R = linalg.symmetrize(0.5 * (R + R.T))
    return PosteriorParams(nu_star, am + N, pr.alpha_w + N, R)


def marginal_subset_prior(pr: NormalWishartPrior, Y: Sequence[int]) -> NormalWishartPrior:
    """Normal-Wishart prior on ``(mu_Y, ((W^{-1})_YY)^{-1})``.

    Keeps ``alpha_mu``, restricts ``nu`` and ``T`` to ``Y``, and lowers the
    degrees of freedom to ``alpha_w - n + |Y|``.
    """
    Y = list(Y)
    if not Y:
        raise EmptyIndexSet("subset must be non-empty")
    ix = linalg.check_index_set(sorted(Y), pr.n)
    return NormalWishartPrior(
        pr.nu[ix].copy(),
        pr.alpha_mu,
        pr.alpha_w - pr.n + len(ix),
        linalg.principal_submatrix(pr.T, ix),
    )


def _normal_log_density(x, mean, precision) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
    precision = np.atleast_2d(np.asarray(precision, dtype=np.float64))
    d = x - mean
    k = x.shape[0]
    return 0.5 * (linalg.log_det(precision) - k * _LOG_2PI - float(d @ precision @ d))


@dataclass(frozen=True)
class LocalPriorParams:
    """Prior of one node's regression parameters in a complete DAG.

    ``1/v ~ Wishart_1(dof, scale_precision)``; ``b | v ~ N(b_mean, b_precision / v)``;
    ``m | b, v ~ N(m_offset - b . nu_pred, alpha_mu / v)``.
    """

    predecessors: tuple[int, ...]
    dof: float
    scale_precision: float
    b_mean: np.ndarray
    b_precision: np.ndarray
    nu_pred: np.ndarray
    m_offset: float
    alpha_mu: float

    def m_mean(self, b) -> float:
        b = np.asarray(b, dtype=np.float64).reshape(-1)
        return self.m_offset - float(b @ self.nu_pred) if b.size else self.m_offset


def local_prior_params(pr: NormalWishartPrior, order: Sequence[int], i: int) -> LocalPriorParams:
    """Parameters of the local prior of node ``i`` under the complete DAG ``order``.

    The block over ``i`` and its predecessors carries the subset prior with
    ``alpha_w - n + l`` degrees of freedom; peeling ``i`` off that block gives
    the conditional precision ``1/v`` as a one-dimensional Wishart with the
    same degrees of freedom.
    """
    order = list(order)
    pos = order.index(i)
    pred = tuple(sorted(order[:pos]))
    l = len(pred) + 1
    dof = pr.alpha_w - pr.n + l
    t_ii = float(pr.T[i, i])
    if pred:
        P = list(pred)
        T_pp = pr.T[np.ix_(P, P)]
        T_pi = pr.T[P, i]
        lower = linalg.cholesky(T_pp)
        b_mean = linalg.cho_solve(lower, T_pi)
        tau = t_ii - float(T_pi @ b_mean)
        nu_pred = pr.nu[P].copy()
    else:
        T_pp = np.zeros((0, 0))
        b_mean = np.zeros(0)
        tau = t_ii
        nu_pred = np.zeros(0)
    return LocalPriorParams(pred, dof, tau, b_mean, T_pp.copy(), nu_pred, float(pr.nu[i]), pr.alpha_mu)


def local_prior_log_density(pr: NormalWishartPrior, order: Sequence[int], i: int, m: float, b, v: float) -> float:
    """Log density of ``(m, b, v)`` for node ``i`` (a density in ``v``, Jacobian included)."""
    if not v > 0:
        raise NonPositiveVariance("v must be positive")
    lp = local_prior_params(pr, order, i)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if b.shape != (len(lp.predecessors),):
        raise ShapeMismatch(f"b has {b.size} entries, node has {len(lp.predecessors)} predecessors")
    w = 1.0 / v
    # 1-d Wishart of the conditional precision, then d(1/v)/dv = -1/v^2
    out = (
        log_wishart_norm_const(1, lp.dof)
        + 0.5 * lp.dof * math.log(lp.scale_precision)
        + 0.5 * (lp.dof - 2) * math.log(w)
        - 0.5 * lp.scale_precision * w
        - 2.0 * math.log(v)
    )
    if b.size:
        out += _normal_log_density(b, lp.b_mean, lp.b_precision / v)
    out += _normal_log_density(m, lp.m_mean(b), np.array([[lp.alpha_mu / v]]))
    return out


# -- prior config file -------------------------------------------------------

def parse_prior_config(text: str, source: str = "<string>") -> NormalWishartPrior:
    """Parse ``alpha_mu=``, ``alpha_w=``, ``mean=`` lines then ``cov`` and n rows."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [(k + 1, ln) for k, ln in enumerate(lines) if ln]
    values: dict[str, str] = {}
    cov_rows: list[list[float]] | None = None
    k = 0
    while k < len(lines):
        lineno, line = lines[k]
        if line == "cov":
            if "mean" not in values:
                raise ParseError(f"{source}:{lineno}: 'mean=' must precede 'cov'")
            n = len(values["mean"].split(","))
            block = lines[k + 1:k + 1 + n]
            if len(block) != n:
                raise ParseError(f"{source}:{lineno}: expected {n} covariance rows")
            try:
                cov_rows = [[float(c) for c in row.split(",")] for _, row in block]
            except ValueError:
                raise ParseError(f"{source}:{lineno}: unparseable covariance row") from None
            if any(len(r) != n for r in cov_rows):
                raise ParseError(f"{source}:{lineno}: covariance rows must have {n} entries")
            k += 1 + n
            continue
        key, sep, val = line.partition("=")
        key = key.strip()
        if not sep or key not in ("alpha_mu", "alpha_w", "mean"):
            raise ParseError(f"{source}:{lineno}: unexpected line {line!r}")
        values[key] = val.strip()
        k += 1
    missing = [key for key in ("alpha_mu", "alpha_w", "mean") if key not in values]
    if missing or cov_rows is None:
        raise ParseError(f"{source}: missing entries {missing + ([] if cov_rows else ['cov'])}")
    try:
        alpha_mu = float(values["alpha_mu"])
        alpha_w = float(values["alpha_w"])
        mean = [float(c) for c in values["mean"].split(",")]
    except ValueError:
        raise ParseError(f"{source}: unparseable number") from None
    return from_prior_model(mean, np.array(cov_rows), alpha_mu, alpha_w)


def read_prior_config(path: str | Path) -> NormalWishartPrior:
    path = Path(path)
    return parse_prior_config(path.read_text(), str(path))


def format_prior_config(mean, cov, alpha_mu: float, alpha_w: float) -> str:
    mean = np.asarray(mean, dtype=np.float64)
    cov = np.asarray(cov, dtype=np.float64)
    lines = [
        f"alpha_mu={float(alpha_mu)!r}",
        f"alpha_w={float(alpha_w)!r}",
        "mean=" + ",".join(repr(float(x)) for x in mean),
        "cov",
    ]
    lines += [",".join(repr(float(x)) for x in row) for row in cov]
    return "\n".join(lines) + "\n"
