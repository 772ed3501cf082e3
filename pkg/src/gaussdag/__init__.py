"""Exact Bayesian scoring and structure search for Gaussian DAG models."""
from gaussdag._kernels import BACKEND
from gaussdag.dag import Dag, complete_dag, enumerate_dags, independence_equivalent
from gaussdag.data import Dataset, GaussianDagParams, SufficientStats, load_csv, simulate, sufficient_stats
from gaussdag.prior import NormalWishartPrior, default_prior, from_prior_model, posterior_update
from gaussdag.score import FamilyScoreCache, ScoreContext, log_marginal_likelihood, log_ml_subset
from gaussdag.search import SearchConfig, exhaustive_best, greedy_hill_climb

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Dag", "Dataset", "FamilyScoreCache", "GaussianDagParams", "NormalWishartPrior",
    "ScoreContext", "SearchConfig", "SufficientStats", "complete_dag", "default_prior",
    "enumerate_dags", "exhaustive_best", "from_prior_model", "greedy_hill_climb",
    "independence_equivalent", "load_csv", "log_marginal_likelihood", "log_ml_subset",
    "posterior_update", "simulate", "sufficient_stats",
]
