"""Complete-data ingestion, sufficient statistics, and Gaussian DAG simulation."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from gaussdag.dag import Dag, topological_order
from gaussdag.errors import (
    DimensionMismatch,
    IndexOutOfRange,
    MissingValue,
    NonPositiveVariance,
    ParseError,
    RaggedRow,
    ShapeMismatch,
)


@dataclass(frozen=True)
class Dataset:
    names: tuple[str, ...]
    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2:
            rows = rows.reshape(-1, len(self.names))
        if rows.shape[1] != len(self.names):
            raise ShapeMismatch(f"{rows.shape[1]} columns for {len(self.names)} names")
        rows.setflags(write=False)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def N(self) -> int:
        return self.rows.shape[0]

    def columns(self, idx: Sequence[int]) -> "Dataset":
        idx = list(idx)
        return Dataset(tuple(self.names[i] for i in idx), self.rows[:, idx])


@dataclass(frozen=True)
class SufficientStats:
    N: int
    mean: np.ndarray
    scatter: np.ndarray

    @property
    def n(self) -> int:
        return self.mean.shape[0]


def load_csv(path: str | Path) -> Dataset:
    """Read a comma-separated file with a header row and numeric cells.

    No quoting, ``.`` decimal point. Every cell must be a finite real.
    """
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise ParseError(f"{path}: missing header row")
    names = tuple(s.strip() for s in lines[0].split(","))
    if any(not s for s in names):
        raise ParseError(f"{path}:1: empty column name")
    if len(set(names)) != len(names):
        raise ParseError(f"{path}:1: duplicate column name")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(names):
            raise RaggedRow(f"{path}:{lineno}: expected {len(names)} cells, got {len(cells)}")
        row = []
        for col, cell in enumerate(cells):
            cell = cell.strip()
            if not cell:
                raise MissingValue(f"{path}:{lineno}: empty cell in column {names[col]!r}")
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(f"{path}:{lineno}: column {names[col]!r}: cannot parse {cell!r}") from None
            if not math.isfinite(value):
                raise ParseError(f"{path}:{lineno}: column {names[col]!r}: non-finite value {cell!r}")
            row.append(value)
        rows.append(row)
    return Dataset(names, np.array(rows, dtype=np.float64).reshape(len(rows), len(names)))


def format_csv(d: Dataset) -> str:
    out = [",".join(d.names)]
    out += [",".join(repr(float(v)) for v in row) for row in d.rows]
    return "\n".join(out) + "\n"


def write_csv(d: Dataset, path: str | Path) -> None:
    Path(path).write_text(format_csv(d))


def sufficient_stats(d: Dataset) -> SufficientStats:
    """Sample mean and centered scatter, computed in two passes.

    An empty dataset yields a zero mean and zero scatter.
    """
    x = d.rows
    N, n = x.shape
    if N == 0:
        return SufficientStats(0, np.zeros(n), np.zeros((n, n)))
    mean = x.sum(axis=0) / N
    centered = x - mean
    scatter = centered.T @ centered
    scatter = 0.5 * (scatter + scatter.T)
    return SufficientStats(N, mean, scatter)


def stats_subset(s: SufficientStats, Y: Sequence[int]) -> SufficientStats:
    idx = list(Y)
    for i in idx:
        if i < 0 or i >= s.n:
            raise IndexOutOfRange(f"index {i} outside [0, {s.n})")
    return SufficientStats(s.N, s.mean[idx].copy(), s.scatter[np.ix_(idx, idx)].copy())


def merge_stats(a: SufficientStats, b: SufficientStats) -> SufficientStats:
    """Pooled statistics of two disjoint samples."""
    if a.n != b.n:
        raise DimensionMismatch("stats over different dimensions")
    if a.N == 0:
        return b
    if b.N == 0:
        return a
    N = a.N + b.N
    mean = (a.N * a.mean + b.N * b.mean) / N
    delta = a.mean - b.mean
    scatter = a.scatter + b.scatter + (a.N * b.N / N) * np.outer(delta, delta)
    return SufficientStats(N, mean, scatter)


# -- Gaussian DAG parameters -------------------------------------------------

@dataclass(frozen=True)
class GaussianDagParams:
    """Per-node regression ``x_i = m_i + sum_j b_ji x_j + e``, ``e ~ N(0, v_i)``.

    ``coefs[i]`` is aligned with ``parents[i]`` (sorted ascending).
    """

    parents: tuple[tuple[int, ...], ...]
    intercepts: np.ndarray
    coefs: tuple[np.ndarray, ...]
    variances: np.ndarray

    def __post_init__(self):
        n = len(self.parents)
        parents = tuple(tuple(int(p) for p in pa) for pa in self.parents)
        coefs = tuple(np.asarray(c, dtype=np.float64).reshape(-1) for c in self.coefs)
        intercepts = np.asarray(self.intercepts, dtype=np.float64).reshape(-1)
        variances = np.asarray(self.variances, dtype=np.float64).reshape(-1)
        if len(coefs) != n or intercepts.shape != (n,) or variances.shape != (n,):
            raise ShapeMismatch("parameter arrays do not match the node count")
        for i, (pa, c) in enumerate(zip(parents, coefs)):
            if list(pa) != sorted(pa):
                raise ShapeMismatch(f"parents of node {i} must be sorted")
            if c.shape != (len(pa),):
                raise ShapeMismatch(f"node {i}: {c.size} coefficients for {len(pa)} parents")
        if np.any(~(variances > 0)):
            raise NonPositiveVariance("conditional variances must be positive")
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "coefs", coefs)
        object.__setattr__(self, "intercepts", intercepts)
        object.__setattr__(self, "variances", variances)

    @property
    def n(self) -> int:
        return len(self.parents)

    def check_graph(self, g: Dag) -> None:
        if g.parents != self.parents:
            raise ShapeMismatch("parameters do not match the graph's parent sets")


def simulate(g: Dag, p: GaussianDagParams, N: int, seed: int) -> Dataset:
    """Ancestral sampling in topological order; deterministic per ``seed``.

    Node ``i`` draws its noise from its own stream ``default_rng([seed, i])``
    (PCG64, ziggurat normals), so the output does not depend on the order in
    which nodes are generated.
    """
    p.check_graph(g)
    if N < 0:
        raise ValueError("N must be non-negative")
    x = np.zeros((N, g.n))
    for i in topological_order(g):
        noise = np.random.default_rng([seed, i]).standard_normal(N)
        col = p.intercepts[i] + math.sqrt(p.variances[i]) * noise
        for j, b in zip(p.parents[i], p.coefs[i]):
            col = col + b * x[:, j]
        x[:, i] = col
    return Dataset(g.labels, x)


def implied_moments(g: Dag, p: GaussianDagParams) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of the joint normal defined by the regressions."""
    p.check_graph(g)
    n = g.n
    mean = np.zeros(n)
    cov = np.zeros((n, n))
    for i in topological_order(g):
        pa = list(p.parents[i])
        b = p.coefs[i]
        mean[i] = p.intercepts[i] + b @ mean[pa] if pa else p.intercepts[i]
        # Cov(x_i, x_k) = sum_j b_j Cov(x_j, x_k) for earlier k; Var adds v_i
        row = b @ cov[pa, :] if pa else np.zeros(n)
        cov[i, :] = row
        cov[:, i] = row
        cov[i, i] = (b @ cov[np.ix_(pa, pa)] @ b if pa else 0.0) + p.variances[i]
    return mean, cov


# -- params file ---------------------------------------------------------------

_TOKEN_RE = re.compile(r"^(m|v)=(\S+)$|^b\[([A-Za-z0-9_]+)\]=(\S+)$")


def parse_params(text: str, g: Dag, source: str = "<string>") -> GaussianDagParams:
    """Parse lines ``name: m=<real> v=<real> b[parent]=<real> ...``."""
    index = {name: k for k, name in enumerate(g.labels)}
    seen: dict[int, tuple[float, float, dict[int, float]]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, rest = line.partition(":")
        name = name.strip()
        if not sep or name not in index:
            raise ParseError(f"{source}:{lineno}: expected '<node>: m=... v=...' for a known node")
        node = index[name]
        if node in seen:
            raise ParseError(f"{source}:{lineno}: node {name!r} given twice")
        m = v = None
        b: dict[int, float] = {}
        for tok in rest.split():
            match = _TOKEN_RE.match(tok)
            if not match:
                raise ParseError(f"{source}:{lineno}: bad token {tok!r}")
            parent = match.group(3)
            if parent is not None and parent not in index:
                raise ParseError(f"{source}:{lineno}: unknown parent {parent!r}")
            try:
                value = float(match.group(2) or match.group(4))
            except ValueError:
                raise ParseError(f"{source}:{lineno}: cannot parse {tok!r}") from None
            if match.group(1) == "m":
                m = value
            elif match.group(1) == "v":
                v = value
            else:
                b[index[parent]] = value
        if m is None or v is None:
            raise ParseError(f"{source}:{lineno}: node {name!r} needs both m= and v=")
        if set(b) != set(g.parents[node]):
            raise ShapeMismatch(f"{source}:{lineno}: coefficients for {name!r} do not match its parents")
        seen[node] = (m, v, b)
    missing = [g.labels[i] for i in range(g.n) if i not in seen]
    if missing:
        raise ShapeMismatch(f"{source}: no parameters for nodes {missing}")
    return GaussianDagParams(
        parents=g.parents,
        intercepts=[seen[i][0] for i in range(g.n)],
        coefs=[[seen[i][2][p] for p in g.parents[i]] for i in range(g.n)],
        variances=[seen[i][1] for i in range(g.n)],
    )


def read_params(path: str | Path, g: Dag) -> GaussianDagParams:
    path = Path(path)
    return parse_params(path.read_text(), g, str(path))


def format_params(p: GaussianDagParams, labels: Sequence[str]) -> str:
    lines = []
    for i in range(p.n):
        toks = [f"m={float(p.intercepts[i])!r}", f"v={float(p.variances[i])!r}"]
        toks += [f"b[{labels[j]}]={float(c)!r}" for j, c in zip(p.parents[i], p.coefs[i])]
        lines.append(f"{labels[i]}: " + " ".join(toks))
    return "\n".join(lines) + "\n"
