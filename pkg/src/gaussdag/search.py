"""Score-driven structure search: greedy hill climbing and an exhaustive oracle."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from gaussdag.dag import Dag, enumerate_dags, reverse_arc
from gaussdag.errors import TooLarge
from gaussdag.score import FamilyScoreCache, ScoreContext, log_marginal_likelihood

IMPROVEMENT_THRESHOLD = 1e-9
TIE_RTOL = 1e-9
MAX_EXHAUSTIVE = 4

# lower rank wins ties between equally scoring moves
_KIND_RANK = {"delete": 0, "reverse": 1, "add": 2}


class Move(NamedTuple):
    kind: str
    parent: int
    child: int

    def describe(self, labels) -> str:
        arrow = f"{labels[self.parent]}->{labels[self.child]}"
        return f"{self.kind} {arrow}"


@dataclass(frozen=True)
class SearchConfig:
    max_iterations: int = 1000
    restarts: int = 1
    seed: int = 0
    max_parents: int | None = None
    workers: int = 1

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_parents is not None and self.max_parents < 0:
            raise ValueError("max_parents must be non-negative")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class SearchResult:
    best: Dag
    score: float
    trace: list[tuple[int, str, float]] = field(default_factory=list)
    restart: int = 0


def effective_max_parents(n: int, max_parents: int | None) -> int:
    if max_parents is not None:
        return max_parents
    return n - 1 if n <= 20 else 5


def _reachable(children: list[list[int]], src: int, skip: tuple[int, int] | None = None) -> set[int]:
    seen: set[int] = set()
    stack = [src]
    while stack:
        u = stack.pop()
        for c in children[u]:
            if skip is not None and (u, c) == skip:
                continue
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return seen


def neighbors(g: Dag, max_parents: int | None = None) -> list[Move]:
    """Single-arc deletions, reversals, and additions that keep ``g`` acyclic.

    Returned in tie-break order: deletions, then reversals, then additions,
    each sorted by ``(child, parent)``.
    """
    n = g.n
    cap = effective_max_parents(n, max_parents)
    children: list[list[int]] = [[] for _ in range(n)]
    for c, pa in enumerate(g.parents):
        for p in pa:
            children[p].append(c)
    reach = [_reachable(children, u) for u in range(n)]
    moves: list[Move] = []
    for child, pa in enumerate(g.parents):
        for parent in pa:
            moves.append(Move("delete", parent, child))
    for child, pa in enumerate(g.parents):
        for parent in pa:
            # after reversal, child joins the parent set of parent
            if len(g.parents[parent]) + 1 > cap:
                continue
            if child in _reachable(children, parent, skip=(parent, child)):
                continue
            moves.append(Move("reverse", parent, child))
    for child in range(n):
        if len(g.parents[child]) >= cap:
            continue
        for parent in range(n):
            if parent == child or g.adjacent(parent, child):
                continue
            if parent in reach[child]:
                continue
            moves.append(Move("add", parent, child))
    moves.sort(key=lambda m: (_KIND_RANK[m.kind], m.child, m.parent))
    return moves


def apply_move(g: Dag, move: Move) -> Dag:
    """Apply ``move``; every move names an arc ``parent -> child`` as it exists
    (delete, reverse) or will exist (add)."""
    if move.kind == "add":
        return g.add_arc(move.parent, move.child)
    if move.kind == "delete":
        return g.remove_arc(move.parent, move.child)
    return reverse_arc(g, (move.parent, move.child))


def _move_delta(cache: FamilyScoreCache, g: Dag, fam: list[float], move: Move) -> tuple[float, dict[int, float]]:
    p, c = move.parent, move.child
    if move.kind == "add":
        new = cache.get_or_compute(c, tuple(sorted(g.parents[c] + (p,))))
        return new - fam[c], {c: new}
    if move.kind == "delete":
        new = cache.get_or_compute(c, tuple(x for x in g.parents[c] if x != p))
        return new - fam[c], {c: new}
    # p->c becomes c->p
    new_c = cache.get_or_compute(c, tuple(x for x in g.parents[c] if x != p))
    new_p = cache.get_or_compute(p, tuple(sorted(g.parents[p] + (c,))))
    return (new_p - fam[p]) + (new_c - fam[c]), {p: new_p, c: new_c}


def random_dag(n: int, rng: np.random.Generator, max_parents: int, labels=None) -> Dag:
    """Random DAG: a random order with each forward pair present independently."""
    order = rng.permutation(n)
    prob = min(0.5, 2.0 / max(n - 1, 1))
    parents: list[list[int]] = [[] for _ in range(n)]
    for k in range(1, n):
        child = int(order[k])
        for j in range(k):
            if rng.random() < prob and len(parents[child]) < max_parents:
                parents[child].append(int(order[j]))
    return Dag(parents, labels)


def _climb(ctx: ScoreContext, cache: FamilyScoreCache, start: Dag, cfg: SearchConfig, restart: int) -> SearchResult:
    g = start
    fam = [cache.get_or_compute(i, g.parents[i]) for i in range(g.n)]
    total = math.fsum(fam)
    trace = [(0, "start", total)]
    for it in range(1, cfg.max_iterations + 1):
        best_move = None
        best_delta = IMPROVEMENT_THRESHOLD
        best_updates: dict[int, float] = {}
        for move in neighbors(g, cfg.max_parents):
            delta, updates = _move_delta(cache, g, fam, move)
            if delta > best_delta:
                best_move, best_delta, best_updates = move, delta, updates
        if best_move is None:
            break
        g = apply_move(g, best_move)
        for node, value in best_updates.items():
            fam[node] = value
        total += best_delta
        trace.append((it, best_move.describe(g.labels), total))
    return SearchResult(g, log_marginal_likelihood(ctx, cache, g), trace, restart)


def greedy_hill_climb(ctx: ScoreContext, cfg: SearchConfig | None = None, *,
                      cache: FamilyScoreCache | None = None, labels=None) -> SearchResult:
    """Best-improvement hill climbing with random restarts.

    Restart 0 starts from the empty graph; restart ``r > 0`` from a random
    DAG drawn with ``numpy.random.default_rng([seed, r])``. The best result
    over restarts wins, ties going to the lowest restart index, so the outcome
    does not depend on ``cfg.workers``.
    """
    cfg = cfg or SearchConfig()
    if cache is None:
        cache = FamilyScoreCache(ctx)
    n = ctx.n
    cap = effective_max_parents(n, cfg.max_parents)

    def start_for(r: int) -> Dag:
        if r == 0:
            return Dag.empty(n, labels)
        return random_dag(n, np.random.default_rng([cfg.seed, r]), cap, labels)

    def run(r: int) -> SearchResult:
        return _climb(ctx, cache, start_for(r), cfg, r)

    if cfg.workers > 1 and cfg.restarts > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(run, range(cfg.restarts)))
    else:
        results = [run(r) for r in range(cfg.restarts)]
    best = results[0]
    for res in results[1:]:
        if res.score > best.score + TIE_RTOL * max(1.0, abs(best.score)):
            best = res
    return best


def exhaustive_scores(ctx: ScoreContext, cache: FamilyScoreCache | None = None, labels=None) -> list[tuple[Dag, float]]:
    if ctx.n > MAX_EXHAUSTIVE:
        raise TooLarge(f"exhaustive search supports n <= {MAX_EXHAUSTIVE}, got {ctx.n}")
    if cache is None:
        cache = FamilyScoreCache(ctx)
    return [(g, log_marginal_likelihood(ctx, cache, g)) for g in enumerate_dags(ctx.n, labels)]


def optimal_set(scored: list[tuple[Dag, float]]) -> list[tuple[Dag, float]]:
    """Entries tied with the maximum within ``TIE_RTOL`` relative."""
    top = max(s for _, s in scored)
    tol = TIE_RTOL * max(1.0, abs(top))
    return [(g, s) for g, s in scored if s >= top - tol]


def exhaustive_best(ctx: ScoreContext, cache: FamilyScoreCache | None = None, labels=None) -> SearchResult:
    """Argmax over every DAG; ties go to fewest arcs, then the lexicographic arc list."""
    scored = exhaustive_scores(ctx, cache, labels)
    g, s = min(optimal_set(scored), key=lambda gs: (gs[0].num_arcs, gs[0].arcs))
    return SearchResult(g, s, [(0, "exhaustive", s)], 0)
