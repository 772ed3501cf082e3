"""Labeled DAGs, independence equivalence, and small-graph enumeration.

A :class:`Dag` is immutable. Parent sets are stored as sorted tuples so that
equality, hashing, and cache keys are canonical. Acyclicity is verified on
construction, so every ``Dag`` that exists is acyclic.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import permutations
from pathlib import Path
from typing import Iterable, Sequence

from gaussdag.errors import (
    ArcNotPresent,
    CapExceeded,
    CycleDetected,
    DimensionMismatch,
    NotAPermutation,
    ParseError,
    TooLarge,
)

Arc = tuple[int, int]

_NAME_RE = re.compile(r"^[A-Za-z0-9_]+$")
MAX_ENUMERATE = 5


def default_labels(n: int) -> tuple[str, ...]:
    return tuple(f"X{i}" for i in range(n))


def _kahn(n: int, parents: Sequence[Sequence[int]]) -> list[int] | None:
    indeg = [len(p) for p in parents]
    children: list[list[int]] = [[] for _ in range(n)]
    for child, pa in enumerate(parents):
        for p in pa:
            children[p].append(child)
    # smallest ready node first, so the empty graph yields 0..n-1
    ready = sorted(i for i in range(n) if indeg[i] == 0)
    order = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        for c in children[node]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
        ready.sort()
    return order if len(order) == n else None


@dataclass(frozen=True)
class Dag:
    """Acyclic digraph over ``n`` labeled nodes.

    Parameters
    ----------
    parents : sequence of sequences of int
        ``parents[i]`` lists the parents of node ``i``.
    labels : sequence of str, optional
        Node names; defaults to ``X0, X1, ...``.
    """

    parents: tuple[tuple[int, ...], ...]
    labels: tuple[str, ...] = field(default=())

    def __init__(self, parents: Sequence[Iterable[int]], labels: Sequence[str] | None = None):
        n = len(parents)
        canon = []
        for child, pa in enumerate(parents):
            pa = tuple(sorted(int(p) for p in pa))
            if len(set(pa)) != len(pa):
                raise ValueError(f"duplicate parent entries for node {child}")
            if child in pa:
                raise CycleDetected(f"self-loop on node {child}")
            if pa and (pa[0] < 0 or pa[-1] >= n):
                raise ValueError(f"parent index out of range for node {child}")
            canon.append(pa)
        labels = tuple(labels) if labels is not None else default_labels(n)
        if len(labels) != n:
            raise DimensionMismatch(f"{len(labels)} labels for {n} nodes")
        if len(set(labels)) != n:
            raise ValueError("node labels must be unique")
        if _kahn(n, canon) is None:
            raise CycleDetected("graph contains a directed cycle")
        object.__setattr__(self, "parents", tuple(canon))
        object.__setattr__(self, "labels", labels)

    @classmethod
    def empty(cls, n: int, labels: Sequence[str] | None = None) -> "Dag":
        return cls([() for _ in range(n)], labels)

    @classmethod
    def from_arcs(cls, n: int, arcs: Iterable[Arc], labels: Sequence[str] | None = None) -> "Dag":
        parents: list[list[int]] = [[] for _ in range(n)]
        for i, j in arcs:
            parents[j].append(i)
        return cls(parents, labels)

    @property
    def n(self) -> int:
        return len(self.parents)

    @property
    def arcs(self) -> list[Arc]:
        """Arcs ``(parent, child)`` sorted lexicographically."""
        return sorted((p, c) for c, pa in enumerate(self.parents) for p in pa)

    @property
    def num_arcs(self) -> int:
        return sum(len(p) for p in self.parents)

    def has_arc(self, i: int, j: int) -> bool:
        return i in self.parents[j]

    def adjacent(self, i: int, j: int) -> bool:
        return self.has_arc(i, j) or self.has_arc(j, i)

    def children(self, i: int) -> list[int]:
        return [c for c, pa in enumerate(self.parents) if i in pa]

    def has_path(self, src: int, dst: int) -> bool:
        """True if a directed path ``src -> ... -> dst`` exists (length >= 1)."""
        children: list[list[int]] = [[] for _ in range(self.n)]
        for c, pa in enumerate(self.parents):
            for p in pa:
                children[p].append(c)
        stack = list(children[src])
        seen = set(stack)
        while stack:
            node = stack.pop()
            if node == dst:
                return True
            for c in children[node]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return False

    def with_parents(self, child: int, parents: Iterable[int]) -> "Dag":
        new = list(self.parents)
        new[child] = tuple(parents)
        return Dag(new, self.labels)

    def add_arc(self, i: int, j: int) -> "Dag":
        if self.has_arc(i, j):
            raise ValueError(f"arc {i}->{j} already present")
        return self.with_parents(j, self.parents[j] + (i,))

    def remove_arc(self, i: int, j: int) -> "Dag":
        if not self.has_arc(i, j):
            raise ArcNotPresent(f"arc {i}->{j} not present")
        return self.with_parents(j, [p for p in self.parents[j] if p != i])

    def skeleton(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(a) for a in self.arcs)

    def __str__(self) -> str:
        return format_dag(self)


@dataclass(frozen=True)
class EquivalenceKey:
    skeleton: frozenset[tuple[int, int]]
    vstructures: frozenset[tuple[int, int, int]]


def topological_order(g: Dag) -> list[int]:
    order = _kahn(g.n, g.parents)
    if order is None:
        raise CycleDetected("graph contains a directed cycle")
    return order


def _check_permutation(order: Sequence[int]) -> list[int]:
    order = [int(o) for o in order]
    if sorted(order) != list(range(len(order))):
        raise NotAPermutation(f"{order} is not a permutation of 0..{len(order) - 1}")
    return order


def complete_dag(order: Sequence[int], labels: Sequence[str] | None = None) -> Dag:
    """Complete DAG whose node at position ``k`` has the ``k`` preceding nodes as parents."""
    order = _check_permutation(order)
    parents: list[tuple[int, ...]] = [()] * len(order)
    for k, node in enumerate(order):
        parents[node] = tuple(order[:k])
    return Dag(parents, labels)


def is_complete(g: Dag) -> bool:
    return g.num_arcs == g.n * (g.n - 1) // 2


def v_structures(g: Dag) -> frozenset[tuple[int, int, int]]:
    """Colliders ``i -> j <- k`` with ``i``, ``k`` non-adjacent, as ``(i, j, k)`` with ``i < k``."""
    out = set()
    for j, pa in enumerate(g.parents):
        for a in range(len(pa)):
            for b in range(a + 1, len(pa)):
                i, k = pa[a], pa[b]
                if not g.adjacent(i, k):
                    out.add((i, j, k))
    return frozenset(out)


def equivalence_key(g: Dag) -> EquivalenceKey:
    skel = frozenset((min(a), max(a)) for a in g.arcs)
    return EquivalenceKey(skel, v_structures(g))


def independence_equivalent(g1: Dag, g2: Dag) -> bool:
    if g1.n != g2.n or g1.labels != g2.labels:
        raise DimensionMismatch("graphs are over different node sets")
    return equivalence_key(g1) == equivalence_key(g2)


def is_covered(g: Dag, arc: Arc) -> bool:
    """An arc ``i -> j`` is covered when ``parents(j) \\ {i} == parents(i)``."""
    i, j = arc
    if not g.has_arc(i, j):
        raise ArcNotPresent(f"arc {i}->{j} not present")
    return tuple(p for p in g.parents[j] if p != i) == g.parents[i]


def reverse_arc(g: Dag, arc: Arc) -> Dag:
    i, j = arc
    if not g.has_arc(i, j):
        raise ArcNotPresent(f"arc {i}->{j} not present")
    new = list(g.parents)
    new[j] = tuple(p for p in g.parents[j] if p != i)
    new[i] = g.parents[i] + (j,)
    return Dag(new, g.labels)


def covered_arcs(g: Dag) -> list[Arc]:
    return [a for a in g.arcs if is_covered(g, a)]


def covered_reversal_closure(g: Dag, cap: int = 10_000) -> set[Dag]:
    """All DAGs reachable from ``g`` by sequences of covered arc reversals."""
    seen = {g}
    frontier = [g]
    while frontier:
        cur = frontier.pop()
        for arc in covered_arcs(cur):
            nxt = reverse_arc(cur, arc)
            if nxt not in seen:
                seen.add(nxt)
                if len(seen) > cap:
                    raise CapExceeded(f"more than {cap} DAGs reachable")
                frontier.append(nxt)
    return seen


def enumerate_dags(n: int, labels: Sequence[str] | None = None) -> list[Dag]:
    """Every labeled DAG on ``n <= 5`` nodes, each exactly once.

    Each unordered pair takes one of three states (absent, ``i->j``,
    ``j->i``); partial assignments that close a cycle are pruned immediately.
    """
    if n > MAX_ENUMERATE:
        raise TooLarge(f"enumeration supports n <= {MAX_ENUMERATE}, got {n}")
    if n < 0:
        raise ValueError("n must be non-negative")
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    # reach[u] bitmask of nodes reachable from u (including via current arcs)
    out: list[Dag] = []
    parent_masks = [0] * n

    def reach_from(u: int, child_masks: list[int]) -> int:
        seen = 0
        stack = [u]
        while stack:
            x = stack.pop()
            m = child_masks[x] & ~seen
            seen |= m
            while m:
                low = m & -m
                stack.append(low.bit_length() - 1)
                m ^= low
        return seen

    child_masks = [0] * n

    def rec(k: int) -> None:
        if k == len(pairs):
            out.append(Dag([[p for p in range(n) if parent_masks[c] >> p & 1] for c in range(n)], labels))
            return
        i, j = pairs[k]
        rec(k + 1)
        for a, b in ((i, j), (j, i)):
            # adding a->b closes a cycle iff a is reachable from b
            if reach_from(b, child_masks) >> a & 1:
                continue
            child_masks[a] |= 1 << b
            parent_masks[b] |= 1 << a
            rec(k + 1)
            child_masks[a] &= ~(1 << b)
            parent_masks[b] &= ~(1 << a)

    rec(0)
    return out


def all_complete_dags(n: int, labels: Sequence[str] | None = None) -> list[Dag]:
    return [complete_dag(p, labels) for p in permutations(range(n))]


# -- text format -------------------------------------------------------------

def format_dag(g: Dag) -> str:
    lines = ["nodes: " + ",".join(g.labels)]
    lines += [f"{g.labels[i]} -> {g.labels[j]}" for i, j in g.arcs]
    return "\n".join(lines) + "\n"


def parse_dag(text: str, source: str = "<string>") -> Dag:
    """Parse ``nodes: a,b,...`` followed by ``parent -> child`` lines."""
    labels: list[str] | None = None
    arcs: list[Arc] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if labels is None:
            if not line.startswith("nodes:"):
                raise ParseError(f"{source}:{lineno}: expected 'nodes:' header")
            body = line[len("nodes:"):].strip()
            labels = [s.strip() for s in body.split(",")] if body else []
            for name in labels:
                if not _NAME_RE.match(name):
                    raise ParseError(f"{source}:{lineno}: invalid node name {name!r}")
            if len(set(labels)) != len(labels):
                raise ParseError(f"{source}:{lineno}: duplicate node names")
            index = {name: k for k, name in enumerate(labels)}
            continue
        parts = line.split("->")
        if len(parts) != 2:
            raise ParseError(f"{source}:{lineno}: expected 'parent -> child'")
        a, b = parts[0].strip(), parts[1].strip()
        for name in (a, b):
            if name not in index:
                raise ParseError(f"{source}:{lineno}: unknown node {name!r}")
        arcs.append((index[a], index[b]))
    if labels is None:
        raise ParseError(f"{source}: missing 'nodes:' header")
    if len(set(arcs)) != len(arcs):
        raise ParseError(f"{source}: duplicate arc")
    try:
        return Dag.from_arcs(len(labels), arcs, labels)
    except CycleDetected as exc:
        raise ParseError(f"{source}: {exc}") from None


def read_dag(path: str | Path) -> Dag:
    path = Path(path)
    return parse_dag(path.read_text(), str(path))


def write_dag(g: Dag, path: str | Path) -> None:
    Path(path).write_text(format_dag(g))
