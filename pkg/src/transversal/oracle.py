"""Exact brute-force solvers used as ground truth.

The transversal embedder backtracks over vertex images only: an injective
colour assignment exists for the currently completed pattern edges iff the
bipartite edge/colour incidence graph has a matching saturating the edges,
so a matching check per node replaces colour branching entirely and makes
Infeasible a genuine proof within budget.

Results are deterministic and budget-monotone: raising a budget can only
turn BudgetExceeded into a definite answer, never flip feasible/infeasible.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

from .core import (
    GraphCollection,
    PatternGraph,
    ThreeGraph,
    TransversalEmbedding,
    bits_of,
)
from .matching import max_bipartite_matching

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
BUDGET_EXCEEDED = "budget-exceeded"


@dataclass(frozen=True)
class SearchBudget:
    node_limit: int = 2_000_000
    time_limit: float | None = None
    symmetry_breaking: bool = False

    def __post_init__(self):
        if self.node_limit <= 0:
            raise ValueError("node limit must be positive")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time limit must be positive")


@dataclass
class OracleResult:
    status: str
    embedding: TransversalEmbedding | None = None
    nodes: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE


class _Clock:
    def __init__(self, budget: SearchBudget):
        self.deadline = time.monotonic() + budget.time_limit if budget.time_limit else None
        self.limit = budget.node_limit
        self.nodes = 0

    def tick(self) -> bool:
        self.nodes += 1
        if self.nodes > self.limit:
            return False
        if self.deadline is not None and time.monotonic() > self.deadline:
            return False
        return True


def _connected_order(H: PatternGraph) -> list[int]:
    # max-adjacency-to-placed order, highest degree first among ties
    order: list[int] = []
    placed: set[int] = set()
    remaining = set(range(H.n))
    while remaining:
        best = max(
            remaining,
            key=lambda v: (sum(1 for w in H.neighbours(v) if w in placed), H.degree(v), -v),
        )
        order.append(best)
        placed.add(best)
        remaining.remove(best)
    return order


def exact_transversal_embed(
    gc: GraphCollection,
    H: PatternGraph,
    targets: dict[int, set[int]] | None = None,
    budget: SearchBudget = SearchBudget(),
) -> OracleResult:
    """Complete backtracking over vertex images with a matching-based forward
    check on colour availability.  Intended for v(H) <= 12, |C| <= 14."""
    targets = targets or (H.targets or {})
    if H.e > gc.n_colours or H.n > gc.n:
        return OracleResult(INFEASIBLE, meta={"reason": "pigeonhole"})
    order = _connected_order(H)
    pos = {v: i for i, v in enumerate(order)}
    clock = _Clock(budget)
    tau: dict[int, int] = {}
    used_hosts: set[int] = set()
    edge_avail: dict[tuple[int, int], int] = {}

    def colours_ok() -> bool:
        adj = {e: list(bits_of(m)) for e, m in edge_avail.items()}
        return len(max_bipartite_matching(adj)) == len(adj)

    sym_floor = [-1]

    def place(i: int) -> bool | None:
        if i == len(order):
            return True
        v = order[i]
        cand = targets.get(v)
        host_iter = sorted(cand) if cand is not None else range(gc.n)
        for w in host_iter:
            if w in used_hosts or not 0 <= w < gc.n:
                continue
            if not clock.tick():
                return None
            if budget.symmetry_breaking and v != order[0] and w < sym_floor[0]:
                continue
            new_edges = []
            ok = True
            for u in H.neighbours(v):
                if u in tau:
                    m = gc.colour_mask(tau[u], w)
                    if not m:
                        ok = False
                        break
                    e = (u, v) if u < v else (v, u)
                    new_edges.append((e, m))
            if not ok:
                continue
            tau[v] = w
            used_hosts.add(w)
            for e, m in new_edges:
                edge_avail[e] = m
            if v == order[0]:
                sym_floor[0] = w
            if not new_edges or colours_ok():
                res = place(i + 1)
                if res:
                    return True
                if res is None:
                    return None
            for e, _ in new_edges:
                del edge_avail[e]
            used_hosts.discard(w)
            del tau[v]
        return False

    res = place(0)
    if res is None:
        return OracleResult(BUDGET_EXCEEDED, nodes=clock.nodes)
    if not res:
        return OracleResult(INFEASIBLE, nodes=clock.nodes)
    adj = {e: list(bits_of(m)) for e, m in edge_avail.items()}
    sigma = max_bipartite_matching(adj)
    emb = TransversalEmbedding(tau=dict(tau), sigma=dict(sigma))
    return OracleResult(FEASIBLE, embedding=emb, nodes=clock.nodes)


def _automorphism_count(F: PatternGraph) -> int:
    edges = set(F.edges())
    count = 0
    for perm in itertools.permutations(range(F.n)):
        if all(
            ((perm[u], perm[v]) if perm[u] < perm[v] else (perm[v], perm[u])) in edges
            for (u, v) in edges
        ):
            count += 1
    return count


def _count_colour_systems(edge_masks: list[int]) -> int:
    """Number of injective colour assignments: systems of distinct
    representatives, by DP over edges with a compressed colour mask."""
    if not edge_masks:
        return 1
    universe = 0
    for m in edge_masks:
        universe |= m
    cols = list(bits_of(universe))
    remap = {c: i for i, c in enumerate(cols)}
    masks = []
    for m in edge_masks:
        mm = 0
        for c in bits_of(m):
            mm |= 1 << remap[c]
        masks.append(mm)
    states: dict[int, int] = {0: 1}
    for m in masks:
        nxt: dict[int, int] = {}
        for used, ways in states.items():
            free = m & ~used
            for b in bits_of(free):
                key = used | (1 << b)
                nxt[key] = nxt.get(key, 0) + ways
        states = nxt
        if not states:
            return 0
    return sum(states.values())


@dataclass
class CountResult:
    count: int
    labelled: int
    automorphisms: int
    nodes: int
    status: str
    convention: str = "labelled (tau, sigma) pairs divided by |Aut(F)|"


def count_rainbow_copies(
    gc: GraphCollection, F: PatternGraph, budget: SearchBudget = SearchBudget()
) -> CountResult:
    """Exact transversal-copy count, up to F-automorphism.

    Counts all labelled (tau, sigma) pairs and divides by |Aut(F)|; intended
    for v(F) <= 5.
    """
    if F.n > 8:
        raise ValueError("copy counting is intended for small patterns")
    aut = _automorphism_count(F)
    order = _connected_order(F)
    clock = _Clock(budget)
    labelled = 0
    tau: dict[int, int] = {}
    used: set[int] = set()

    def place(i: int) -> bool:
        nonlocal labelled
        if i == len(order):
            masks = [gc.colour_mask(tau[u], tau[v]) for (u, v) in F.edges()]
            labelled += _count_colour_systems(masks)
            return True
        v = order[i]
        for w in range(gc.n):
            if w in used:
                continue
            if not clock.tick():
                return False
            if any(
                u in tau and not gc.colour_mask(tau[u], w) for u in F.neighbours(v)
            ):
                continue
            tau[v] = w
            used.add(w)
            if not place(i + 1):
                return False
            used.discard(w)
            del tau[v]
        return True

    completed = place(0)
    if completed:
        assert labelled % aut == 0
        return CountResult(
            count=labelled // aut,
            labelled=labelled,
            automorphisms=aut,
            nodes=clock.nodes,
            status=FEASIBLE,
        )
    return CountResult(
        count=labelled // aut,
        labelled=labelled,
        automorphisms=aut,
        nodes=clock.nodes,
        status=BUDGET_EXCEEDED,
    )


def monochromatic_triangle_count(gc: GraphCollection) -> int:
    """Exhaustive count of (triple, colour) pairs forming a one-colour triangle."""
    total = 0
    for c in range(gc.n_colours):
        for u in range(gc.n):
            au = gc.adj(c, u)
            for v in bits_of(au >> (u + 1) << (u + 1)):
                common = au & gc.adj(c, v)
                total += (common >> (v + 1)).bit_count()
    return total


@dataclass
class HamiltonResult:
    status: str
    cycle: tuple[int, ...] | None = None
    nodes: int = 0


def tight_hamilton_search(
    g: ThreeGraph, budget: SearchBudget = SearchBudget()
) -> HamiltonResult:
    """Backtracking over cyclic vertex orders in which every three consecutive
    vertices form an edge.  Intended for v(g) <= 15."""
    n = g.n
    if n < 3:
        return HamiltonResult(INFEASIBLE)
    edges = g.edges
    clock = _Clock(budget)
    order = [0]
    used = [False] * n
    used[0] = True

    def extend() -> bool | None:
        if len(order) == n:
            a, b = order[-2], order[-1]
            if order[1] > order[-1]:
                return False  # reflection symmetry: keep one orientation
            if (
                tuple(sorted((a, b, order[0]))) in edges
                and tuple(sorted((b, order[0], order[1]))) in edges
            ):
                return True
            return False
        for v in range(1, n):
            if used[v]:
                continue
            if not clock.tick():
                return None
            if len(order) >= 2 and tuple(sorted((order[-2], order[-1], v))) not in edges:
                continue
            order.append(v)
            used[v] = True
            res = extend()
            if res:
                return True
            if res is None:
                return None
            used[v] = False
            order.pop()
        return False

    res = extend()
    if res is None:
        return HamiltonResult(BUDGET_EXCEEDED, nodes=clock.nodes)
    if res:
        return HamiltonResult(FEASIBLE, cycle=tuple(order), nodes=clock.nodes)
    return HamiltonResult(INFEASIBLE, nodes=clock.nodes)
