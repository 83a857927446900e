"""Graph collections and their three equivalent representations.

A graph collection is a family of graphs, one per colour, all sharing a
vertex set.  The same data can be viewed as a 3-uniform hypergraph on
``vertices + colours`` (a 3-edge xyc whenever xy is an edge of colour c), or
as an edge-coloured multigraph.  This module holds the canonical types, the
conversions between views, the transversal-embedding verifier and a greedy
separability certifier.

Vertices and colours are dense integer indices assigned at construction;
external names map through optional symbol tables.  Adjacency is stored as
per-vertex bitmasks so that neighbourhood intersections are single ``&``
operations.  All values are immutable after construction and safe to share
across concurrent readers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence


class EdgeStraddlesSides(ValueError):
    """A 3-edge does not have exactly one vertex on the colour side."""


def mask_of(bits: Iterable[int]) -> int:
    m = 0
    for b in bits:
        m |= 1 << b
    return m


def bits_of(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class SimpleGraph:
    """Plain undirected graph on ``n`` dense vertices with bitmask adjacency."""

    __slots__ = ("n", "_adj", "_edges")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        adj = [0] * n
        eset = set()
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) out of range for n={n}")
            if u == v:
                raise ValueError(f"loop at vertex {u}")
            a, b = (u, v) if u < v else (v, u)
            if (a, b) in eset:
                continue
            eset.add((a, b))
            adj[a] |= 1 << b
            adj[b] |= 1 << a
        self.n = n
        self._adj = tuple(adj)
        self._edges = tuple(sorted(eset))

    def adj(self, v: int) -> int:
        return self._adj[v]

    def neighbours(self, v: int) -> Iterator[int]:
        return bits_of(self._adj[v])

    def degree(self, v: int) -> int:
        return self._adj[v].bit_count()

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self._adj[u] >> v & 1)

    def edges(self) -> tuple[tuple[int, int], ...]:
        return self._edges

    @property
    def e(self) -> int:
        return len(self._edges)

    @property
    def max_degree(self) -> int:
        return max((a.bit_count() for a in self._adj), default=0)

    def components(self) -> list[list[int]]:
        seen = [False] * self.n
        out = []
        for s in range(self.n):
            if seen[s]:
                continue
            comp, stack = [], [s]
            seen[s] = True
            while stack:
                v = stack.pop()
                comp.append(v)
                for w in bits_of(self._adj[v]):
                    if not seen[w]:
                        seen[w] = True
                        stack.append(w)
            out.append(sorted(comp))
        return out

    def __eq__(self, other):
        return (
            isinstance(other, SimpleGraph)
            and self.n == other.n
            and self._edges == other._edges
        )

    def __hash__(self):
        return hash((self.n, self._edges))

    def __repr__(self):
        return f"SimpleGraph(n={self.n}, e={self.e})"


class PatternGraph(SimpleGraph):
    """A bounded-degree graph to be embedded.

    Optionally carries a homomorphism ``phi`` into a cluster graph R (one
    cluster index per vertex), target sets (vertex -> admissible host
    vertices) for marked vertices, and a declared maximum-degree bound.
    """

    __slots__ = ("delta_bound", "phi", "targets")

    def __init__(
        self,
        n: int,
        edges: Iterable[tuple[int, int]] = (),
        delta_bound: int | None = None,
        phi: Sequence[int] | None = None,
        targets: Mapping[int, Iterable[int]] | None = None,
    ):
        super().__init__(n, edges)
        if delta_bound is not None and self.max_degree > delta_bound:
            raise ValueError(
                f"max degree {self.max_degree} exceeds declared bound {delta_bound}"
            )
        self.delta_bound = delta_bound if delta_bound is not None else self.max_degree
        self.phi = tuple(phi) if phi is not None else None
        if self.phi is not None and len(self.phi) != n:
            raise ValueError("phi must assign a cluster to every vertex")
        self.targets = (
            {int(v): frozenset(ts) for v, ts in targets.items()} if targets else None
        )

    def marked(self) -> tuple[int, ...]:
        return tuple(sorted(self.targets)) if self.targets else ()

    def check_homomorphism(self, R: SimpleGraph) -> bool:
        """True when phi maps every edge of self onto an edge of R."""
        if self.phi is None:
            return False
        return all(R.has_edge(self.phi[u], self.phi[v]) for u, v in self._edges)

    def __repr__(self):
        return f"PatternGraph(n={self.n}, e={self.e}, Delta={self.max_degree})"


class GraphCollection:
    """Colour-indexed family of graphs (G_c : c in colours) on one vertex set.

    ``edges`` maps a colour index to its edge list.  The same pair may appear
    in several colours (the edge-coloured view has a multiset of colours).
    A bipartition may be declared per colour as a pair of vertex iterables;
    every edge of that colour must cross it.
    """

    __slots__ = (
        "n",
        "n_colours",
        "_adj",
        "_ecount",
        "bipartition",
        "vertex_names",
        "colour_names",
        "_pair_cache",
    )

    def __init__(
        self,
        n: int,
        n_colours: int,
        edges: Mapping[int, Iterable[tuple[int, int]]] | None = None,
        bipartition: Mapping[int, tuple[Iterable[int], Iterable[int]]] | None = None,
        vertex_names: Sequence[str] | None = None,
        colour_names: Sequence[str] | None = None,
    ):
        if n < 0 or n_colours < 0:
            raise ValueError("sizes must be non-negative")
        adj = [[0] * n for _ in range(n_colours)]
        ecount = [0] * n_colours
        for c, elist in (edges or {}).items():
            c = int(c)
            if not 0 <= c < n_colours:
                raise ValueError(f"colour {c} out of range")
            for u, v in elist:
                if not (0 <= u < n and 0 <= v < n):
                    raise ValueError(f"edge ({u},{v}) out of range for n={n}")
                if u == v:
                    raise ValueError(f"loop at vertex {u} in colour {c}")
                if not adj[c][u] >> v & 1:
                    adj[c][u] |= 1 << v
                    adj[c][v] |= 1 << u
                    ecount[c] += 1
        self.n = n
        self.n_colours = n_colours
        self._adj = tuple(tuple(rows) for rows in adj)
        self._ecount = tuple(ecount)
        self.vertex_names = tuple(vertex_names) if vertex_names else None
        self.colour_names = tuple(colour_names) if colour_names else None
        self._pair_cache: dict[tuple[int, int], int] = {}
        if bipartition:
            bp = {}
            for c, (a, b) in bipartition.items():
                c = int(c)
                ma, mb = mask_of(a), mask_of(b)
                if ma & mb:
                    raise ValueError(f"bipartition sides of colour {c} overlap")
                for u, v in self.edges(c):
                    if not ((ma >> u & 1 and mb >> v & 1) or (mb >> u & 1 and ma >> v & 1)):
                        raise ValueError(
                            f"edge ({u},{v}) of colour {c} does not cross the declared bipartition"
                        )
                bp[c] = (ma, mb)
            self.bipartition = bp
        else:
            self.bipartition = None

    @property
    def colours(self) -> range:
        return range(self.n_colours)

    def adj(self, c: int, v: int) -> int:
        return self._adj[c][v]

    def degree(self, c: int, v: int) -> int:
        return self._adj[c][v].bit_count()

    def total_degree(self, v: int) -> int:
        """Sum of deg_{G_c}(v) over all colours: the 3-graph degree of v."""
        return sum(rows[v].bit_count() for rows in self._adj)

    def has_edge(self, c: int, u: int, v: int) -> bool:
        return bool(self._adj[c][u] >> v & 1)

    def edges(self, c: int) -> Iterator[tuple[int, int]]:
        for u in range(self.n):
            m = self._adj[c][u] >> (u + 1) << (u + 1)
            for v in bits_of(m):
                yield (u, v)

    def edge_count(self, c: int) -> int:
        return self._ecount[c]

    def total_edge_count(self) -> int:
        return sum(self._ecount)

    def colour_mask(self, u: int, v: int) -> int:
        """Bitmask over colours c with uv in G_c (the multiset of colours of uv)."""
        key = (u, v) if u < v else (v, u)
        m = self._pair_cache.get(key)
        if m is None:
            m = 0
            for c in range(self.n_colours):
                if self._adj[c][u] >> v & 1:
                    m |= 1 << c
            self._pair_cache[key] = m
        return m

    def colour_multiplicity(self, u: int, v: int) -> int:
        return self.colour_mask(u, v).bit_count()

    def layer(self, c: int) -> SimpleGraph:
        return SimpleGraph(self.n, self.edges(c))

    def __eq__(self, other):
        return (
            isinstance(other, GraphCollection)
            and self.n == other.n
            and self.n_colours == other.n_colours
            and self._adj == other._adj
        )

    def __hash__(self):
        return hash((self.n, self.n_colours, self._adj))

    def __repr__(self):
        return (
            f"GraphCollection(n={self.n}, colours={self.n_colours}, "
            f"edges={self.total_edge_count()})"
        )


class ThreeGraph:
    """3-uniform hypergraph on dense vertices, optionally k-partitioned."""

    __slots__ = ("n", "edges", "parts")

    def __init__(
        self,
        n: int,
        edges: Iterable[tuple[int, int, int]],
        parts: Sequence[Iterable[int]] | None = None,
    ):
        eset = set()
        for e in edges:
            t = tuple(sorted(e))
            if len(set(t)) != 3:
                raise ValueError(f"3-edge {e} has repeated vertices")
            if not all(0 <= x < n for x in t):
                raise ValueError(f"3-edge {e} out of range for n={n}")
            eset.add(t)
        self.n = n
        self.edges = frozenset(eset)
        if parts is not None:
            pt = tuple(tuple(sorted(p)) for p in parts)
            covered = set()
            for p in pt:
                covered.update(p)
            if covered != set(range(n)):
                raise ValueError("partition labels must cover all vertices exactly")
            self.parts = pt
        else:
            self.parts = None

    @property
    def e(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return sum(1 for t in self.edges if v in t)

    def has(self, a: int, b: int, c: int) -> bool:
        return tuple(sorted((a, b, c))) in self.edges

    def __eq__(self, other):
        return (
            isinstance(other, ThreeGraph)
            and self.n == other.n
            and self.edges == other.edges
        )

    def __repr__(self):
        return f"ThreeGraph(n={self.n}, e={self.e})"


@dataclass(frozen=True)
class TransversalEmbedding:
    """Injective vertex map tau and injective edge-colour map sigma.

    ``sigma`` is keyed by sorted pattern-edge tuples.
    """

    tau: Mapping[int, int]
    sigma: Mapping[tuple[int, int], int]

    def colour_of(self, u: int, v: int) -> int:
        return self.sigma[(u, v) if u < v else (v, u)]


@dataclass(frozen=True)
class VerificationReport:
    ok: bool
    violations: tuple[str, ...] = ()


@dataclass(frozen=True)
class SeparabilityCertificate:
    """A separator X plus the component list of H - X, both of size <= mu*v(H)."""

    mu_num: int
    mu_den: int
    separator: tuple[int, ...]
    components: tuple[tuple[int, ...], ...]

    def bound(self, n: int) -> float:
        return self.mu_num / self.mu_den * n


class NotCertified:
    """The greedy search found no certificate; not a proof of non-separability."""

    def __init__(self, reason: str = ""):
        self.reason = reason

    def __bool__(self):
        return False

    def __repr__(self):
        return f"NotCertified({self.reason!r})"


# ---------------------------------------------------------------------------
# Representation conversions


def to_three_graph(gc: GraphCollection) -> ThreeGraph:
    """3-graph of a collection: vertices V + colours, 3-edges xyc iff xy in G_c.

    Colour c becomes vertex ``gc.n + c``.  Round-trips with
    :func:`from_three_graph` applied to the natural split.
    """
    edges = []
    for c in range(gc.n_colours):
        cv = gc.n + c
        for u, v in gc.edges(c):
            edges.append((u, v, cv))
    return ThreeGraph(gc.n + gc.n_colours, edges)


def from_three_graph(
    g: ThreeGraph, v_side: Iterable[int], c_side: Iterable[int]
) -> GraphCollection:
    """Collection from a 3-graph and a (vertex side, colour side) split.

    The sides must partition V(g); every 3-edge must have exactly one vertex
    on the colour side, else :class:`EdgeStraddlesSides` is raised.  Vertices
    and colours are reindexed densely in sorted order of the given sides.
    """
    vs = sorted(set(v_side))
    cs = sorted(set(c_side))
    if set(vs) & set(cs):
        raise ValueError("v_side and c_side overlap")
    if set(vs) | set(cs) != set(range(g.n)):
        raise ValueError("v_side and c_side must partition the vertex set")
    vidx = {v: i for i, v in enumerate(vs)}
    cidx = {c: j for j, c in enumerate(cs)}
    edges: dict[int, list[tuple[int, int]]] = {j: [] for j in range(len(cs))}
    for t in g.edges:
        on_c = [x for x in t if x in cidx]
        if len(on_c) != 1:
            raise EdgeStraddlesSides(
                f"3-edge {t} has {len(on_c)} vertices on the colour side"
            )
        c = on_c[0]
        u, v = (x for x in t if x != c)
        edges[cidx[c]].append((vidx[u], vidx[v]))
    return GraphCollection(len(vs), len(cs), edges)


# ---------------------------------------------------------------------------
# Embedding verification


def verify_transversal_embedding(
    gc: GraphCollection, H: PatternGraph, emb: TransversalEmbedding
) -> VerificationReport:
    """Accept iff tau and sigma are injective, tau/sigma cover V(H)/E(H) exactly,
    every pattern edge lands in its assigned colour graph, and marked vertices
    land in their target sets.  Violations are report entries, not faults."""
    bad: list[str] = []
    tau, sigma = emb.tau, emb.sigma
    if set(tau) != set(range(H.n)):
        bad.append(f"tau domain is not V(H): {sorted(tau)}")
    if set(sigma) != set(H.edges()):
        bad.append("sigma domain is not E(H)")
    images = list(tau.values())
    if len(set(images)) != len(images):
        bad.append("tau is not injective")
    for w in images:
        if not 0 <= w < gc.n:
            bad.append(f"tau image {w} outside host vertex range")
    cols = list(sigma.values())
    if len(set(cols)) != len(cols):
        bad.append("sigma is not injective")
    for c in cols:
        if not 0 <= c < gc.n_colours:
            bad.append(f"sigma image {c} outside colour range")
    for (u, v) in H.edges():
        if u not in tau or v not in tau or (u, v) not in sigma:
            continue
        c = sigma[(u, v)]
        if not (0 <= c < gc.n_colours) or not gc.has_edge(c, tau[u], tau[v]):
            bad.append(
                f"pattern edge ({u},{v}) maps to ({tau[u]},{tau[v]}) "
                f"absent from colour {c}"
            )
    if H.targets:
        for x, T in H.targets.items():
            if x in tau and tau[x] not in T:
                bad.append(f"marked vertex {x} embedded at {tau[x]} outside its target set")
    return VerificationReport(ok=not bad, violations=tuple(bad))


# ---------------------------------------------------------------------------
# Separability


def _components_masks(adj: Sequence[int], alive: int) -> list[int]:
    comps = []
    todo = alive
    while todo:
        low = todo & -todo
        comp = low
        frontier = low
        while frontier:
            nxt = 0
            for v in bits_of(frontier):
                nxt |= adj[v] & alive & ~comp
            comp |= nxt
            frontier = nxt
        comps.append(comp)
        todo &= ~comp
    return comps


def _greedy_peel_separator(H: SimpleGraph, limit: int) -> int:
    """Repeatedly remove the vertex of the largest component that peels off
    the most mass into small-enough components, tie-breaking by the smallest
    resulting largest component."""
    n = H.n
    sep = 0
    while sep.bit_count() < limit:
        alive = ((1 << n) - 1) & ~sep
        comps = _components_masks(H._adj, alive)
        big = max(comps, key=lambda m: m.bit_count(), default=0)
        if big.bit_count() <= limit:
            break
        best = None  # (peeled, -worst, -v)
        for v in bits_of(big):
            sub = _components_masks(H._adj, big & ~(1 << v))
            peeled = sum(c.bit_count() for c in sub if c.bit_count() <= limit)
            worst = max((c.bit_count() for c in sub), default=0)
            score = (peeled, -worst, -v)
            if best is None or score > best[0]:
                best = (score, v)
        if best is None:
            break
        sep |= 1 << best[1]
    return sep


def _window_separator(H: SimpleGraph, limit: int, order: Sequence[int], cyclic: bool) -> int | None:
    """Cut bandwidth-wide windows along an ordering, spaced so chunks fit."""
    if H.e == 0:
        return 0
    n = H.n
    pos = [0] * n
    for i, v in enumerate(order):
        pos[v] = i
    if cyclic:
        b = max(min(abs(pos[u] - pos[v]), n - abs(pos[u] - pos[v])) for u, v in H.edges())
    else:
        b = max(abs(pos[u] - pos[v]) for u, v in H.edges())
    if b == 0 or b > limit:
        return None
    for chunk in range(limit, 0, -1):
        sep = 0
        p = 0 if cyclic else chunk
        count = 0
        while p < n:
            for i in range(p, min(p + b, n)):
                sep |= 1 << order[i]
                count += 1
            p += b + chunk
        if count <= limit:
            return sep
    return None


def _bfs_ordering(H: SimpleGraph) -> list[int]:
    order, seen = [], [False] * H.n
    for s in range(H.n):
        if seen[s]:
            continue
        queue = [s]
        seen[s] = True
        while queue:
            v = queue.pop(0)
            order.append(v)
            for w in sorted(bits_of(H._adj[v])):
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)
    return order


def separability_certificate(
    H: SimpleGraph,
    mu: float,
    supplied_separator: Iterable[int] | None = None,
) -> SeparabilityCertificate | NotCertified:
    """Search for a separator X with |X| <= mu*v(H) leaving components of at
    most mu*v(H) vertices.

    Strategies, in order: greedy peeling (remove the vertex of the largest
    component that splits off the most small components, tie-break by the
    smallest resulting largest component), then bandwidth-window cuts along
    the natural and BFS orderings, linear and cyclic.  Every candidate is
    re-validated by a component scan.  A user-supplied separator is validated
    instead of searched.  NotCertified is not a proof of non-separability.
    """
    if not 0 < mu <= 1:
        raise ValueError("mu must lie in (0, 1]")
    n = H.n
    limit = int(mu * n)  # both |X| and component sizes must be <= mu*v(H)
    from fractions import Fraction

    fr = Fraction(str(mu)).limit_denominator(10**6)

    def finish(sep_mask: int) -> SeparabilityCertificate | NotCertified:
        alive = ((1 << n) - 1) & ~sep_mask
        comps = _components_masks(H._adj, alive)
        if sep_mask.bit_count() > limit:
            return NotCertified(f"separator larger than {limit}")
        if any(c.bit_count() > limit for c in comps):
            return NotCertified(f"a component exceeds {limit} vertices")
        return SeparabilityCertificate(
            mu_num=fr.numerator,
            mu_den=fr.denominator,
            separator=tuple(sorted(bits_of(sep_mask))),
            components=tuple(
                tuple(sorted(bits_of(c))) for c in sorted(comps, key=lambda m: -m.bit_count())
            ),
        )

    if supplied_separator is not None:
        return finish(mask_of(supplied_separator))

    candidates: list[int] = [_greedy_peel_separator(H, limit)]
    orders = [list(range(n)), _bfs_ordering(H)]
    for order in orders:
        for cyclic in (False, True):
            w = _window_separator(H, limit, order, cyclic)
            if w is not None:
                candidates.append(w)
    for sep in candidates:
        cert = finish(sep)
        if isinstance(cert, SeparabilityCertificate):
            return cert
    return NotCertified("no strategy found a separator within budget")


# ---------------------------------------------------------------------------
# JSON instance formats


def collection_to_json(gc: GraphCollection) -> dict:
    d: dict = {
        "n": gc.n,
        "colours": list(gc.colour_names) if gc.colour_names else list(range(gc.n_colours)),
        "edges": {str(c): [list(e) for e in gc.edges(c)] for c in range(gc.n_colours)},
    }
    if gc.bipartition is not None:
        d["bipartition"] = {
            str(c): [sorted(bits_of(a)), sorted(bits_of(b))]
            for c, (a, b) in gc.bipartition.items()
        }
    return d


def collection_from_json(d: Mapping) -> GraphCollection:
    colours = d["colours"]
    names = [str(c) for c in colours]
    edges = {int(c): [tuple(e) for e in es] for c, es in d.get("edges", {}).items()}
    bip = None
    if "bipartition" in d and d["bipartition"]:
        bip = {int(c): (a, b) for c, (a, b) in d["bipartition"].items()}
    return GraphCollection(
        int(d["n"]), len(colours), edges, bipartition=bip, colour_names=names
    )


def pattern_to_json(H: PatternGraph) -> dict:
    d: dict = {"n": H.n, "edges": [list(e) for e in H.edges()]}
    if H.phi is not None:
        d["phi"] = list(H.phi)
    if H.targets:
        d["targets"] = {str(v): sorted(t) for v, t in H.targets.items()}
    return d


def pattern_from_json(d: Mapping) -> PatternGraph:
    return PatternGraph(
        int(d["n"]),
        [tuple(e) for e in d.get("edges", [])],
        phi=d.get("phi"),
        targets={int(v): t for v, t in d["targets"].items()} if d.get("targets") else None,
    )


def embedding_to_json(emb: TransversalEmbedding) -> dict:
    return {
        "tau": {str(v): int(w) for v, w in emb.tau.items()},
        "sigma": {f"{u},{v}": int(c) for (u, v), c in emb.sigma.items()},
    }


def embedding_from_json(d: Mapping) -> TransversalEmbedding:
    tau = {int(v): int(w) for v, w in d["tau"].items()}
    sigma = {}
    for key, c in d["sigma"].items():
        u, v = (int(x) for x in key.split(","))
        sigma[(u, v) if u < v else (v, u)] = int(c)
    return TransversalEmbedding(tau=tau, sigma=sigma)


def threegraph_to_json(g: ThreeGraph) -> dict:
    d: dict = {"n": g.n, "edges": [list(t) for t in sorted(g.edges)]}
    if g.parts is not None:
        d["parts"] = [list(p) for p in g.parts]
    return d


def threegraph_from_json(d: Mapping) -> ThreeGraph:
    return ThreeGraph(
        int(d["n"]), [tuple(t) for t in d.get("edges", [])], parts=d.get("parts")
    )
