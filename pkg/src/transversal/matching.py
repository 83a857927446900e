"""Maximum bipartite matching via augmenting paths (Kuhn's algorithm).

Left vertices are arbitrary hashables; right vertices are arbitrary
hashables.  Deterministic: neighbours are tried in the order given.
Instance sizes in this package are small (tens of vertices), so the
O(V*E) bound is never a concern.
"""

from __future__ import annotations

from typing import Hashable, Iterable, Mapping


def max_bipartite_matching(
    adj: Mapping[Hashable, Iterable[Hashable]],
) -> dict[Hashable, Hashable]:
    """Return a maximum matching as a left->right dict."""
    pair_left: dict = {}
    pair_right: dict = {}
    neigh = {u: list(vs) for u, vs in adj.items()}

    def try_augment(u, seen: set) -> bool:
        for v in neigh[u]:
            if v in seen:
                continue
            seen.add(v)
            if v not in pair_right or try_augment(pair_right[v], seen):
                pair_left[u] = v
                pair_right[v] = u
                return True
        return False

    for u in neigh:
        if u not in pair_left:
            try_augment(u, set())
    return pair_left


def perfect_matching(
    adj: Mapping[Hashable, Iterable[Hashable]],
) -> dict[Hashable, Hashable] | None:
    """Matching saturating every left vertex, or None if none exists."""
    m = max_bipartite_matching(adj)
    return m if len(m) == len(adj) else None
