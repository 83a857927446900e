"""Weak-regularity machinery for graph collections and small hypergraphs.

Everything here treats a bipartite graph collection through its 3-graph view:
a triple (V1, V2, colours) is regular when every large sub-triple has density
close to the whole triple's density.  Exhaustive checking enumerates subsets
of the two smallest sides and handles the third side exactly by an extremal
argument (for fixed vertex subsets, the densest/sparsest colour subset of a
given size consists of the top/bottom colours by edge count), so "exhaustive"
results are proofs.  Beyond the enumeration limits a sampled mode draws
subset tuples of size exactly ceil(eps*|V_i|); a sampled witness is always
genuine, while NoneFound is only evidence.

Parameter bookkeeping is exact rational arithmetic via a ledger whose lineage
replays to the same values.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .core import GraphCollection, SimpleGraph, ThreeGraph, bits_of, mask_of


class EmptyPart(ValueError):
    """A density computation received an empty part."""


class RuleInapplicable(ValueError):
    """A ledger rule's mode prerequisites are not met."""


class PromiseViolated(RuntimeError):
    """A caller promise (e.g. half-superregularity) failed a post-hoc check."""


def frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(str(x))


MODES = ("regular", "semi-super", "super", "half-super", "uniformly-dense")


@dataclass(frozen=True)
class DensitySpec:
    """Target density d, uniform-density slack eta, tolerance eps, and mode."""

    d: float
    epsilon: float
    eta: float = 0.0
    mode: str = "regular"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")


# ---------------------------------------------------------------------------
# Layered views: every density object becomes (layer matrices over A x B)


def _collection_layers(gc: GraphCollection, A, B, CC):
    A, B, CC = list(A), list(B), list(CC)
    mats = np.zeros((len(CC), len(A), len(B)), dtype=np.int64)
    bmask = mask_of(B)
    bpos = {v: j for j, v in enumerate(B)}
    for l, c in enumerate(CC):
        for i, u in enumerate(A):
            m = gc.adj(c, u) & bmask
            for v in bits_of(m):
                mats[l, i, bpos[v]] = 1
    return mats


def _threegraph_layers(g: ThreeGraph, A, B, C):
    A, B, C = list(A), list(B), list(C)
    ai = {v: i for i, v in enumerate(A)}
    bi = {v: i for i, v in enumerate(B)}
    ci = {v: i for i, v in enumerate(C)}
    mats = np.zeros((len(C), len(A), len(B)), dtype=np.int64)
    for t in g.edges:
        for x, y, z in ((t[0], t[1], t[2]), (t[0], t[2], t[1]), (t[1], t[2], t[0])):
            for (u, v) in ((x, y), (y, x)):
                if u in ai and v in bi and z in ci:
                    mats[ci[z], ai[u], bi[v]] = 1
    return mats


def _pair_layers(g: SimpleGraph, A, B):
    # bipartite 2-graph: the B side plays the scored role, one column each
    A, B = list(A), list(B)
    mats = np.zeros((len(B), len(A), 1), dtype=np.int64)
    for j, v in enumerate(B):
        for i, u in enumerate(A):
            if g.has_edge(u, v):
                mats[j, i, 0] = 1
    return mats


def _layer_view(obj, parts):
    """Normalise (obj, parts) to (mats, part_sizes, kind).

    mats has shape (L, a, b): L scored layers over an a x b grid.  part_sizes
    is the tuple of input part sizes in input order, and ``axes`` names which
    input part landed on which engine axis ('a', 'b', 'layers').
    """
    parts = [list(p) for p in parts]
    if any(len(p) == 0 for p in parts):
        raise EmptyPart("all parts must be nonempty")
    if isinstance(obj, GraphCollection):
        # colours live in their own index space; only vertex parts share one
        if len(parts) != 3:
            raise ValueError("a collection view needs parts (V1, V2, colours)")
        if set(parts[0]) & set(parts[1]):
            raise ValueError("vertex parts must be disjoint")
        return _collection_layers(obj, *parts), ("a", "b", "layers")
    flat = [x for p in parts for x in p]
    if len(set(flat)) != len(flat):
        raise ValueError("parts must be pairwise disjoint")
    if isinstance(obj, ThreeGraph):
        if len(parts) != 3:
            raise ValueError("a 3-graph view needs three parts")
        # score the largest part; enumerate the two smallest
        order = sorted(range(3), key=lambda i: len(parts[i]))
        ia, ib, il = order[0], order[1], order[2]
        mats = _threegraph_layers(obj, parts[ia], parts[ib], parts[il])
        axes = [None, None, None]
        axes[ia], axes[ib], axes[il] = "a", "b", "layers"
        return mats, tuple(axes)
    if isinstance(obj, SimpleGraph):
        if len(parts) != 2:
            raise ValueError("a 2-graph view needs parts (V1, V2)")
        return _pair_layers(obj, *parts), ("a", "layers")
    raise TypeError(f"unsupported object {type(obj).__name__}")


def density(obj, parts: Sequence[Iterable[int]]) -> Fraction:
    """Exact density e(U_1,...,U_k) / prod |U_i| of the induced tuple.

    Parts must be nonempty and pairwise disjoint, with count matching the
    uniformity of ``obj`` (2 for a plain graph, 3 for collections/3-graphs).
    """
    mats, _ = _layer_view(obj, parts)
    total = int(mats.sum())
    vol = 1
    for p in parts:
        vol *= len(list(p))
    return Fraction(total, vol)


# ---------------------------------------------------------------------------
# Irregularity witnesses


@dataclass(frozen=True)
class IrregularityWitness:
    """Subsets (aligned with the input parts), exact observed and reference
    densities, and their deviation (observed - reference, a Fraction)."""

    subsets: tuple[tuple[int, ...], ...]
    observed: Fraction
    reference: Fraction
    deviation: Fraction


@dataclass(frozen=True)
class WitnessSearchResult:
    witness: IrregularityWitness | None
    exhaustive: bool
    proof: bool  # exhaustive and no witness: a proof of regularity
    samples: int = 0
    budget_exhausted: bool = False

    def __bool__(self):
        return self.witness is not None

    def miss_probability(self, per_draw: float) -> float:
        """Confidence companion for sampled NoneFound results: if witnessing
        tuples occurred with probability at least ``per_draw`` under the
        sampling distribution, the chance the whole budget missed them is at
        most this bound.  Zero for exhaustive runs."""
        if self.exhaustive:
            return 0.0
        if not 0 < per_draw <= 1:
            raise ValueError("per-draw probability must lie in (0,1]")
        return (1 - per_draw) ** self.samples


def _subset_rows(size: int, min_k: int) -> tuple[np.ndarray, np.ndarray]:
    masks = np.arange(1 << size, dtype=np.uint32)
    pop = np.zeros(1 << size, dtype=np.int64)
    for b in range(size):
        pop += (masks >> b) & 1
    keep = pop >= min_k
    rows = np.zeros((int(keep.sum()), size), dtype=np.int64)
    kept_masks = masks[keep]
    for b in range(size):
        rows[:, b] = (kept_masks >> b) & 1
    return rows, kept_masks


def _exhaustive_search(mats: np.ndarray, eps: float, mode: str, d: float, eta_abs: float):
    """Exact extremal scan.  Returns (best_candidates, reference) where each
    candidate is (a_mask, b_mask, k, 'top'|'bottom', float_density)."""
    L, a, b = mats.shape
    amin = max(1, math.ceil(eps * a))
    bmin = max(1, math.ceil(eps * b)) if b > 1 else 1
    kmin = max(1, math.ceil(eps * L))
    SA, amasks = _subset_rows(a, amin)
    SB, bmasks = _subset_rows(b, bmin)
    counts = np.empty((SA.shape[0], SB.shape[0], L), dtype=np.int64)
    for l in range(L):
        counts[:, :, l] = SA @ mats[l] @ SB.T
    sa = SA.sum(axis=1)
    sb = SB.sum(axis=1)
    total = int(mats.sum())
    ref = total / (a * b * L)
    srt = np.sort(counts, axis=2)
    cum = np.cumsum(srt, axis=2)
    totals = cum[:, :, -1]
    all_ks = np.arange(kmin, L + 1)
    # sweep the admissible layer-subset sizes in chunks that bound the
    # working tensor to a few tens of MB
    chunk = max(1, int(2e7 // max(1, cum.shape[0] * cum.shape[1])))
    best = {"top": None, "bottom": None}
    for start in range(0, len(all_ks), chunk):
        ks = all_ks[start : start + chunk]
        bot = cum[:, :, ks - 1]
        top = totals[:, :, None] - np.where(
            ks[None, None, :] < L, cum[:, :, L - ks - 1], 0
        )
        vol = sa[:, None, None] * sb[None, :, None] * ks[None, None, :]
        dens_top = top / vol
        dens_bot = bot / vol
        if mode == "two-sided":
            pairs = ((dens_top - ref, dens_top, "top"), (ref - dens_bot, dens_bot, "bottom"))
        else:  # one-sided lower bound: density >= d - eta_abs/vol
            thr = d - eta_abs / vol if eta_abs else d
            pairs = ((thr - dens_bot, dens_bot, "bottom"),)
        for arr, dens, side in pairs:
            mx = float(arr.max())
            if best[side] is None or mx > best[side][0]:
                idx = np.unravel_index(int(arr.argmax()), arr.shape)
                best[side] = (
                    mx,
                    (int(amasks[idx[0]]), int(bmasks[idx[1]]), int(ks[idx[2]]), side,
                     float(dens[idx])),
                )
    out = []
    if mode == "two-sided":
        for side in ("top", "bottom"):
            if best[side] is not None and best[side][0] >= eps - 1e-9:
                out.append(best[side][1])
    else:
        if best["bottom"] is not None and best["bottom"][0] > -1e-12:
            out.append(best["bottom"][1])
    return out, ref


def _materialise(mats, parts, axes, a_mask, b_mask, k, side):
    """Turn an engine candidate into concrete subsets in input-part order."""
    L = mats.shape[0]
    a_idx = [i for i in range(mats.shape[1]) if a_mask >> i & 1]
    b_idx = [i for i in range(mats.shape[2]) if b_mask >> i & 1] if "b" in axes else [0]
    per_layer = [int(mats[l][np.ix_(a_idx, b_idx)].sum()) for l in range(L)]
    order = sorted(range(L), key=lambda l: per_layer[l])
    layer_idx = order[:k] if side == "bottom" else order[-k:]
    chosen = {"a": a_idx, "b": b_idx, "layers": sorted(layer_idx)}
    subsets = []
    for part, ax in zip(parts, axes):
        part = list(part)
        subsets.append(tuple(part[i] for i in chosen[ax]))
    return tuple(subsets)


def irregularity_witness(
    obj,
    parts: Sequence[Iterable[int]],
    spec: DensitySpec,
    budget: int = 200,
    seed: int = 0,
    exhaustive_limit: int = 8,
    pair_limit: int = 12,
) -> WitnessSearchResult:
    """Search for a subset tuple violating the spec.

    Two-sided deviation for mode 'regular' (and the regular half of the super
    modes); one-sided lower-bound violation for 'half-super'/'uniformly-dense'.
    Exhaustive whenever the enumerated sides fit the limits (a proof);
    otherwise ``budget`` sampled tuples of size exactly ceil(eps*|V_i|).
    """
    parts = [list(p) for p in parts]
    mats, axes = _layer_view(obj, parts)
    one_sided = spec.mode in ("half-super", "uniformly-dense")
    n_total = sum(len(p) for p in parts)
    eta_abs = spec.eta * n_total**3 if (one_sided and spec.eta) else 0.0
    a, b = mats.shape[1], mats.shape[2]
    limit = pair_limit if b == 1 else exhaustive_limit
    if a <= limit and (b == 1 or b <= exhaustive_limit):
        cands, _ = _exhaustive_search(
            mats, spec.epsilon, "bottom" if one_sided else "two-sided", spec.d, eta_abs
        )
        ref = density(obj, parts)
        for (am, bm, k, side, _dens) in cands:
            subsets = _materialise(mats, parts, axes, am, bm, k, side)
            obs = density(obj, subsets)
            dev = obs - ref
            if one_sided:
                thr = frac(spec.d) - (
                    Fraction(str(eta_abs)).limit_denominator(10**9)
                    / math.prod(len(s) for s in subsets)
                    if eta_abs
                    else 0
                )
                if obs < thr:
                    return WitnessSearchResult(
                        IrregularityWitness(subsets, obs, ref, dev), True, False
                    )
            else:
                if abs(dev) >= frac(spec.epsilon):
                    return WitnessSearchResult(
                        IrregularityWitness(subsets, obs, ref, dev), True, False
                    )
        return WitnessSearchResult(None, True, True)
    # sampled mode
    rng = random.Random(seed)
    ref = density(obj, parts)
    sizes = [max(1, math.ceil(spec.epsilon * len(p))) for p in parts]
    for trial in range(budget):
        subsets = tuple(tuple(rng.sample(p, sizes[i])) for i, p in enumerate(parts))
        obs = density(obj, subsets)
        dev = obs - ref
        if one_sided:
            vol = math.prod(sizes)
            thr = frac(spec.d) - (
                Fraction(str(eta_abs)).limit_denominator(10**9) / vol if eta_abs else 0
            )
            hit = obs < thr
        else:
            hit = abs(dev) >= frac(spec.epsilon)
        if hit:
            return WitnessSearchResult(
                IrregularityWitness(subsets, obs, ref, dev),
                exhaustive=False,
                proof=False,
                samples=trial + 1,
            )
    return WitnessSearchResult(
        None, exhaustive=False, proof=False, samples=budget, budget_exhausted=True
    )


# ---------------------------------------------------------------------------
# Collection classification (regular / semi-super / super / half-super)


@dataclass(frozen=True)
class ClassificationReport:
    mode: str
    ok: bool
    density: Fraction
    witness: IrregularityWitness | None
    stamp: str  # 'exhaustive' or 'sampled'
    vertex_failures: tuple[tuple[int, int, int, float], ...]  # (side, v, value, threshold)
    colour_failures: tuple[tuple[int, int, float], ...]  # (c, value, threshold)
    details: dict = field(default_factory=dict, compare=False)


def _degree_floors(gc: GraphCollection, V1, V2, d: float, colours=None):
    colours = list(colours) if colours is not None else list(range(gc.n_colours))
    sides = (list(V1), list(V2))
    masks = (mask_of(sides[0]), mask_of(sides[1]))
    vfail = []
    for i, side in enumerate(sides):
        other = masks[1 - i]
        need = d * len(sides[1 - i]) * len(colours)
        for v in side:
            tot = sum((gc.adj(c, v) & other).bit_count() for c in colours)
            if tot < need:
                vfail.append((i + 1, v, tot, need))
    return tuple(vfail)


def _colour_floors(gc: GraphCollection, V1, V2, d: float, colours=None):
    colours = list(colours) if colours is not None else list(range(gc.n_colours))
    m1, m2 = mask_of(V1), mask_of(V2)
    need = d * len(list(V1)) * len(list(V2))
    cfail = []
    for c in colours:
        cnt = sum((gc.adj(c, v) & m2).bit_count() for v in V1)
        if cnt < need:
            cfail.append((c, cnt, need))
    return tuple(cfail)


def classify_collection(
    gc: GraphCollection,
    V1: Iterable[int],
    V2: Iterable[int],
    spec: DensitySpec,
    budget: int = 200,
    seed: int = 0,
    colours: Iterable[int] | None = None,
) -> ClassificationReport:
    """Check the declared class of the collection over (V1, V2).

    regular: the 3-graph view is (eps,d)-regular; semi-super adds the vertex
    total-degree floor; super adds the per-colour edge floor; half-super
    checks the one-sided subset bound plus both floors.  Failures are report
    entries, never faults.
    """
    V1, V2 = list(V1), list(V2)
    colours = list(colours) if colours is not None else list(range(gc.n_colours))
    dens = density(gc, (V1, V2, colours))
    wanted = spec.mode
    one_sided = wanted == "half-super"
    wspec = replace(spec, mode="half-super" if one_sided else "regular")
    res = irregularity_witness(gc, (V1, V2, colours), wspec, budget=budget, seed=seed)
    reg_ok = res.witness is None and (one_sided or dens >= frac(spec.d))
    vfail: tuple = ()
    cfail: tuple = ()
    if wanted in ("semi-super", "super", "half-super"):
        vfail = _degree_floors(gc, V1, V2, spec.d, colours)
    if wanted in ("super", "half-super"):
        cfail = _colour_floors(gc, V1, V2, spec.d, colours)
    ok = reg_ok and not vfail and not cfail
    return ClassificationReport(
        mode=wanted,
        ok=ok,
        density=dens,
        witness=res.witness,
        stamp="exhaustive" if res.exhaustive else "sampled",
        vertex_failures=vfail,
        colour_failures=cfail,
        details={"proof": res.proof, "samples": res.samples},
    )


@dataclass(frozen=True)
class TypicalElements:
    """Exactly the atypical vertices per side and atypical colours, counted
    against the (d-eps) floors."""

    atypical_vertices: tuple[tuple[int, ...], tuple[int, ...]]
    atypical_colours: tuple[int, ...]
    vertex_threshold: tuple[float, float]
    colour_threshold: float
    regularity_spot_check: bool | None = None


def typical_elements(
    gc: GraphCollection,
    V1: Iterable[int],
    V2: Iterable[int],
    spec: DensitySpec,
    spot_check: bool = True,
) -> TypicalElements:
    """Vertices with total degree below (d-eps)|V_other||C| and colours with
    fewer than (d-eps)|V1||V2| edges, by exact counting."""
    V1, V2 = list(V1), list(V2)
    colours = list(range(gc.n_colours))
    d_eps = spec.d - spec.epsilon
    out_v = []
    thr = (d_eps * len(V2) * len(colours), d_eps * len(V1) * len(colours))
    for i, (side, other) in enumerate(((V1, V2), (V2, V1))):
        om = mask_of(other)
        bad = tuple(
            v
            for v in side
            if sum((gc.adj(c, v) & om).bit_count() for c in colours) < thr[i]
        )
        out_v.append(bad)
    m2 = mask_of(V2)
    cthr = d_eps * len(V1) * len(V2)
    bad_c = tuple(
        c
        for c in colours
        if sum((gc.adj(c, v) & m2).bit_count() for v in V1) < cthr
    )
    spot = None
    if spot_check:
        res = irregularity_witness(gc, (V1, V2, colours), replace(spec, mode="regular"),
                                   budget=40, seed=0)
        spot = res.witness is None
    return TypicalElements(
        atypical_vertices=(out_v[0], out_v[1]),
        atypical_colours=bad_c,
        vertex_threshold=thr,
        colour_threshold=cthr,
        regularity_spot_check=spot,
    )


# ---------------------------------------------------------------------------
# Parameter ledger


@dataclass(frozen=True)
class LineageEntry:
    rule: str
    args: tuple
    params: tuple  # (m, eps, d, delta) after the step
    mode: str | None


@dataclass(frozen=True)
class ParameterLedger:
    """Exact (m, eps, d, delta) with the lineage of transformations applied."""

    m: Fraction
    eps: Fraction
    d: Fraction
    delta: Fraction
    mode: str | None = None
    initial: tuple = ()
    lineage: tuple[LineageEntry, ...] = ()

    @property
    def params(self) -> tuple:
        return (self.m, self.eps, self.d, self.delta)


def make_ledger(m, eps, d, delta, mode: str | None = None) -> ParameterLedger:
    m, eps, d, delta = frac(m), frac(eps), frac(d), frac(delta)
    return ParameterLedger(m, eps, d, delta, mode, initial=(m, eps, d, delta, mode))


def _apply_rule(
    m: Fraction, eps: Fraction, d: Fraction, delta: Fraction, mode, rule: str, args: dict
):
    alpha = frac(args["alpha"]) if args.get("alpha") is not None else None
    k = frac(args.get("k", 1))
    eps_prime = frac(args["eps_prime"]) if args.get("eps_prime") is not None else None
    if rule == "proportional-slice":
        return (m, eps / alpha, d / 2, delta), "regular"
    if rule == "near-spanning-slice":
        if mode != "super":
            raise RuleInapplicable("near-spanning-slice preserves super; input must be super")
        return (m, 2 * eps, d / 2, delta), "super"
    if rule == "random-slice":
        if mode != "super":
            raise RuleInapplicable("random-slice requires a super input")
        return (m, eps / alpha, d * d / 16, delta), "super"
    if rule == "sparsify":
        if mode != "half-super":
            raise RuleInapplicable("sparsify turns half-super into super")
        return (m, eps_prime, d * d / 2, delta), "super"
    if rule == "template-i":
        return (alpha * m, eps / alpha, d / 2, delta / k), "regular"
    if rule == "template-ii":
        return (m / 2, 2 * eps, d / 2, delta / 2), mode
    if rule == "template-iii":
        if mode != "super":
            raise RuleInapplicable("random template slicing requires a super template")
        return (alpha * m, eps / alpha, d * d / 16, delta / k), "super"
    if rule == "template-iv":
        if mode != "half-super":
            raise RuleInapplicable("template sparsification requires a half-super template")
        return (m, eps_prime, d * d / 2, delta), "super"
    raise RuleInapplicable(f"unknown rule {rule!r}")


def ledger_slice(
    ledger: ParameterLedger,
    rule: str,
    alpha=None,
    k=1,
    eps_prime=None,
) -> ParameterLedger:
    """Apply one closed-form transformation and append it to the lineage.

    Rules: proportional-slice(alpha) -> (eps/alpha, d/2); near-spanning-slice
    -> (2*eps, d/2) super-preserving; random-slice(alpha) -> (eps/alpha,
    d^2/16) super-preserving; sparsify(eps') -> (eps', d^2/2); and the four
    template cases 'template-i'..'template-iv'.
    """
    args = {"alpha": alpha, "k": k, "eps_prime": eps_prime}
    (m, eps, d, delta), mode = _apply_rule(
        ledger.m, ledger.eps, ledger.d, ledger.delta, ledger.mode, rule, args
    )
    norm = (
        frac(alpha) if alpha is not None else None,
        frac(k),
        frac(eps_prime) if eps_prime is not None else None,
    )
    entry = LineageEntry(rule, norm, (m, eps, d, delta), mode)
    return ParameterLedger(
        m, eps, d, delta, mode, initial=ledger.initial, lineage=ledger.lineage + (entry,)
    )


def replay_lineage(ledger: ParameterLedger) -> bool:
    """Re-apply the lineage from the initial parameters; True iff it lands on
    the ledger's current parameters exactly."""
    if not ledger.initial:
        return not ledger.lineage
    m, eps, d, delta, mode = ledger.initial
    for entry in ledger.lineage:
        alpha, k, eps_prime = entry.args
        (m, eps, d, delta), mode = _apply_rule(
            m, eps, d, delta, mode, entry.rule,
            {"alpha": alpha, "k": k, "eps_prime": eps_prime},
        )
        if (m, eps, d, delta) != entry.params:
            return False
    return (m, eps, d, delta) == ledger.params and mode == ledger.mode


# ---------------------------------------------------------------------------
# Half-super -> super sparsification (random equalisation on a refined grid)


def _part_chunks(part: list[int], chunks: int, rng: random.Random) -> list[list[int]]:
    part = part[:]
    rng.shuffle(part)
    q = max(1, min(chunks, len(part)))
    size = len(part) // q
    extra = len(part) % q
    out, pos = [], 0
    for i in range(q):
        s = size + (1 if i < extra else 0)
        out.append(part[pos : pos + s])
        pos += s
    return [c for c in out if c]


def _sparsify_tuples(
    edges: Iterable[tuple],
    parts: Sequence[Sequence[int]],
    d: float | None,
    rng: random.Random,
    chunks: int,
):
    parts = [list(p) for p in parts]
    chunk_lists = [_part_chunks(p, chunks, rng) for p in parts]
    chunk_of = []
    for plist in chunk_lists:
        d_map = {}
        for ci, ch in enumerate(plist):
            for v in ch:
                d_map[v] = ci
        chunk_of.append(d_map)
    part_of = {}
    for pi, p in enumerate(parts):
        for v in p:
            part_of[v] = pi
    cells: dict[tuple, list] = {}
    for e in edges:
        key_items = sorted((part_of[v], chunk_of[part_of[v]][v]) for v in e)
        key = tuple(key_items)
        cells.setdefault(key, []).append(e)
    densities = []
    for key, cell_edges in cells.items():
        vol = 1
        for (pi, ci) in key:
            vol *= len(chunk_lists[pi][ci])
        densities.append(len(cell_edges) / vol)
    if d is None:
        # auto target: equalise down to the sparsest populated cell, but not
        # below 0.6 of the mean (an empty cell would otherwise wipe the graph)
        if not densities or not any(densities):
            return list(edges), 0.0
        mean = sum(densities) / len(densities)
        nonzero = [x for x in densities if x > 0]
        d = max(min(nonzero), 0.6 * mean)
    kept = []
    for key, cell_edges in sorted(cells.items()):
        vol = 1
        for (pi, ci) in key:
            vol *= len(chunk_lists[pi][ci])
        dens = len(cell_edges) / vol
        if dens <= d or dens == 0:
            kept.extend(cell_edges)
            continue
        p_keep = d / dens
        for e in sorted(cell_edges):
            if rng.random() < p_keep:
                kept.append(e)
    return kept, d


def sparsify_to_superregular(
    g,
    parts: Sequence[Sequence[int]],
    eps: float,
    eps_prime: float,
    d: float | None,
    seed: int = 0,
    chunks: int = 2,
    retries: int = 20,
):
    """Spanning subhypergraph equalising cell densities down to d.

    Refines each part into chunks, then in each refined cell of density d'
    > d deletes edges independently with probability 1 - d/d'.  With d=None
    the target is derived from the cells themselves (the sparsest populated
    cell, floored at 0.6 of the mean).  The output is re-checked by degree
    counting against the (eps', d^2/2)-superregular floor; the construction
    is retried with derived seeds and raises :class:`PromiseViolated` when
    every retry fails.  Never adds edges.
    """
    if isinstance(g, ThreeGraph):
        edges = [tuple(sorted(t)) for t in g.edges]
        k = 3
    elif isinstance(g, SimpleGraph):
        edges = list(g.edges())
        k = 2
    else:
        raise TypeError("sparsify expects a ThreeGraph or a bipartite SimpleGraph")
    parts = [list(p) for p in parts]
    if len(parts) != k:
        raise ValueError(f"expected {k} parts")
    vol_all = math.prod(len(p) for p in parts)
    last = None
    for attempt in range(max(1, retries)):
        rng = random.Random((seed * 1_000_003 + attempt) & 0x7FFFFFFF)
        kept, d_used = _sparsify_tuples(edges, parts, d, rng, chunks)
        floor_target = d_used * d_used / 2
        deg: dict[int, int] = {}
        for e in kept:
            for v in e:
                deg[v] = deg.get(v, 0) + 1
        ok = True
        for pi, p in enumerate(parts):
            need = floor_target * vol_all / len(p)
            for v in p:
                if deg.get(v, 0) < need:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            if k == 3:
                return ThreeGraph(g.n, kept, parts=g.parts)
            return SimpleGraph(g.n, kept)
        last = f"degree floor {floor_target:.4f} violated on attempt {attempt}"
    raise PromiseViolated(
        f"sparsification never met the superregular degree floor after {retries} retries: {last}"
    )


# ---------------------------------------------------------------------------
# Regularity lemma for collections


@dataclass
class RegularityPartition:
    v_clusters: tuple[tuple[int, ...], ...]
    v_exceptional: tuple[int, ...]
    c_clusters: tuple[tuple[int, ...], ...]
    c_exceptional: tuple[int, ...]
    m: int
    pruned: GraphCollection
    reduced: tuple[SimpleGraph, ...]
    converged: bool
    rounds: int
    energy_history: tuple[float, ...]
    diagnostics: dict

    @property
    def L(self) -> int:
        return len(self.v_clusters)

    @property
    def M(self) -> int:
        return len(self.c_clusters)


def _energy(gc: GraphCollection, v_clusters, c_clusters) -> float:
    """Mean-square density index over ordered cluster pairs (incl. diagonal)
    and colour clusters, normalised by n^2 * |C|; non-decreasing under
    refinement."""
    n, K = gc.n, gc.n_colours
    if n == 0 or K == 0:
        return 0.0
    masks = [mask_of(cl) for cl in v_clusters]
    total = 0.0
    for hi, Vh in enumerate(v_clusters):
        for ii, mi in enumerate(masks):
            size_prod = len(Vh) * len(v_clusters[ii])
            if size_prod == 0:
                continue
            for Cj in c_clusters:
                cnt = 0
                for c in Cj:
                    for x in Vh:
                        cnt += (gc.adj(c, x) & mi).bit_count()
                if cnt:
                    dens = cnt / (size_prod * len(Cj))
                    total += size_prod * len(Cj) * dens * dens
    return total / (n * n * K)


def _triple_regular(gc, Vh, Vi, Cj, eps, d, budget, seed):
    spec = DensitySpec(d=d, epsilon=eps, mode="regular")
    res = irregularity_witness(gc, (Vh, Vi, Cj), spec, budget=budget, seed=seed)
    dens = density(gc, (Vh, Vi, Cj))
    return res, dens


def partition_collection(
    gc: GraphCollection,
    spec: DensitySpec,
    L0: int,
    seed: int = 0,
    sample_budget: int = 80,
    max_rounds: int | None = None,
    max_clusters: int = 48,
) -> RegularityPartition:
    """Witness-driven refinement plus the standard cleanup.

    Refines by intersecting clusters with witness subsets until no witness is
    found or the round cap ceil(eps^-3) is hit, then chops clusters into
    equal chunks of a common size m (vertex and colour clusters alike),
    absorbs remainders into the exceptional sets, prunes each retained colour
    graph (intra-cluster edges removed, irregular or sparse triples emptied)
    and attaches the reduced collection.  Non-convergence is reported in the
    result, never raised.
    """
    rng = random.Random(seed)
    n, K = gc.n, gc.n_colours
    eps, d = spec.epsilon, spec.d
    if max_rounds is None:
        max_rounds = min(60, math.ceil(eps**-3) if eps > 0 else 60)
    m0 = max(1, n // max(1, L0))
    verts = list(range(n))
    rng.shuffle(verts)
    nv = (n // m0) * m0
    v_clusters = [verts[i : i + m0] for i in range(0, nv, m0)]
    v0 = verts[nv:]
    cols = list(range(K))
    rng.shuffle(cols)
    nc = (K // m0) * m0
    c_clusters = [cols[i : i + m0] for i in range(0, nc, m0)]
    c0 = cols[nc:]
    if not v_clusters or not c_clusters:
        v_clusters, v0 = [verts], []
        c_clusters, c0 = [cols], []

    energies = [_energy(gc, v_clusters, c_clusters)]
    converged_refine = False
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        splits_v: dict[int, list[set]] = {}
        splits_c: dict[int, list[set]] = {}
        found = 0
        for h in range(len(v_clusters)):
            for i in range(h + 1, len(v_clusters)):
                for j in range(len(c_clusters)):
                    res, dens = _triple_regular(
                        gc, v_clusters[h], v_clusters[i], c_clusters[j],
                        eps, d, sample_budget, seed + 31 * rounds,
                    )
                    if res.witness is None:
                        continue
                    found += 1
                    sh, si, sj = res.witness.subsets
                    splits_v.setdefault(h, []).append(set(sh))
                    splits_v.setdefault(i, []).append(set(si))
                    splits_c.setdefault(j, []).append(set(sj))
        if not found:
            converged_refine = True
            rounds -= 1
            break
        if len(v_clusters) + len(c_clusters) >= max_clusters:
            break

        def refine(clusters, splits):
            out = []
            for idx, cl in enumerate(clusters):
                subs = splits.get(idx, [])[:1]  # one split per cluster per round
                if not subs:
                    out.append(cl)
                    continue
                groups: dict[tuple, list] = {}
                for v in cl:
                    sig = tuple(v in s for s in subs)
                    groups.setdefault(sig, []).append(v)
                out.extend(groups.values())
            return out

        v_clusters = refine(v_clusters, splits_v)
        c_clusters = refine(c_clusters, splits_c)
        energies.append(_energy(gc, v_clusters, c_clusters))

    # --- cleanup: common cluster size, exceptional absorption
    # largest common chunk size whose remainder waste fits the exceptional
    # budget eps*n; if none fits, the waste-minimising size (ties -> larger m)
    sizes = [len(c) for c in v_clusters] + [len(c) for c in c_clusters]
    budget_exc = max(eps * n, 0)
    m = 1
    best_waste = None
    for m_cand in range(max(sizes), 0, -1):
        waste = len(v0) + len(c0) + sum(s % m_cand for s in sizes)
        if waste <= budget_exc:
            m = m_cand
            best_waste = waste
            break
        if best_waste is None or waste < best_waste:
            m, best_waste = m_cand, waste

    def chop(clusters, exceptional):
        chunks, exc = [], list(exceptional)
        for cl in clusters:
            cl = sorted(cl)
            for i in range(0, len(cl) - len(cl) % m, m):
                chunks.append(tuple(cl[i : i + m]))
            exc.extend(cl[len(cl) - len(cl) % m :])
        return chunks, tuple(sorted(exc))

    v_final, v0_final = chop(v_clusters, v0)
    c_final, c0_final = chop(c_clusters, c0)
    L, M = len(v_final), len(c_final)

    cluster_of = [-1] * n
    for ci, cl in enumerate(v_final):
        for v in cl:
            cluster_of[v] = ci
    colour_cluster_of = [-1] * K
    for cj, cl in enumerate(c_final):
        for c in cl:
            colour_cluster_of[c] = cj

    # prune: start from G_c, remove intra-cluster edges for retained colours
    pruned_edges: dict[int, list[tuple[int, int]]] = {c: [] for c in range(K)}
    for c in range(K):
        keep_all = colour_cluster_of[c] == -1
        for (u, v) in gc.edges(c):
            cu, cv = cluster_of[u], cluster_of[v]
            if keep_all or cu == -1 or cv == -1 or cu != cv:
                pruned_edges[c].append((u, v))

    # per-triple regularity: empty failing slices
    triple_pass: dict[tuple[int, int, int], bool] = {}
    stamps = {"exhaustive": 0, "sampled": 0}
    for h in range(L):
        for i in range(h + 1, L):
            mi, mh = mask_of(v_final[i]), mask_of(v_final[h])
            for j in range(M):
                res, dens = _triple_regular(
                    gc, v_final[h], v_final[i], c_final[j], eps, d,
                    sample_budget, seed + 977,
                )
                ok = res.witness is None and dens >= frac(str(d))
                stamps["exhaustive" if res.exhaustive else "sampled"] += 1
                triple_pass[(h, i, j)] = ok
                if not ok:
                    for c in c_final[j]:
                        pruned_edges[c] = [
                            (u, v)
                            for (u, v) in pruned_edges[c]
                            if not (
                                (mh >> u & 1 and mi >> v & 1)
                                or (mi >> u & 1 and mh >> v & 1)
                            )
                        ]
    pruned = GraphCollection(n, K, pruned_edges)
    reduced = tuple(
        SimpleGraph(L, [(h, i) for (h, i, jj), ok in triple_pass.items() if jj == j and ok])
        for j in range(M)
    )

    # --- the five structural properties as literal checks
    delta_measured = min(K / n, n / K) if n and K else 1.0
    loss_bound = (3 * d / delta_measured**2 + eps) * n * n
    prop_i = len(v0_final) + len(c0_final) <= eps * n
    prop_ii = all(len(cl) == m for cl in v_final) and all(len(cl) == m for cl in c_final)
    prop_iii = all(
        gc.total_degree(v) - pruned.total_degree(v) < loss_bound for v in range(n)
    ) and all(
        gc.edge_count(c) - pruned.edge_count(c) < loss_bound for c in range(K)
    )
    prop_iv = True
    for c in range(K):
        if colour_cluster_of[c] == -1:
            continue
        for (u, v) in pruned.edges(c):
            if cluster_of[u] != -1 and cluster_of[u] == cluster_of[v]:
                prop_iv = False
    prop_v = True
    for (h, i, j), ok in triple_pass.items():
        if not ok:
            mh, mi = mask_of(v_final[h]), mask_of(v_final[i])
            for c in c_final[j]:
                for (u, v) in pruned.edges(c):
                    if (mh >> u & 1 and mi >> v & 1) or (mi >> u & 1 and mh >> v & 1):
                        prop_v = False

    converged = converged_refine and prop_i and prop_iii
    diagnostics = {
        "refinement_converged": converged_refine,
        "properties": {
            "exceptional_bound": prop_i,
            "equal_sizes": prop_ii,
            "degree_loss": prop_iii,
            "intra_cluster_exile": prop_iv,
            "regular_or_empty": prop_v,
        },
        "delta_measured": delta_measured,
        "loss_bound": loss_bound,
        "triple_stamps": stamps,
        "reason": None if converged else "DidNotConverge",
    }
    return RegularityPartition(
        v_clusters=tuple(tuple(sorted(c)) for c in v_final),
        v_exceptional=v0_final,
        c_clusters=tuple(tuple(sorted(c)) for c in c_final),
        c_exceptional=c0_final,
        m=m,
        pruned=pruned,
        reduced=reduced,
        converged=converged,
        rounds=rounds,
        energy_history=tuple(energies),
        diagnostics=diagnostics,
    )


# ---------------------------------------------------------------------------
# Degree inheritance (reduced-collection degrees)


@dataclass(frozen=True)
class DegreeInheritanceReport:
    precondition_failures: tuple[tuple[int, int, float], ...]  # (c, min deg, need)
    per_cluster_counts: tuple[int, ...]  # good colours per vertex cluster
    per_colour_counts: tuple[int, ...]  # good clusters per colour cluster
    cluster_threshold: float  # (1-d^(1/4)) M
    colour_threshold: float  # (1-d^(1/4)) L
    degree_floor: float  # (p + gamma/2) L
    clusters_ok: bool
    colours_ok: bool


def degree_inheritance_report(
    gc: GraphCollection,
    partition: RegularityPartition,
    p: float,
    gamma: float,
    d: float | None = None,
) -> DegreeInheritanceReport:
    """Count reduced degrees against the (p + gamma/2) L floor and report how
    many clusters/colours clear the (1 - d^(1/4)) thresholds."""
    n = gc.n
    need = (p + gamma) * n
    pre = []
    for c in range(gc.n_colours):
        mind = min(gc.degree(c, v) for v in range(n)) if n else 0
        if mind < need:
            pre.append((c, mind, need))
    L, M = partition.L, partition.M
    if d is None:
        d = 0.0
    floor = (p + gamma / 2) * L
    per_cluster = []
    for i in range(L):
        good = sum(1 for R in partition.reduced if R.degree(i) >= floor)
        per_cluster.append(good)
    per_colour = []
    for R in partition.reduced:
        good = sum(1 for i in range(L) if R.degree(i) >= floor)
        per_colour.append(good)
    cthr = (1 - d ** 0.25) * M
    lthr = (1 - d ** 0.25) * L
    return DegreeInheritanceReport(
        precondition_failures=tuple(pre),
        per_cluster_counts=tuple(per_cluster),
        per_colour_counts=tuple(per_colour),
        cluster_threshold=cthr,
        colour_threshold=lthr,
        degree_floor=floor,
        clusters_ok=all(g >= cthr for g in per_cluster),
        colours_ok=all(g >= lthr for g in per_colour),
    )
