"""Batch command-line front end.

Subcommands: generate, check, partition, embed, oracle, verify, bench.
Exit codes: 0 success/feasible, 1 verified-infeasible or typed pipeline
failure, 2 usage error.  Reports are JSON (bench also writes CSV); every
embed report embeds the verifier verdict, and reports are self-contained:
re-running `verify` on a report's embedding against the referenced instance
reproduces the stamp.  The default report directory comes from
TRANSVERSAL_REPORT_DIR (default: current directory).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time

from . import core, generators, oracle
from .core import (
    GraphCollection,
    ThreeGraph,
    collection_from_json,
    collection_to_json,
    embedding_from_json,
    embedding_to_json,
    pattern_from_json,
    pattern_to_json,
    threegraph_from_json,
    threegraph_to_json,
    verify_transversal_embedding,
)
from .embed import SplitPlan, expand_embed_3graph, quasi_embed
from .regularity import DensitySpec, partition_collection


def _digest(obj: dict) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


def _load(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _dump(obj: dict, path: str | None):
    if path:
        outdir = os.environ.get("TRANSVERSAL_REPORT_DIR", ".")
        full = path if os.path.isabs(path) or os.path.dirname(path) else os.path.join(outdir, path)
        with open(full, "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
    else:
        json.dump(obj, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")


def _plan_from(params: dict | None) -> SplitPlan:
    return SplitPlan(**params) if params else SplitPlan()


def _load_instance(path: str):
    d = _load(path)
    if "colours" in d:
        return collection_from_json(d), d
    return threegraph_from_json(d), d


# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    if args.construction == "random":
        gc = generators.random_collection(
            generators.GenSpec(
                n=args.n, n_colours=args.colours or args.n,
                density=args.density, seed=args.seed,
            )
        )
        doc = collection_to_json(gc)
    elif args.construction == "cyclic-triangle":
        gc = generators.cyclic_triangle_collection(args.n, seed=args.seed,
                                                   n_colours=args.colours)
        doc = collection_to_json(gc)
    elif args.construction == "mantel":
        gc = generators.mantel_extremal(args.n, n_colours=args.colours or 3)
        doc = collection_to_json(gc)
    elif args.construction == "parity":
        X = set(range(args.x_size or 0))
        g = generators.parity_threegraph(args.n, X, seed=args.seed)
        doc = threegraph_to_json(g)
    else:
        print(f"unknown construction {args.construction!r}", file=sys.stderr)
        return 2
    _dump(doc, args.out)
    return 0


def cmd_check(args) -> int:
    inst, doc = _load_instance(args.instance)
    report: dict = {"command": "check", "instance_digest": _digest(doc)}
    if args.mono_triangles:
        if not isinstance(inst, GraphCollection):
            print("mono-triangle check needs a collection instance", file=sys.stderr)
            return 2
        count = oracle.monochromatic_triangle_count(inst)
        report["monochromatic_triangles"] = count
    if args.three_density:
        if isinstance(inst, GraphCollection):
            import math

            pairs = math.comb(inst.n, 2)
            dens = inst.total_edge_count() / (pairs * inst.n_colours) if pairs else 0.0
        else:
            if inst.parts and len(inst.parts) == 3:
                p = inst.parts
                dens = inst.e / (len(p[0]) * len(p[1]) * len(p[2]))
            else:
                import math

                dens = inst.e / math.comb(inst.n, 3)
        report["density"] = dens
    _dump(report, args.out)
    return 0


def cmd_partition(args) -> int:
    inst, doc = _load_instance(args.instance)
    if not isinstance(inst, GraphCollection):
        print("partition needs a collection instance", file=sys.stderr)
        return 2
    spec = DensitySpec(d=args.d, epsilon=args.epsilon)
    t0 = time.monotonic()
    part = partition_collection(inst, spec, L0=args.l0, seed=args.seed)
    report = {
        "command": "partition",
        "instance_digest": _digest(doc),
        "seed": args.seed,
        "params": {"epsilon": args.epsilon, "d": args.d, "L0": args.l0},
        "timings": {"wall_ms": round((time.monotonic() - t0) * 1000, 1)},
        "outcome": {
            "converged": part.converged,
            "L": part.L,
            "M": part.M,
            "m": part.m,
            "rounds": part.rounds,
            "energy": list(part.energy_history),
            "properties": part.diagnostics["properties"],
        },
        "clusters": [list(c) for c in part.v_clusters],
        "colour_clusters": [list(c) for c in part.c_clusters],
        "exceptional": {
            "vertices": list(part.v_exceptional),
            "colours": list(part.c_exceptional),
        },
        "reduced": [
            {"colour_cluster": j, "edges": [list(e) for e in R.edges()]}
            for j, R in enumerate(part.reduced)
        ],
    }
    _dump(report, args.out)
    return 0 if part.converged else 1


def cmd_embed(args) -> int:
    params = _load(args.params) if args.params else None
    plan = _plan_from(params)
    pattern = pattern_from_json(_load(args.pattern))
    inst, doc = _load_instance(args.instance)
    t0 = time.monotonic()
    if args.pipeline == "quasi":
        if not isinstance(inst, GraphCollection):
            print("quasi needs a collection instance", file=sys.stderr)
            return 2
        out = quasi_embed(inst, pattern, plan, seed=args.seed)
        verified = bool(out.ok and verify_transversal_embedding(inst, pattern, out.embedding).ok)
        outcome = (
            {"status": "success", "embedding": embedding_to_json(out.embedding)}
            if out.ok
            else {"status": "failure", "stage": out.failure.stage,
                  "reason": out.failure.reason,
                  "diagnostics": {k: str(v) for k, v in out.failure.diagnostics.items()}}
        )
        stats = out.stats
    elif args.pipeline == "expand":
        if not isinstance(inst, ThreeGraph):
            print("expand needs a 3-graph instance", file=sys.stderr)
            return 2
        out = expand_embed_3graph(inst, pattern, plan, seed=args.seed)
        verified = out.ok  # structurally asserted inside
        outcome = (
            {
                "status": "success",
                "vertex_images": {str(k): v for k, v in out.vertex_images.items()},
                "edge_images": {f"{u},{v}": c for (u, v), c in out.edge_images.items()},
            }
            if out.ok
            else {"status": "failure", "stage": out.failure.stage,
                  "reason": out.failure.reason}
        )
        stats = out.stats
    else:
        print(f"unknown pipeline {args.pipeline!r}", file=sys.stderr)
        return 2
    report = {
        "command": "embed",
        "pipeline": args.pipeline,
        "instance_digest": _digest(doc),
        "pattern_digest": _digest(pattern_to_json(pattern)),
        "seed": args.seed,
        "params": params or {},
        "timings": {"wall_ms": round((time.monotonic() - t0) * 1000, 1)},
        "outcome": outcome,
        "verified": verified,
        "stats": {k: v for k, v in stats.items() if k != "pair_densities"},
    }
    _dump(report, args.out)
    return 0 if outcome["status"] == "success" else 1


def cmd_oracle(args) -> int:
    inst, doc = _load_instance(args.instance)
    pattern = pattern_from_json(_load(args.pattern))
    budget = oracle.SearchBudget(node_limit=args.node_limit)
    t0 = time.monotonic()
    if args.count:
        res = oracle.count_rainbow_copies(inst, pattern, budget)
        outcome = {"status": res.status, "count": res.count, "nodes": res.nodes,
                   "convention": res.convention}
        code = 0
    else:
        res = oracle.exact_transversal_embed(inst, pattern, budget=budget)
        outcome = {"status": res.status, "nodes": res.nodes}
        if res.feasible:
            outcome["embedding"] = embedding_to_json(res.embedding)
        code = 0 if res.feasible else 1
    report = {
        "command": "oracle",
        "instance_digest": _digest(doc),
        "pattern_digest": _digest(pattern_to_json(pattern)),
        "timings": {"wall_ms": round((time.monotonic() - t0) * 1000, 1)},
        "outcome": outcome,
    }
    _dump(report, args.out)
    return code


def cmd_verify(args) -> int:
    inst, doc = _load_instance(args.instance)
    pattern = pattern_from_json(_load(args.pattern))
    emb_doc = _load(args.embedding)
    if "outcome" in emb_doc:  # a full embed report
        emb_doc = emb_doc["outcome"]["embedding"]
    emb = embedding_from_json(emb_doc)
    rep = verify_transversal_embedding(inst, pattern, emb)
    report = {
        "command": "verify",
        "instance_digest": _digest(doc),
        "ok": rep.ok,
        "violations": list(rep.violations),
    }
    _dump(report, args.out)
    return 0 if rep.ok else 1


def _bench_one(run: dict, seed: int):
    kind = run["construction"].get("kind", "random")
    cparams = {k: v for k, v in run["construction"].items() if k != "kind"}
    plan = _plan_from(run.get("params"))
    pattern = pattern_from_json(run["pattern"])
    t0 = time.monotonic()
    if run["pipeline"] == "quasi":
        if kind == "random":
            gc = generators.random_collection(
                generators.GenSpec(seed=seed, **cparams)
            )
        elif kind == "cyclic-triangle":
            gc = generators.cyclic_triangle_collection(seed=seed, **cparams)
        elif kind == "mantel":
            gc = generators.mantel_extremal(**cparams)
        else:
            raise ValueError(f"unknown construction {kind!r}")
        out = quasi_embed(gc, pattern, plan, seed=seed)
        ok, stage, reason = out.ok, \
            (out.failure.stage if out.failure else ""), \
            (out.failure.reason if out.failure else "")
        attempts = out.stats.get("attempts", "")
    elif run["pipeline"] == "blowup":
        from .core import SimpleGraph
        from .embed import blowup_embed
        import random as _r

        n_side = cparams.get("n", 30)
        dens = cparams.get("density", 0.6)
        rng = _r.Random(seed)
        host = SimpleGraph(
            2 * n_side,
            [
                (u, v)
                for u in range(n_side)
                for v in range(n_side, 2 * n_side)
                if rng.random() < dens
            ],
        )
        R = SimpleGraph(2, [(0, 1)])
        phi = run.get("phi") or pattern.phi
        res = blowup_embed(
            host, [list(range(n_side)), list(range(n_side, 2 * n_side))],
            R, pattern, phi, None, plan, seed=seed,
        )
        ok, stage, reason = res.ok, \
            ("" if res.ok else res.failure.stage), \
            ("" if res.ok else res.failure.reason)
        attempts = res.restarts + 1
    else:
        raise ValueError(f"unknown pipeline {run['pipeline']!r}")
    wall = round((time.monotonic() - t0) * 1000, 1)
    return {
        "name": run.get("name", run["pipeline"]),
        "seed": seed,
        "success": int(ok),
        "stage": stage,
        "reason": reason,
        "attempts": attempts,
        "wall_ms": wall,
    }


def cmd_bench(args) -> int:
    suite = _load(args.suite)
    rows = []
    for run in suite.get("runs", []):
        for seed in run.get("seeds", [0]):
            rows.append(_bench_one(run, seed))
    rows.sort(key=lambda r: (r["name"], r["seed"]))
    fields = ["name", "seed", "success", "stage", "reason", "attempts", "wall_ms"]
    out = args.out or "bench.csv"
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow(r)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="transversal",
                                description="transversal embedding toolkit")
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("generate", help="generate an instance")
    g.add_argument("--construction", required=True,
                   choices=["random", "cyclic-triangle", "mantel", "parity"])
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--colours", type=int)
    g.add_argument("--density", type=float, default=0.5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--x-size", type=int, default=0, help="|X| for the parity construction")
    g.add_argument("--out")
    g.set_defaults(fn=cmd_generate)

    c = sub.add_parser("check", help="structural checks on an instance")
    c.add_argument("--instance", required=True)
    c.add_argument("--mono-triangles", action="store_true")
    c.add_argument("--three-density", action="store_true")
    c.add_argument("--out")
    c.set_defaults(fn=cmd_check)

    pa = sub.add_parser("partition", help="regularity partition of a collection")
    pa.add_argument("--instance", required=True)
    pa.add_argument("--epsilon", type=float, default=0.25)
    pa.add_argument("--d", type=float, default=0.3)
    pa.add_argument("--l0", type=int, default=3)
    pa.add_argument("--seed", type=int, default=0)
    pa.add_argument("--out")
    pa.set_defaults(fn=cmd_partition)

    e = sub.add_parser("embed", help="run an embedding pipeline")
    e.add_argument("--pipeline", required=True, choices=["quasi", "expand"])
    e.add_argument("--instance", required=True)
    e.add_argument("--pattern", required=True)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--params", help="JSON file with SplitPlan overrides")
    e.add_argument("--out")
    e.set_defaults(fn=cmd_embed)

    o = sub.add_parser("oracle", help="exact brute-force solve")
    o.add_argument("--instance", required=True)
    o.add_argument("--pattern", required=True)
    o.add_argument("--count", action="store_true")
    o.add_argument("--node-limit", type=int, default=2_000_000)
    o.add_argument("--out")
    o.set_defaults(fn=cmd_oracle)

    v = sub.add_parser("verify", help="verify an embedding against an instance")
    v.add_argument("--instance", required=True)
    v.add_argument("--pattern", required=True)
    v.add_argument("--embedding", required=True)
    v.add_argument("--out")
    v.set_defaults(fn=cmd_verify)

    b = sub.add_parser("bench", help="run a benchmark suite")
    b.add_argument("--suite", required=True)
    b.add_argument("--out")
    b.set_defaults(fn=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
