"""Command-line surface: generate, plan, validate, reshard, and run oracles."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import generate, oracle
from .model import (
    FormatError,
    ReplicationScheme,
    ServerSet,
    format_rational,
    hash_shard,
    load_graph,
    load_scheme,
    load_servers,
    load_sharding,
    parse_rational,
    save_graph,
    save_scheme,
    save_servers,
    save_sharding,
)
from .oracle import BudgetError, ProblemInstance
from .planner import PlannerConfig, PlanReport, greedy_plan
from .reshard import MoveRejected, apply_reshard, load_moves, load_rmap, save_rmap
from .routing import ValidationReport, validate_workload
from .workload import QueryType, load_workload, save_workload

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_INFEASIBLE = 2

REPORT_VERSION = 1


def _frac(x: Fraction) -> dict:
    return {"exact": format_rational(x), "value": float(x)}


def plan_report_to_dict(report: PlanReport) -> dict:
    return {
        "version": REPORT_VERSION,
        "status": report.status,
        "failure": report.failure,
        "total_original_cost": _frac(report.total_original_cost),
        "total_added_cost": _frac(report.total_added_cost),
        "replication_overhead": _frac(report.replication_overhead),
        "per_server": {
            s: {
                "storage": _frac(ps.storage),
                "capacity": None if ps.capacity is None else _frac(ps.capacity),
                "share": _frac(ps.share),
            }
            for s, ps in report.per_server.items()
        },
        "imbalance": _frac(report.imbalance),
        "per_query": [
            {
                "name": q.name,
                "t": q.bound,
                "worst_latency": q.worst_latency,
                "path_count": q.path_count,
                "pruned_count": q.pruned_count,
            }
            for q in report.per_query
        ],
        "timing": report.timing,
    }


def validation_report_to_dict(report: ValidationReport) -> dict:
    return {
        "version": REPORT_VERSION,
        "ok": report.ok,
        "latency_ok": report.latency_ok,
        "balance_ok": report.balance_ok,
        "per_query": [
            {
                "name": q.name,
                "t": q.bound,
                "worst_latency": q.worst_latency,
                "path_count": q.path_count,
            }
            for q in report.per_query
        ],
        "violating_paths": [
            {"query": name, "nodes": list(nodes), "latency": lat}
            for name, nodes, lat in report.violating_paths
        ],
        "violating_path_total": report.violating_path_total,
        "storage": {s: _frac(x) for s, x in report.storage.items()},
        "imbalance": _frac(report.imbalance),
        "imbalance_bound": None
        if report.imbalance_bound is None
        else _frac(report.imbalance_bound),
        "capacity_violations": report.capacity_violations,
    }


def _parse_epsilon(text: str):
    if text == "inf":
        return None
    mode, _, value = text.partition(":")
    if mode not in ("abs", "rel") or not value:
        raise ValueError("epsilon must be 'inf', 'abs:<value>', or 'rel:<value>'")
    return (mode, parse_rational(value))


def _parse_t(tok: str) -> Optional[int]:
    return None if tok == "inf" else int(tok)


def _load_common(args) -> ProblemInstance:
    with open(args.graph) as f:
        graph = load_graph(f)
    with open(args.servers) as f:
        servers = load_servers(f)
    if getattr(args, "epsilon", None) is not None:
        servers.epsilon = _parse_epsilon(args.epsilon)
        servers.epsilon_given = True
    elif not servers.epsilon_given:
        # Default load-imbalance bound: 2% of the mean server load.
        servers.epsilon = ("rel", Fraction(2, 100))
    if args.shard:
        with open(args.shard) as f:
            sharding = load_sharding(f, graph, servers)
    else:
        sharding = hash_shard(graph, servers, args.hash_seed)
    workload = None
    if getattr(args, "workload", None):
        with open(args.workload) as f:
            workload = load_workload(f)
    return ProblemInstance(graph, servers, sharding, workload)


def _apply_t_override(workload, t):
    return [QueryType(q.name, q.root_label, q.steps, t) for q in workload]


def _add_input_args(p, need_workload=True):
    p.add_argument("--graph", required=True)
    p.add_argument("--servers", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--shard")
    group.add_argument("--hash-seed", type=int)
    p.add_argument("--workload", required=need_workload)
    p.add_argument("--epsilon", help="inf, abs:<value>, or rel:<value>")


def cmd_plan(args) -> int:
    inst = _load_common(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = PlannerConfig(
        two_pass=not args.single_pass,
        deterministic=args.deterministic,
        balance_check=args.balance_check,
        prune=not args.no_prune,
    )

    t_values = (
        [("", "keep")]
        if args.t_override is None
        else [(f"_t{tok}", _parse_t(tok)) for tok in args.t_override.split(",")]
    )
    sweep_rows = []
    worst_status = EXIT_OK
    for suffix, t in t_values:
        workload = (
            inst.workload if t == "keep" else _apply_t_override(inst.workload, t)
        )
        scheme, rmap, report = greedy_plan(
            inst.graph, workload, inst.sharding, inst.servers, config
        )
        with open(out / f"scheme{suffix}.txt", "w") as f:
            save_scheme(scheme, f)
        with open(out / f"rmap{suffix}.txt", "w") as f:
            save_rmap(rmap, f)
        with open(out / f"report{suffix}.json", "w") as f:
            json.dump(plan_report_to_dict(report), f, indent=2)
            f.write("\n")
        worst = max((q.worst_latency for q in report.per_query), default=0)
        label = "inf" if t is None else ("keep" if t == "keep" else t)
        sweep_rows.append((label, float(report.replication_overhead), worst))
        if report.status != "ok":
            worst_status = EXIT_INFEASIBLE
            print(f"no-solution-found: {report.failure}", file=sys.stderr)
    if args.csv or len(t_values) > 1:
        csv_path = Path(args.csv) if args.csv else out / "sweep.csv"
        with open(csv_path, "w") as f:
            f.write("t,overhead,worst_latency\n")
            for label, overhead, worst in sweep_rows:
                f.write(f"{label},{overhead},{worst}\n")
    return worst_status


def cmd_validate(args) -> int:
    inst = _load_common(args)
    with open(args.scheme) as f:
        scheme = load_scheme(f, inst.graph, inst.servers, inst.sharding)
    report = validate_workload(
        inst.graph, inst.workload, inst.sharding, scheme, inst.servers
    )
    json.dump(validation_report_to_dict(report), sys.stdout, indent=2)
    print()
    return EXIT_OK if report.ok else EXIT_INFEASIBLE


def cmd_reshard(args) -> int:
    inst = _load_common(args)
    with open(args.scheme) as f:
        scheme = load_scheme(f, inst.graph, inst.servers, inst.sharding)
    with open(args.rmap) as f:
        rmap = load_rmap(f)
    with open(args.moves) as f:
        moves = load_moves(f)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        apply_reshard(moves, inst.graph, inst.servers, scheme, rmap)
    except MoveRejected as e:
        print(f"reshard rejected: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    with open(out / "scheme.txt", "w") as f:
        save_scheme(scheme, f)
    with open(out / "shard.txt", "w") as f:
        save_sharding(scheme.sharding, f)
    with open(out / "rmap.txt", "w") as f:
        save_rmap(rmap, f)
    if inst.workload is not None:
        report = validate_workload(
            inst.graph, inst.workload, scheme.sharding, scheme, inst.servers
        )
        with open(out / "report.json", "w") as f:
            json.dump(validation_report_to_dict(report), f, indent=2)
            f.write("\n")
        if not report.latency_ok:
            print("post-reshard latency violations", file=sys.stderr)
            return EXIT_INFEASIBLE
    return EXIT_OK


def write_instance(inst: ProblemInstance, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "graph.txt", "w") as f:
        save_graph(inst.graph, f)
    with open(out / "servers.txt", "w") as f:
        save_servers(inst.servers, f)
    with open(out / "shard.txt", "w") as f:
        save_sharding(inst.sharding, f)
    with open(out / "workload.txt", "w") as f:
        save_workload(inst.workload, f)


def cmd_gen(args) -> int:
    out = Path(args.out_dir)
    if args.kind == "random":
        eps = _parse_epsilon(args.epsilon) if args.epsilon else None
        inst = generate.random_instance(
            vertices=args.vertices,
            servers=args.num_servers,
            seed=args.seed,
            hops=args.hops,
            queries=args.queries,
            epsilon=eps,
        )
        write_instance(inst, out)
    elif args.kind == "snb-toy":
        inst = generate.snb_toy_instance(
            persons=args.persons, servers=args.num_servers, seed=args.seed
        )
        write_instance(inst, out)
    elif args.kind == "bridge-reduction":
        g = _load_ugraph_arg(args)
        inst = generate.bridge_reduction_instance(g, args.k)
        write_instance(inst, out)
    elif args.kind == "triple-gadget":
        g = _load_ugraph_arg(args)
        h = oracle.triple_gadget(g)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "ugraph.txt", "w") as f:
            oracle.save_ugraph(h, f)
    else:
        raise AssertionError(args.kind)
    return EXIT_OK


def _load_ugraph_arg(args) -> oracle.UndirectedGraph:
    if args.cycle:
        return generate.cycle_graph(args.cycle)
    with open(args.ugraph) as f:
        return oracle.load_ugraph(f)


def cmd_oracle(args) -> int:
    if args.oracle_kind == "bisection":
        with open(args.ugraph) as f:
            g = oracle.load_ugraph(f)
        result = oracle.min_bridge_bisection_bf(g, args.k)
        if result is None:
            print("INFEASIBLE")
            return EXIT_INFEASIBLE
        print(" ".join(sorted(result.side1)))
        print(" ".join(sorted(result.side2)))
        return EXIT_OK

    inst = _load_common(args)
    t = "keep" if args.t_override is None else _parse_t(args.t_override)
    if args.free_root:
        workload = inst.workload if t == "keep" else _apply_t_override(inst.workload, t)
        feasible = oracle.feasible_bound_zero_free_root(
            ProblemInstance(inst.graph, inst.servers, inst.sharding, workload)
        )
        print("FEASIBLE" if feasible else "INFEASIBLE")
        return EXIT_OK if feasible else EXIT_INFEASIBLE

    result = oracle.brute_force_optimal(inst, t)
    if result is None:
        print("INFEASIBLE")
        return EXIT_INFEASIBLE
    scheme, cost = result
    if args.oracle_kind == "feasible":
        print("FEASIBLE")
    else:
        print(f"cost {format_rational(cost)}")
        added = cost - inst.graph.total_cost()
        print(f"added {format_rational(added)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="replan",
        description="Latency-bound replication planner, simulator, and oracles",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="compute a replication scheme")
    _add_input_args(p)
    p.add_argument("--t-override", help="bound for all queries; comma list sweeps")
    p.add_argument("--balance-check", choices=["per-candidate", "final-only"], default="per-candidate")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--single-pass", action="store_true")
    p.add_argument("--no-prune", action="store_true")
    p.add_argument("--csv")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("validate", help="check a scheme against the workload")
    _add_input_args(p)
    p.add_argument("--scheme", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("reshard", help="apply original-copy moves")
    _add_input_args(p, need_workload=False)
    p.add_argument("--scheme", required=True)
    p.add_argument("--rmap", required=True)
    p.add_argument("--moves", required=True)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_reshard)

    p = sub.add_parser("gen", help="generate instance files")
    p.add_argument("kind", choices=["random", "snb-toy", "bridge-reduction", "triple-gadget"])
    p.add_argument("--vertices", type=int, default=50)
    p.add_argument("--num-servers", type=int, default=4)
    p.add_argument("--persons", type=int, default=6)
    p.add_argument("--hops", type=int, default=2)
    p.add_argument("--queries", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon")
    p.add_argument("--ugraph", help="undirected graph input file")
    p.add_argument("--cycle", type=int, help="use a cycle graph of this size")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("oracle", help="brute-force ground truth")
    p.add_argument("oracle_kind", choices=["optimal", "feasible", "bisection"])
    p.add_argument("--graph")
    p.add_argument("--servers")
    p.add_argument("--shard")
    p.add_argument("--hash-seed", type=int)
    p.add_argument("--workload")
    p.add_argument("--epsilon")
    p.add_argument("--t-override")
    p.add_argument("--free-root", action="store_true")
    p.add_argument("--ugraph")
    p.add_argument("--k", type=int, default=0)
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, FileNotFoundError, BudgetError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
