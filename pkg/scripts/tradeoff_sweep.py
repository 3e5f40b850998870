#!/usr/bin/env python3
"""Sweep the latency bound on a generated instance and tabulate the
storage-overhead / latency tradeoff.

Usage:
    python3 scripts/tradeoff_sweep.py --kind snb-toy --out sweep.csv
    python3 scripts/tradeoff_sweep.py --kind random --vertices 120 --servers 4
"""

import argparse
import sys

from replan.generate import random_instance, snb_toy_instance
from replan.planner import greedy_plan
from replan.workload import QueryType


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kind", choices=["snb-toy", "random"], default="snb-toy")
    ap.add_argument("--vertices", type=int, default=100)
    ap.add_argument("--servers", type=int, default=4)
    ap.add_argument("--persons", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--bounds", default="0,1,2,3,inf",
                    help="comma-separated latency bounds to sweep")
    ap.add_argument("--out", help="also write the table as CSV")
    args = ap.parse_args()

    if args.kind == "snb-toy":
        inst = snb_toy_instance(persons=args.persons, servers=args.servers, seed=args.seed)
    else:
        inst = random_instance(args.vertices, args.servers, seed=args.seed, queries=3)

    rows = []
    for tok in args.bounds.split(","):
        t = None if tok == "inf" else int(tok)
        workload = [QueryType(q.name, q.root_label, q.steps, t) for q in inst.workload]
        _, _, report = greedy_plan(inst.graph, workload, inst.sharding, inst.servers)
        worst = max((q.worst_latency for q in report.per_query), default=0)
        rows.append((tok, report.status, float(report.replication_overhead), worst,
                     report.timing["plan"]))

    print(f"{'t':>5} {'status':>18} {'overhead':>10} {'worst':>6} {'plan_s':>8}")
    for tok, status, overhead, worst, secs in rows:
        print(f"{tok:>5} {status:>18} {overhead:>10.4f} {worst:>6} {secs:>8.3f}")

    if args.out:
        with open(args.out, "w") as f:
            f.write("t,status,overhead,worst_latency,plan_seconds\n")
            for tok, status, overhead, worst, secs in rows:
                f.write(f"{tok},{status},{overhead},{worst},{secs}\n")
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
