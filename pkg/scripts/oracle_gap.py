#!/usr/bin/env python3
"""Measure the greedy planner's optimality gap against the exhaustive oracle
on a batch of tiny random instances.

Usage:
    python3 scripts/oracle_gap.py --instances 200 --vertices 7
"""

import argparse
import sys
from fractions import Fraction

from replan.generate import random_instance
from replan.oracle import brute_force_optimal
from replan.planner import greedy_plan


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=100)
    ap.add_argument("--vertices", type=int, default=7)
    ap.add_argument("--servers", type=int, default=3)
    ap.add_argument("--t", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    exact = 0
    gaps = []
    infeasible = 0
    for i in range(args.instances):
        inst = random_instance(
            args.vertices, args.servers, seed=args.seed + i, t_bounds=[args.t]
        )
        best = brute_force_optimal(inst)
        if best is None:
            infeasible += 1
            continue
        _, opt_cost = best
        _, _, report = greedy_plan(
            inst.graph, inst.workload, inst.sharding, inst.servers
        )
        greedy_cost = inst.graph.total_cost() + report.total_added_cost
        assert greedy_cost >= opt_cost, "greedy beat the exhaustive oracle"
        gap = (greedy_cost - opt_cost) / opt_cost
        gaps.append(gap)
        if gap == 0:
            exact += 1

    solved = len(gaps)
    print(f"instances: {args.instances}  solved: {solved}  infeasible: {infeasible}")
    if solved:
        mean_gap = sum(gaps, Fraction(0)) / solved
        print(f"greedy matched the optimum on {exact}/{solved} "
              f"({100.0 * exact / solved:.1f}%)")
        print(f"mean relative cost gap: {float(mean_gap):.4%}")
        print(f"worst relative cost gap: {float(max(gaps)):.4%}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
