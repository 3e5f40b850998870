"""Latency-bound replication planner, routing simulator, and oracles."""

__all__ = [
    "model",
    "workload",
    "routing",
    "planner",
    "reshard",
    "oracle",
    "generate",
    "cli",
]
