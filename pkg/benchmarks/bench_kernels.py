"""Benchmark the energization kernels and an end-to-end localization.

Chains are the diameter worst case for the fixed-point sweep (power has to
ripple across every node), so kernel timings use path graphs. The end-to-end
run localizes a tampered meter on a two-feeder network built from scratch.

Usage: python benchmarks/bench_kernels.py [--sizes 8,32,128,512] [--repeats 5]
"""

from __future__ import annotations

import argparse
import time
from statistics import median

import numpy as np

from gridsleuth import _energize_py
from gridsleuth._kernel import BACKEND
from gridsleuth.metering import CustomerMeter, SimulationOracle, Tamper, TamperKind
from gridsleuth.planner import localize
from gridsleuth.topology import build_topology

try:
    from gridsleuth import _energize_c
except ImportError:
    _energize_c = None


def chain_inputs(n: int) -> tuple[np.ndarray, np.ndarray]:
    adjacency = np.zeros((n, n), dtype=np.uint8)
    idx = np.arange(n - 1)
    adjacency[idx, idx + 1] = 1
    adjacency[idx + 1, idx] = 1
    sources = np.zeros(n, dtype=np.uint8)
    sources[0] = 1
    return adjacency, sources


def time_kernel(fn, adjacency: np.ndarray, sources: np.ndarray, repeats: int) -> float:
    timings = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn(adjacency, sources)
        timings.append(time.perf_counter() - start)
    return median(timings)


def two_feeder_topology(loads_per_feeder: int) -> dict:
    a = loads_per_feeder
    n = 2 * a + 2
    nodes = [{"id": 1, "kind": "source"}]
    nodes += [{"id": i, "kind": "load"} for i in range(2, n)]
    nodes += [{"id": n, "kind": "source"}]
    edges = [{"id": 1, "kind": "breaker", "from": 1, "to": 2, "frtu": "FRTU_1"}]
    for i in range(2, a + 1):
        edges.append({"id": i, "kind": "sectionalizer", "from": i, "to": i + 1})
    edges.append({"id": a + 1, "kind": "tie", "from": a + 1, "to": a + 2})
    for i in range(a + 2, 2 * a + 1):
        edges.append({"id": i, "kind": "sectionalizer", "from": i, "to": i + 1})
    edges.append({
        "id": 2 * a + 1, "kind": "breaker",
        "from": 2 * a + 1, "to": n, "frtu": "FRTU_2",
    })
    return {"nodes": nodes, "edges": edges}


def bench_localization(loads_per_feeder: int, repeats: int) -> tuple[float, int, int]:
    topo = build_topology(two_feeder_topology(loads_per_feeder))
    tampered = loads_per_feeder // 2 + 2
    meters = [
        CustomerMeter(
            meter_id=f"M-{node:03d}", node=node, base_load_kwh=10.0,
            tamper=Tamper(TamperKind.SCALE, 0.0) if node == tampered else None)
        for node in range(2, 2 * loads_per_feeder + 2)
    ]
    timings = []
    report = None
    for _ in range(repeats):
        # One dead meter among ~120 is a sub-percent discrepancy, so the
        # detection threshold must sit below 1/n_loads to trip at all.
        oracle = SimulationOracle(topo, meters, seed=11, threshold=0.005)
        start = time.perf_counter()
        report = localize(topo, 1, oracle)
        timings.append(time.perf_counter() - start)
    assert report is not None and list(report.final_suspects) == [tampered]
    return median(timings), len(report.actions), len(report.checks)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--sizes", default="8,32,128,512",
        help="comma-separated chain lengths for the kernel comparison")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timed repetitions per measurement (median wins)")
    parser.add_argument("--feeder-loads", type=int, default=60,
                        help="loads per feeder in the end-to-end localization")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",") if s]

    print(f"active kernel backend: {BACKEND}")
    if _energize_c is None:
        print("compiled kernel unavailable; timing the pure-Python sweep only")
    print()
    header = f"{'nodes':>6}  {'python':>10}  {'compiled':>10}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n in sizes:
        adjacency, sources = chain_inputs(n)
        py = time_kernel(
            _energize_py.energize_fixed_point, adjacency, sources, args.repeats)
        if _energize_c is None:
            print(f"{n:>6}  {py * 1e3:>8.3f}ms  {'-':>10}  {'-':>8}")
            continue
        cy = time_kernel(
            _energize_c.energize_fixed_point, adjacency, sources, args.repeats)
        print(f"{n:>6}  {py * 1e3:>8.3f}ms  {cy * 1e3:>8.3f}ms  {py / cy:>7.1f}x")

    took, n_actions, n_checks = bench_localization(args.feeder_loads, args.repeats)
    print()
    print(f"end-to-end localization on {2 * args.feeder_loads + 2} nodes: "
          f"{took * 1e3:.1f}ms ({n_actions} switching actions, "
          f"{n_checks} FRTU checks)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
