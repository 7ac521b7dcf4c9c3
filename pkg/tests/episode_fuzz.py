"""Seeded random localization episodes for fuzz suites.

Each episode is a two-feeder network in the shape of the reference grid:
two chains hanging off their own substations, one normally-open tie from
somewhere on feeder A to the far end of feeder B, at most one DG customer
placed so the island cut is always re-feedable, and exactly one tampered
meter reporting zero.
"""

from dataclasses import dataclass

import numpy as np

from gridsleuth.metering import CustomerMeter, SimulationOracle, Tamper, TamperKind
from gridsleuth.topology import Topology, build_topology

FUZZ_THRESHOLD = 0.02
BASE_LOAD = 10.0


@dataclass(frozen=True)
class Episode:
    topology: Topology
    spec: dict
    meters: tuple[CustomerMeter, ...]
    tampered_node: int
    alarm_edge: int
    dg_node: int | None
    seed: int

    def oracle(self) -> SimulationOracle:
        return SimulationOracle(
            self.topology, self.meters, self.seed, threshold=FUZZ_THRESHOLD)


def make_episode(seed: int) -> Episode:
    """Deterministic episode for one fuzz seed."""
    rng = np.random.default_rng([931, seed])
    a = int(rng.integers(1, 11))
    b = int(rng.integers(1, 11))
    # Node layout: 1 = source A, 2..a+1 = feeder A loads outward,
    # a+2..a+b+1 = feeder B loads with a+2 farthest from its source,
    # a+b+2 = source B.
    src_a, src_b = 1, a + b + 2
    a_loads = list(range(2, a + 2))
    b_loads = list(range(a + 2, a + b + 2))

    # The tie joins the two chain ends. Attached mid-chain it would leave
    # a stub of feeder-A customers that no boundary transfer can split
    # (they hang off the tie node away from both sources), and those
    # episodes are irreducible by construction, not by planner defect.
    tie_at = a_loads[-1]
    dg_node = None
    roll = rng.random()
    if roll < 0.45:
        dg_node = int(rng.choice(b_loads))
    elif roll < 0.60:
        # The only feasible feeder-A spot is the chain end: a DG cut
        # deeper in the chain would strand the tail beyond any tie.
        dg_node = a_loads[-1]

    nodes = [{"id": src_a, "kind": "source"}]
    nodes += [
        {"id": i, "kind": "load", "dg": i == dg_node} for i in a_loads + b_loads
    ]
    nodes.append({"id": src_b, "kind": "source"})
    nodes.sort(key=lambda n: n["id"])

    edges = [{"id": 1, "kind": "breaker", "from": src_a, "to": 2, "frtu": "FRTU_1"}]
    eid = 1
    for i in a_loads[:-1]:
        eid += 1
        edges.append({"id": eid, "kind": "sectionalizer", "from": i, "to": i + 1})
    eid += 1
    tie_edge = eid
    edges.append({"id": eid, "kind": "tie", "from": tie_at, "to": b_loads[0]})
    for i in b_loads[:-1]:
        eid += 1
        edges.append({"id": eid, "kind": "sectionalizer", "from": i, "to": i + 1})
    eid += 1
    alarm_b = eid
    edges.append({
        "id": eid, "kind": "breaker", "from": b_loads[-1], "to": src_b,
        "frtu": "FRTU_2",
    })
    spec = {"nodes": nodes, "edges": edges}
    topo = build_topology(spec)

    tampered = int(rng.choice(a_loads + b_loads))
    meters = tuple(
        CustomerMeter(
            meter_id=f"M-{n:02d}",
            node=n,
            base_load_kwh=BASE_LOAD,
            tamper=Tamper(TamperKind.SCALE, 0.0) if n == tampered else None,
        )
        for n in a_loads + b_loads
    )
    alarm_edge = 1 if tampered in a_loads else alarm_b
    return Episode(
        topology=topo,
        spec=spec,
        meters=meters,
        tampered_node=tampered,
        alarm_edge=alarm_edge,
        dg_node=dg_node,
        seed=seed,
    )
