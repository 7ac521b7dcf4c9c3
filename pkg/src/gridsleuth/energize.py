"""Energization analysis of a switched network.

The central operation: given the switch states, which nodes receive power
from the substation sources? Everything else in the package (suspect sets,
FRTU coverage, outage accounting) is phrased in terms of this vector.
"""

from __future__ import annotations

import numpy as np

from ._kernel import energize_fixed_point
from .errors import NotABreakerError
from .topology import EdgeKind, Topology, adjacency_from_incidence


def energized_from_incidence(
    incidence: np.ndarray, states: np.ndarray, sources: np.ndarray
) -> tuple[np.ndarray, int]:
    """Energized vector from raw matrices; returns (vector, sweep count)."""
    adjacency = adjacency_from_incidence(incidence, states)
    src = np.asarray(sources, dtype=np.uint8)
    return energize_fixed_point(adjacency, src)


def energized_nodes(
    topo: Topology, states: np.ndarray, sources: np.ndarray | None = None
) -> np.ndarray:
    """Per-node energized flags (uint8, index = node id - 1).

    ``sources`` defaults to the substation sources; pass a custom vector to
    model DG-backed islands or hypothetical injections.
    """
    states = topo.check_states(states)
    if sources is None:
        sources = topo.source_vector()
    else:
        sources = topo.check_node_flags(sources, "source")
    vf, _ = energized_from_incidence(topo.incidence(), states, sources)
    return vf


def energized_after_opening(
    topo: Topology,
    states: np.ndarray,
    edge_id: int,
    sources: np.ndarray | None = None,
) -> np.ndarray:
    """Energized flags with one breaker forced open on top of ``states``."""
    edge = topo.edge(edge_id)
    if edge.kind is not EdgeKind.BREAKER:
        raise NotABreakerError(
            f"edge {edge_id} is a {edge.kind.value}, not a feeder breaker")
    opened = topo.check_states(states).copy()
    opened[edge_id - 1] = 0
    return energized_nodes(topo, opened, sources)


def suspect_nodes(
    topo: Topology,
    states: np.ndarray,
    alarm_edge: int,
    sources: np.ndarray | None = None,
) -> frozenset[int]:
    """Nodes that lose power when the alarmed feeder breaker opens.

    These are exactly the customers whose meters feed the alarmed FRTU's
    aggregate, so they form the initial suspect set for the discrepancy.
    """
    vf = energized_after_opening(topo, states, alarm_edge, sources)
    return frozenset(int(i) + 1 for i in np.flatnonzero(vf == 0))


def frtu_coverage(topo: Topology, states: np.ndarray) -> dict[str, frozenset[int]]:
    """Load nodes metered by each FRTU under the given switch states.

    A node is covered by an FRTU when opening that breaker (and nothing
    else) de-energizes it: the node's power flows through that feeder head.
    """
    states = topo.check_states(states)
    base = energized_nodes(topo, states)
    coverage: dict[str, frozenset[int]] = {}
    for edge_id, frtu in sorted(topo.frtu_map.items()):
        after = energized_after_opening(topo, states, edge_id)
        lost = (base == 1) & (after == 0)
        coverage[frtu] = frozenset(
            int(i) + 1 for i in np.flatnonzero(lost)
            if topo.node(int(i) + 1).kind.value == "load"
        )
    return coverage
