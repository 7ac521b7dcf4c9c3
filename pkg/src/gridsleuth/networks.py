"""Ready-made reference networks.

The eight-node, two-feeder test network used throughout the docs and the
golden tests: two substation sources at the ends, a normally-open tie in
the middle, and one customer with distributed generation.
"""

from __future__ import annotations

from .topology import Topology, build_topology

CT8_SPEC = {
    "nodes": [
        {"id": 1, "kind": "source"},
        {"id": 2, "kind": "load"},
        {"id": 3, "kind": "load"},
        {"id": 4, "kind": "load"},
        {"id": 5, "kind": "load"},
        {"id": 6, "kind": "load", "dg": True},
        {"id": 7, "kind": "load"},
        {"id": 8, "kind": "source"},
    ],
    "edges": [
        {"id": 1, "kind": "breaker", "from": 1, "to": 2, "frtu": "FRTU_1"},
        {"id": 2, "kind": "sectionalizer", "from": 2, "to": 3},
        {"id": 3, "kind": "sectionalizer", "from": 3, "to": 4},
        {"id": 4, "kind": "tie", "from": 3, "to": 5},
        {"id": 5, "kind": "sectionalizer", "from": 5, "to": 6},
        {"id": 6, "kind": "sectionalizer", "from": 6, "to": 7},
        {"id": 7, "kind": "breaker", "from": 7, "to": 8, "frtu": "FRTU_2"},
    ],
}


def ct8() -> Topology:
    """Two feeders, eight nodes, one tie, one DG customer."""
    return build_topology(CT8_SPEC)
