"""Radial distribution network model and its matrix encodings.

A network is an undirected simple graph whose nodes are substation sources
and load points and whose edges are all switchable: feeder breakers (the
FRTU-monitored feeder heads), sectionalizers, and normally-open tie
switches. The graph is immutable after construction; matrix encodings and
switch-state vectors are plain numpy arrays indexed by the canonical
node/edge order (ids are 1-based, array positions 0-based).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    BreakerNotAtSourceError,
    DanglingEndpointError,
    DimensionMismatchError,
    DuplicateIdError,
    InvalidIdError,
    NonRadialNormalStateError,
    SelfLoopError,
)


class NodeKind(Enum):
    SOURCE = "source"
    LOAD = "load"


class EdgeKind(Enum):
    BREAKER = "breaker"
    SECTIONALIZER = "sectionalizer"
    TIE = "tie"


@dataclass(frozen=True)
class Node:
    id: int
    kind: NodeKind
    has_dg: bool = False


@dataclass(frozen=True)
class Edge:
    id: int
    kind: EdgeKind
    u: int
    v: int
    frtu: str | None = None

    @property
    def normally_closed(self) -> bool:
        # Ties are normally open; breakers and sectionalizers normally closed.
        return self.kind is not EdgeKind.TIE

    def other(self, node_id: int) -> int:
        return self.v if node_id == self.u else self.u


@dataclass(frozen=True)
class OperatingState:
    """Validation outcome for one switch configuration."""

    has_loop: bool
    dark_loads: tuple[int, ...]
    dg_islands: tuple[frozenset[int], ...]
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class Topology:
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    _frozen_arrays: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def node(self, node_id: int) -> Node:
        self._check_node_id(node_id)
        return self.nodes[node_id - 1]

    def edge(self, edge_id: int) -> Edge:
        self._check_edge_id(edge_id)
        return self.edges[edge_id - 1]

    def _check_node_id(self, node_id: int) -> None:
        if not 1 <= node_id <= self.n_nodes:
            raise InvalidIdError(f"node id {node_id} outside 1..{self.n_nodes}")

    def _check_edge_id(self, edge_id: int) -> None:
        if not 1 <= edge_id <= self.n_edges:
            raise InvalidIdError(f"edge id {edge_id} outside 1..{self.n_edges}")

    @cached_property
    def frtu_map(self) -> dict[int, str]:
        """Breaker edge id -> FRTU identifier."""
        return {e.id: e.frtu for e in self.edges if e.kind is EdgeKind.BREAKER}

    @cached_property
    def frtu_edges(self) -> dict[str, int]:
        return {frtu: eid for eid, frtu in self.frtu_map.items()}

    def normal_states(self) -> np.ndarray:
        """Switch vector of the normal operating state (ties open)."""
        return self._cached("normal", lambda: np.array(
            [1 if e.normally_closed else 0 for e in self.edges], dtype=np.uint8))

    def source_vector(self) -> np.ndarray:
        """Per-node flags marking substation sources."""
        return self._cached("sources", lambda: np.array(
            [1 if n.kind is NodeKind.SOURCE else 0 for n in self.nodes], dtype=np.uint8))

    def dg_vector(self) -> np.ndarray:
        """Per-node flags marking distributed generators."""
        return self._cached("dg", lambda: np.array(
            [1 if n.has_dg else 0 for n in self.nodes], dtype=np.uint8))

    def incidence(self) -> np.ndarray:
        return self._cached("incidence", lambda: incidence_matrix(self))

    def _cached(self, key: str, make) -> np.ndarray:
        arr = self._frozen_arrays.get(key)
        if arr is None:
            arr = make()
            arr.flags.writeable = False
            self._frozen_arrays[key] = arr
        return arr

    def check_states(self, states: np.ndarray) -> np.ndarray:
        """Validate and normalize a switch vector to uint8 of length |E|."""
        arr = np.asarray(states)
        if arr.shape != (self.n_edges,):
            raise DimensionMismatchError(
                f"switch vector has shape {arr.shape}, expected ({self.n_edges},)")
        return arr.astype(np.uint8)

    def check_node_flags(self, flags: np.ndarray, what: str = "node flag") -> np.ndarray:
        arr = np.asarray(flags)
        if arr.shape != (self.n_nodes,):
            raise DimensionMismatchError(
                f"{what} vector has shape {arr.shape}, expected ({self.n_nodes},)")
        return arr.astype(np.uint8)


def build_topology(spec: Mapping) -> Topology:
    """Construct and validate a Topology from a plain description.

    ``spec`` holds ``nodes: [{id, kind, dg?}]`` and
    ``edges: [{id, kind, from, to, frtu?}]``; ids must run 1..N in listed
    order, which fixes the canonical node and edge orderings.
    """
    nodes = _parse_nodes(spec.get("nodes", ()))
    edges = _parse_edges(spec.get("edges", ()), nodes)
    topo = Topology(nodes=nodes, edges=edges)
    _validate_structure(topo)
    return topo


def load_topology(path: str | Path) -> Topology:
    with open(path, "r", encoding="utf-8") as fh:
        return build_topology(json.load(fh))


def _parse_nodes(items: Iterable[Mapping]) -> tuple[Node, ...]:
    nodes: list[Node] = []
    seen: set[int] = set()
    for pos, item in enumerate(items, start=1):
        nid = int(item["id"])
        if nid in seen:
            raise DuplicateIdError(f"duplicate node id {nid}")
        if nid != pos:
            raise InvalidIdError(
                f"node ids must be consecutive from 1 in listed order; "
                f"position {pos} has id {nid}")
        seen.add(nid)
        kind = NodeKind(item.get("kind", "load"))
        has_dg = bool(item.get("dg", False))
        nodes.append(Node(id=nid, kind=kind, has_dg=has_dg))
    return tuple(nodes)


def _parse_edges(items: Iterable[Mapping], nodes: tuple[Node, ...]) -> tuple[Edge, ...]:
    node_ids = {n.id for n in nodes}
    edges: list[Edge] = []
    seen: set[int] = set()
    seen_pairs: set[frozenset[int]] = set()
    for pos, item in enumerate(items, start=1):
        eid = int(item["id"])
        if eid in seen:
            raise DuplicateIdError(f"duplicate edge id {eid}")
        if eid != pos:
            raise InvalidIdError(
                f"edge ids must be consecutive from 1 in listed order; "
                f"position {pos} has id {eid}")
        seen.add(eid)
        u, v = int(item["from"]), int(item["to"])
        if u == v:
            raise SelfLoopError(f"edge {eid} connects node {u} to itself")
        for endpoint in (u, v):
            if endpoint not in node_ids:
                raise DanglingEndpointError(
                    f"edge {eid} references missing node {endpoint}")
        pair = frozenset((u, v))
        if pair in seen_pairs:
            raise DuplicateIdError(f"duplicate edge between nodes {u} and {v}")
        seen_pairs.add(pair)
        kind = EdgeKind(item.get("kind", "sectionalizer"))
        frtu = item.get("frtu")
        if kind is EdgeKind.BREAKER and frtu is None:
            frtu = f"FRTU_{eid}"
        edges.append(Edge(id=eid, kind=kind, u=u, v=v, frtu=frtu))
    return tuple(edges)


def _validate_structure(topo: Topology) -> None:
    sources = {n.id for n in topo.nodes if n.kind is NodeKind.SOURCE}
    for edge in topo.edges:
        if edge.kind is EdgeKind.BREAKER:
            at_source = (edge.u in sources) + (edge.v in sources)
            if at_source != 1:
                raise BreakerNotAtSourceError(
                    f"breaker edge {edge.id} must join exactly one source node "
                    f"to the feeder (found {at_source} source endpoints)")
    # Normal state (ties open) must be a forest giving every load exactly
    # one substation source.
    components = closed_components(topo, topo.normal_states())
    for comp in components:
        n_sources = len(comp & sources)
        if n_sources == 0 and any(
            topo.node(i).kind is NodeKind.LOAD for i in comp
        ):
            raise NonRadialNormalStateError(
                f"loads {sorted(comp)} have no substation source in the normal state")
        if n_sources > 1:
            raise NonRadialNormalStateError(
                f"component {sorted(comp)} joins {n_sources} substation sources")
    if _has_cycle(topo, topo.normal_states(), collapse_sources=False):
        raise NonRadialNormalStateError("normal state contains a closed loop")


def incidence_matrix(topo: Topology) -> np.ndarray:
    """|V| x |E| binary matrix; column j flags edge j's two endpoints."""
    m = np.zeros((topo.n_nodes, topo.n_edges), dtype=np.uint8)
    for j, edge in enumerate(topo.edges):
        m[edge.u - 1, j] = 1
        m[edge.v - 1, j] = 1
    return m


def adjacency_from_incidence(incidence: np.ndarray, states: np.ndarray) -> np.ndarray:
    """Adjacency of the switched topology from its masked incidence matrix.

    Open edges (state 0) are zeroed column-wise before the product; the
    resulting node-by-node matrix is binarized and its diagonal cleared, so
    the output is symmetric with zero diagonal whatever the input.
    """
    inc = np.asarray(incidence, dtype=np.uint8)
    st = np.asarray(states)
    if inc.ndim != 2:
        raise DimensionMismatchError(f"incidence matrix must be 2-d, got {inc.ndim}-d")
    if st.shape != (inc.shape[1],):
        raise DimensionMismatchError(
            f"switch vector has shape {st.shape}, expected ({inc.shape[1]},)")
    masked = inc * st.astype(np.uint8)[np.newaxis, :]
    product = masked.astype(bool) @ masked.astype(bool).T
    adjacency = product.astype(np.uint8)
    np.fill_diagonal(adjacency, 0)
    return adjacency


def closed_components(topo: Topology, states: np.ndarray) -> list[set[int]]:
    """Connected components (as node-id sets) over closed edges only."""
    states = topo.check_states(states)
    parent = list(range(topo.n_nodes + 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for j, edge in enumerate(topo.edges):
        if states[j]:
            ru, rv = find(edge.u), find(edge.v)
            if ru != rv:
                parent[ru] = rv
    groups: dict[int, set[int]] = {}
    for node in topo.nodes:
        groups.setdefault(find(node.id), set()).add(node.id)
    return list(groups.values())


def _has_cycle(topo: Topology, states: np.ndarray, collapse_sources: bool) -> bool:
    """Cycle test on closed edges.

    With ``collapse_sources`` every substation source is merged into one
    virtual vertex first: the transmission grid ties feeder heads together
    upstream, so a source-to-source path already parallels two feeders and
    counts as a loop.
    """
    parent = list(range(topo.n_nodes + 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    if collapse_sources:
        root = None
        for node in topo.nodes:
            if node.kind is NodeKind.SOURCE:
                if root is None:
                    root = node.id
                else:
                    parent[find(node.id)] = find(root)
    for j, edge in enumerate(topo.edges):
        if states[j]:
            ru, rv = find(edge.u), find(edge.v)
            if ru == rv:
                return True
            parent[ru] = rv
    return False


def validate_operating_state(
    topo: Topology, states: np.ndarray, allow_loops: bool = False
) -> OperatingState:
    """Check one switch configuration against the keep-power-on rules.

    Reports loops (with substation sources collapsed, so paralleling two
    feeders counts), de-energized loads, and DG islands. A de-energized
    load inside a DG island is microgrid-supplied and not a violation.
    """
    from .energize import energized_nodes  # local import breaks the module cycle

    states = topo.check_states(states)
    has_loop = _has_cycle(topo, states, collapse_sources=True)

    energized = energized_nodes(topo, states)
    islands: list[frozenset[int]] = []
    island_nodes: set[int] = set()
    sources = {n.id for n in topo.nodes if n.kind is NodeKind.SOURCE}
    for comp in closed_components(topo, states):
        if comp & sources:
            continue
        if any(topo.node(i).has_dg for i in comp):
            islands.append(frozenset(comp))
            island_nodes |= comp
    islands.sort(key=min)

    dark_loads = tuple(
        n.id
        for n in topo.nodes
        if n.kind is NodeKind.LOAD
        and not energized[n.id - 1]
        and n.id not in island_nodes
    )

    violations: list[str] = []
    if has_loop and not allow_loops:
        violations.append("closed loop between feeders")
    if dark_loads:
        violations.append(f"de-energized loads outside any microgrid: {list(dark_loads)}")
    return OperatingState(
        has_loop=has_loop,
        dark_loads=dark_loads,
        dg_islands=tuple(islands),
        violations=tuple(violations),
    )


def states_from_string(bits: str, topo: Topology | None = None) -> np.ndarray:
    """Parse a switch vector like ``"1101111"`` (1 = closed)."""
    if not bits or any(c not in "01" for c in bits):
        raise DimensionMismatchError(f"switch string must be over 0/1, got {bits!r}")
    arr = np.array([int(c) for c in bits], dtype=np.uint8)
    if topo is not None:
        arr = topo.check_states(arr)
    return arr


def states_to_string(states: Sequence[int] | np.ndarray) -> str:
    return "".join("1" if int(s) else "0" for s in states)
