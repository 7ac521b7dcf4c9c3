"""Switching-plan construction and tamper localization.

Given an alarmed feeder head, the planner reconfigures the network to
shrink the set of customers that could explain the discrepancy. It works
against an oracle (live telemetry or a simulation) that answers one
question: does a given FRTU alarm under given switch states?

The bookkeeping revolves around three sets. ``E`` holds exonerated nodes:
every clear reading exonerates the full coverage of that FRTU. ``T`` holds
nodes resolved as tampered. Every alarm reading raises an obligation, the
coverage that must contain at least one tampered node; an obligation is
discharged once it contains a member of ``T``, and if exonerations ever
empty an undischarged obligation the telemetry contradicts itself.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .energize import frtu_coverage, suspect_nodes
from .errors import (
    InfeasibleIsolationError,
    InfeasiblePlanError,
    NotABreakerError,
    OracleInconsistentError,
)
from .topology import (
    EdgeKind,
    NodeKind,
    Topology,
    closed_components,
    states_to_string,
    validate_operating_state,
)

CLOSE = "close"
OPEN = "open"


@dataclass(frozen=True)
class SwitchingAction:
    step: int
    edge: int
    action: str

    def to_dict(self) -> dict:
        return {"step": self.step, "edge": self.edge, "action": self.action}


@dataclass(frozen=True)
class FrtuCheck:
    after_step: int
    frtu: str
    alarm: bool

    def to_dict(self) -> dict:
        return {"after_step": self.after_step, "frtu": self.frtu, "alarm": self.alarm}


@dataclass
class IslandRecord:
    nodes: frozenset[int]
    opened: tuple[int, ...]
    closed_ties: tuple[int, ...]
    restored: bool = False

    def to_dict(self) -> dict:
        return {
            "nodes": sorted(self.nodes),
            "opened": list(self.opened),
            "closed_ties": list(self.closed_ties),
            "restored": self.restored,
        }


@dataclass(frozen=True)
class LocalizationReport:
    alarm_edge: int
    initial_alarms: dict[str, bool]
    actions: tuple[SwitchingAction, ...]
    checks: tuple[FrtuCheck, ...]
    suspect_history: tuple[tuple[int, ...], ...]
    final_suspects: tuple[int, ...]
    islands: tuple[IslandRecord, ...]
    committed_states: tuple[str, ...]
    constraint_violations: tuple[str, ...]
    irreducible: bool
    log: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "alarm_edge": self.alarm_edge,
            "initial_alarms": dict(sorted(self.initial_alarms.items())),
            "actions": [a.to_dict() for a in self.actions],
            "checks": [c.to_dict() for c in self.checks],
            "suspect_history": [list(s) for s in self.suspect_history],
            "final_suspects": list(self.final_suspects),
            "islands": [i.to_dict() for i in self.islands],
            "committed_states": list(self.committed_states),
            "constraint_violations": list(self.constraint_violations),
            "irreducible": self.irreducible,
            "log": list(self.log),
        }


@dataclass
class _Obligation:
    """One alarmed reading awaiting an explanation."""

    origin: str
    nodes: frozenset[int]
    explained: bool = False

    def active(self, exonerated: set[int]) -> frozenset[int]:
        return self.nodes - exonerated


@dataclass(frozen=True)
class IsolationPlan:
    ops: tuple[tuple[str, int], ...]
    islands: tuple[IslandRecord, ...]
    states_after: np.ndarray


def isolate_dg_islands(topo: Topology, states: np.ndarray) -> IsolationPlan:
    """Plan the cut that puts every DG node on its own microgrid island.

    Each DG node is severed by opening all of its closed edges. Any
    source-free, DG-free fragment stranded by those cuts is re-fed by
    closing one open tie toward a powered component; ties touching an
    island are never used. Closes are listed before opens so no customer
    goes dark mid-sequence.
    """
    work = topo.check_states(states).copy()
    dg_nodes = sorted(n.id for n in topo.nodes if n.has_dg)
    opened_by: dict[int, list[int]] = {d: [] for d in dg_nodes}
    for dg in dg_nodes:
        for edge in topo.edges:
            if work[edge.id - 1] and dg in (edge.u, edge.v):
                work[edge.id - 1] = 0
                opened_by[dg].append(edge.id)

    sources = {n.id for n in topo.nodes if n.kind is NodeKind.SOURCE}
    comps = closed_components(topo, work)
    comp_of = {node: idx for idx, comp in enumerate(comps) for node in comp}
    fed = {idx for idx, comp in enumerate(comps) if comp & sources}
    dg_comp_idx = {idx for idx, comp in enumerate(comps) if comp & set(dg_nodes)}
    island_nodes = set().union(*(comps[i] for i in dg_comp_idx)) if dg_comp_idx else set()

    # Union-find over component indices tracks merges as ties close.
    parent = list(range(len(comps)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    tie_for: dict[int, list[int]] = {d: [] for d in dg_nodes}
    stranded = sorted(
        (idx for idx in range(len(comps)) if idx not in fed and idx not in dg_comp_idx),
        key=lambda i: min(comps[i]),
    )
    for idx in stranded:
        if any(find(idx) == find(f) for f in fed):
            continue
        candidates = []
        for e in topo.edges:
            if work[e.id - 1] or e.kind is not EdgeKind.TIE:
                continue
            if e.u in island_nodes or e.v in island_nodes:
                continue
            ru, rv = find(comp_of[e.u]), find(comp_of[e.v])
            fed_u = any(ru == find(f) for f in fed)
            fed_v = any(rv == find(f) for f in fed)
            if fed_u == fed_v:
                continue
            dark_root = rv if fed_u else ru
            if dark_root == find(idx):
                candidates.append(e)
        if not candidates:
            raise InfeasibleIsolationError(
                f"no open tie can re-feed nodes {sorted(comps[idx])} once the "
                f"DG cuts are made")
        tie = min(candidates, key=lambda e: e.id)
        work[tie.id - 1] = 1
        fed_end = tie.u if any(find(comp_of[tie.u]) == find(f) for f in fed) else tie.v
        dark_end = tie.v if fed_end == tie.u else tie.u
        parent[find(comp_of[dark_end])] = find(comp_of[fed_end])
        owner = _owning_dg(topo, comps[idx], opened_by)
        tie_for[owner].append(tie.id)

    islands = tuple(
        IslandRecord(
            nodes=_island_component(comps, dg),
            opened=tuple(sorted(opened_by[dg])),
            closed_ties=tuple(sorted(tie_for[dg])),
        )
        for dg in dg_nodes
    )
    closes = sorted(t for ties in tie_for.values() for t in ties)
    opens = sorted(e for edges in opened_by.values() for e in edges)
    ops = tuple([(CLOSE, e) for e in closes] + [(OPEN, e) for e in opens])
    return IsolationPlan(ops=ops, islands=islands, states_after=work)


def _owning_dg(
    topo: Topology, comp: set[int], opened_by: Mapping[int, list[int]]
) -> int:
    """DG whose severance stranded this component (adjacent via a cut edge)."""
    adjacent = []
    for dg, edges in opened_by.items():
        for eid in edges:
            e = topo.edge(eid)
            if e.u in comp or e.v in comp:
                adjacent.append(dg)
    if adjacent:
        return min(adjacent)
    return min(opened_by)


def _island_component(comps: Sequence[set[int]], dg: int) -> frozenset[int]:
    for comp in comps:
        if dg in comp:
            return frozenset(comp)
    return frozenset({dg})


def restore_island_ops(island: IslandRecord) -> tuple[tuple[str, int], ...]:
    """Switching sequence that undoes one island's isolation.

    The severed edges re-close before the compensating ties re-open, so
    the customers moved onto the ties never go dark in between.
    """
    return tuple(
        [(CLOSE, e) for e in island.opened] + [(OPEN, e) for e in island.closed_ties]
    )


class _Planner:
    """Mutable state of one localization run."""

    def __init__(
        self,
        topo: Topology,
        alarm_edge: int,
        oracle: Callable[[np.ndarray], Mapping[str, bool]],
        initial_states: np.ndarray | None,
    ) -> None:
        edge = topo.edge(alarm_edge)
        if edge.kind is not EdgeKind.BREAKER:
            raise NotABreakerError(
                f"alarm edge {alarm_edge} is a {edge.kind.value}, not a feeder breaker")
        self.topo = topo
        self.alarm_edge = alarm_edge
        self.alarm_frtu = topo.frtu_map[alarm_edge]
        self.oracle = oracle
        self.states = topo.check_states(
            topo.normal_states() if initial_states is None else initial_states
        ).copy()
        self.exonerated: set[int] = set()
        self.tampered: set[int] = set()
        self.obligations: list[_Obligation] = []
        self.consulted: dict[tuple[str, str], bool] = {}
        self.actions: list[SwitchingAction] = []
        self.checks: list[FrtuCheck] = []
        self.history: list[tuple[int, ...]] = []
        self.islands: list[IslandRecord] = []
        self.committed: list[str] = []
        self.violations: list[str] = []
        self.log: list[str] = []
        self.initial_alarms: dict[str, bool] = {}
        self.irreducible = False

    # --- telemetry ---------------------------------------------------

    def consult(self, frtu: str) -> tuple[bool, bool]:
        """Read one FRTU's alarm bit at the current states.

        Returns (alarm, fresh). Only a fresh read counts as a check; a
        pair already read at this exact configuration is just replayed.
        """
        key = (states_to_string(self.states), frtu)
        if key in self.consulted:
            return self.consulted[key], False
        alarm = bool(self.oracle(self.states)[frtu])
        self.consulted[key] = alarm
        return alarm, True

    def record_check(self, frtu: str, alarm: bool) -> None:
        self.checks.append(
            FrtuCheck(after_step=len(self.actions), frtu=frtu, alarm=alarm))
        self.log.append(
            f"check {frtu} after step {len(self.actions)}: "
            f"{'ALARM' if alarm else 'clear'}")

    def process_reading(self, frtu: str, alarm: bool, coverage: frozenset[int]) -> None:
        if alarm:
            if coverage & self.tampered:
                return
            if not coverage - self.exonerated:
                raise OracleInconsistentError(
                    f"{frtu} alarms but every covered node is exonerated")
            self.obligations.append(_Obligation(origin=frtu, nodes=coverage))
        else:
            hit = coverage & self.tampered
            if hit:
                raise OracleInconsistentError(
                    f"{frtu} reads clear while covering tampered nodes {sorted(hit)}")
            self.exonerated |= coverage

    # --- switching ---------------------------------------------------

    def commit_group(self, ops: Sequence[tuple[str, int]]) -> None:
        """Apply one ordered action group and validate the end state.

        Loops and outages inside the group are transient and allowed; the
        state the group lands on must satisfy the operating rules.
        """
        for op, eid in ops:
            self.states[eid - 1] = 1 if op == CLOSE else 0
            self.actions.append(
                SwitchingAction(step=len(self.actions) + 1, edge=eid, action=op))
            self.log.append(f"step {len(self.actions)}: {op} edge {eid}")
        check = validate_operating_state(self.topo, self.states)
        key = states_to_string(self.states)
        self.committed.append(key)
        if not check.ok:
            self.violations.extend(f"{key}: {v}" for v in check.violations)
            raise InfeasiblePlanError(
                f"committed switch state {key} violates operating rules: "
                f"{'; '.join(check.violations)}")

    # --- suspect bookkeeping -----------------------------------------

    def active_union(self) -> set[int]:
        out: set[int] = set()
        for ob in self.obligations:
            if not ob.explained:
                out |= ob.active(self.exonerated)
        return out

    def snapshot(self) -> None:
        snap = tuple(sorted(self.active_union() | self.tampered))
        if not self.history or self.history[-1] != snap:
            self.history.append(snap)

    def settle_obligations(self) -> _Obligation | None:
        """Discharge, fail, or pick the obligation to work on next.

        Returns the newest undischarged obligation, or None when every
        alarm is explained. Raises when exonerations emptied one.
        """
        while True:
            resolved_one = False
            pending: _Obligation | None = None
            for ob in self.obligations:
                if ob.explained:
                    continue
                if ob.nodes & self.tampered:
                    ob.explained = True
                    continue
                active = ob.active(self.exonerated)
                if not active:
                    raise OracleInconsistentError(
                        f"alarm from {ob.origin} has no candidate left: every "
                        f"covered node was exonerated")
                if len(active) == 1:
                    node = next(iter(active))
                    self.resolve(node)
                    resolved_one = True
                    break
                pending = ob
            if resolved_one:
                continue
            return pending

    def resolve(self, node: int) -> None:
        self.tampered.add(node)
        self.log.append(f"resolved: node {node} is tampered")
        for ob in self.obligations:
            if not ob.explained and ob.nodes & self.tampered:
                ob.explained = True
        self.snapshot()
        self.scan_all_frtus()

    def scan_all_frtus(self) -> None:
        """Sweep every FRTU at the current states for leftover alarms.

        Catches a second tampered feeder once the first explanation lands.
        Reads already taken at this configuration are replayed for free.
        """
        coverage = frtu_coverage(self.topo, self.states)
        for frtu in sorted(coverage):
            alarm, fresh = self.consult(frtu)
            if fresh:
                self.record_check(frtu, alarm)
                self.process_reading(frtu, alarm, coverage[frtu])
        self.snapshot()

    # --- check and move selection ------------------------------------

    def informative_checks(
        self, suspects: frozenset[int], coverage: Mapping[str, frozenset[int]]
    ) -> list[tuple[float, str]]:
        """FRTUs whose reading would split the suspect set, best first.

        A useful coverage cuts the suspects properly (neither none nor all)
        and contains no already-resolved node, so either answer narrows the
        obligation. Reads already taken here are excluded: their result is
        folded in and re-reading cannot move anything.
        """
        key = states_to_string(self.states)
        out: list[tuple[float, str]] = []
        for frtu, cov in coverage.items():
            if (key, frtu) in self.consulted:
                continue
            if cov & self.tampered:
                continue
            inside = cov & suspects
            if not inside or inside == suspects:
                continue
            score = abs(len(inside) - len(suspects) / 2)
            out.append((score, frtu))
        out.sort(key=lambda sf: (sf[0], self._frtu_rank(sf[1])))
        return out

    def _frtu_rank(self, frtu: str) -> int:
        return self.topo.frtu_edges[frtu]

    def best_check(self, ob: _Obligation) -> str | None:
        suspects = ob.active(self.exonerated)
        coverage = frtu_coverage(self.topo, self.states)
        ranked = self.informative_checks(suspects, coverage)
        if not ranked:
            return None
        best_score = ranked[0][0]
        tied = [frtu for score, frtu in ranked if score == best_score]
        if ob.origin in tied:
            return ob.origin
        return tied[0]

    def island_nodes(self) -> set[int]:
        out: set[int] = set()
        for island in self.islands:
            if not island.restored:
                out |= island.nodes
        return out

    def find_move(self, ob: _Obligation) -> tuple[int, int] | None:
        """Search (close, open) reconfigurations that enable a split.

        Closing an open non-breaker edge loops two powered paths together;
        opening a closed sectionalizer on that loop re-radializes with some
        customers moved to the other feeder head. A move is kept only if
        the landing state passes validation and some FRTU then splits the
        obligation. Returns (edge_to_close, edge_to_open) or None.
        """
        suspects = ob.active(self.exonerated)
        frozen = self.island_nodes()
        best: tuple[float, int, int] | None = None
        for cand in self.topo.edges:
            if self.states[cand.id - 1] or cand.kind is EdgeKind.BREAKER:
                continue
            if cand.u in frozen or cand.v in frozen:
                continue
            cycle = self._cycle_sectionalizers(cand)
            for sec in cycle:
                trial = self.states.copy()
                trial[cand.id - 1] = 1
                trial[sec - 1] = 0
                if not validate_operating_state(self.topo, trial).ok:
                    continue
                coverage = frtu_coverage(self.topo, trial)
                saved = self.states
                self.states = trial
                ranked = self.informative_checks(suspects, coverage)
                self.states = saved
                if not ranked:
                    continue
                entry = (ranked[0][0], sec, cand.id)
                if best is None or entry < best:
                    best = entry
        if best is None:
            return None
        return best[2], best[1]

    def _cycle_sectionalizers(self, cand) -> list[int]:
        """Closed sectionalizers on the loop that closing ``cand`` creates.

        Substation sources collapse into one virtual vertex, so a path
        running source-to-source through the grid counts as part of the
        loop. Edges via the virtual vertex are breaker stubs, never
        returned.
        """
        n = self.topo.n_nodes
        virtual = 0
        adj: dict[int, list[tuple[int, int | None]]] = {i: [] for i in range(n + 1)}
        for e in self.topo.edges:
            if not self.states[e.id - 1] or e.id == cand.id:
                continue
            adj[e.u].append((e.v, e.id))
            adj[e.v].append((e.u, e.id))
        for node in self.topo.nodes:
            if node.kind is NodeKind.SOURCE:
                adj[virtual].append((node.id, None))
                adj[node.id].append((virtual, None))
        start, goal = cand.u, cand.v
        prev: dict[int, tuple[int, int | None]] = {start: (start, None)}
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            if cur == goal:
                break
            for nxt, eid in adj[cur]:
                if nxt not in prev:
                    prev[nxt] = (cur, eid)
                    queue.append(nxt)
        if goal not in prev:
            return []
        out: list[int] = []
        cur = goal
        while cur != start:
            cur, eid = prev[cur]
            if eid is not None and self.topo.edge(eid).kind is EdgeKind.SECTIONALIZER:
                out.append(eid)
        return sorted(out)

    def find_restoration(self) -> IslandRecord | None:
        """Pick an island to fold back into the grid when progress stalls.

        An island can block progress two ways: its nodes are suspects no
        FRTU can meter, or its cut lines and claimed ties sit on every
        reconfiguration path. Folding one back is always safe (the landing
        state is validated) and each island folds back at most once, so
        this cannot loop.
        """
        candidates = [i for i in self.islands if not i.restored]
        if not candidates:
            return None
        return min(candidates, key=lambda i: min(i.nodes))

    def restore_and_check(self, island: IslandRecord) -> None:
        self.log.append(
            f"restore island {sorted(island.nodes)} to discriminate suspects")
        self.commit_group(restore_island_ops(island))
        island.restored = True
        coverage = frtu_coverage(self.topo, self.states)
        covering = [
            frtu for frtu, cov in sorted(coverage.items()) if cov & island.nodes
        ]
        if not covering:
            raise InfeasiblePlanError(
                f"restored island {sorted(island.nodes)} is not covered by any FRTU")
        frtu = covering[0]
        alarm, fresh = self.consult(frtu)
        if fresh:
            self.record_check(frtu, alarm)
            self.process_reading(frtu, alarm, coverage[frtu])
        self.snapshot()

    # --- main loop ----------------------------------------------------

    def _empty_report(self) -> LocalizationReport:
        return LocalizationReport(
            alarm_edge=self.alarm_edge,
            initial_alarms=dict(self.initial_alarms),
            actions=(),
            checks=(),
            suspect_history=(),
            final_suspects=(),
            islands=(),
            committed_states=tuple(self.committed),
            constraint_violations=(),
            irreducible=False,
            log=tuple(self.log),
        )

    def run(self) -> LocalizationReport:
        baseline = validate_operating_state(self.topo, self.states)
        if not baseline.ok:
            raise InfeasiblePlanError(
                "starting switch state violates operating rules: "
                + "; ".join(baseline.violations))
        self.committed.append(states_to_string(self.states))

        # Continuous telemetry: every FRTU's alarm bit is already on the
        # operator's board before any switching, so this sweep is free.
        coverage0 = frtu_coverage(self.topo, self.states)
        readings0 = self.oracle(self.states)
        key0 = states_to_string(self.states)
        for frtu in sorted(coverage0):
            alarm = bool(readings0[frtu])
            self.initial_alarms[frtu] = alarm
            self.consulted[(key0, frtu)] = alarm
        if not self.initial_alarms.get(self.alarm_frtu, False):
            # Telemetry is quiet on the requested feeder: nothing to chase.
            self.log.append(
                f"{self.alarm_frtu} (edge {self.alarm_edge}) reads clear; "
                f"no localization needed")
            return self._empty_report()
        self.log.append(
            "initial alarms: "
            + ", ".join(f"{f}={'ALARM' if a else 'clear'}"
                        for f, a in sorted(self.initial_alarms.items())))

        # The suspect set starts as every node that would go dark if the
        # alarmed breaker opened: exactly the customers behind it.
        initial_suspects = suspect_nodes(self.topo, self.states, self.alarm_edge)
        self.history.append(tuple(sorted(initial_suspects)))
        for frtu in sorted(coverage0):
            self.process_reading(frtu, self.initial_alarms[frtu], coverage0[frtu])

        plan = isolate_dg_islands(self.topo, self.states)
        self.islands = list(plan.islands)
        if plan.ops:
            self.log.append(
                "isolate DG islands: "
                + ", ".join(f"{sorted(i.nodes)}" for i in plan.islands))
            self.commit_group(plan.ops)

        guard = 4 * (self.topo.n_nodes + self.topo.n_edges) + 16
        for _ in range(guard):
            ob = self.settle_obligations()
            if ob is None:
                break
            frtu = self.best_check(ob)
            if frtu is not None:
                coverage = frtu_coverage(self.topo, self.states)
                alarm, fresh = self.consult(frtu)
                if fresh:
                    self.record_check(frtu, alarm)
                    self.process_reading(frtu, alarm, coverage[frtu])
                self.snapshot()
                continue
            move = self.find_move(ob)
            if move is not None:
                to_close, to_open = move
                self.log.append(
                    f"transfer load: close edge {to_close}, open edge {to_open}")
                self.commit_group(((CLOSE, to_close), (OPEN, to_open)))
                continue
            island = self.find_restoration()
            if island is not None:
                self.restore_and_check(island)
                continue
            self.irreducible = True
            self.log.append(
                "no further reading can split the remaining suspects: "
                + str(sorted(ob.active(self.exonerated))))
            break
        else:
            raise InfeasiblePlanError("localization failed to converge")

        final = set(self.tampered)
        if self.irreducible:
            final |= self.active_union()
        self.snapshot()
        self.log.append(f"verdict: tampered node(s) {sorted(final)}")
        return LocalizationReport(
            alarm_edge=self.alarm_edge,
            initial_alarms=dict(self.initial_alarms),
            actions=tuple(self.actions),
            checks=tuple(self.checks),
            suspect_history=tuple(self.history),
            final_suspects=tuple(sorted(final)),
            islands=tuple(self.islands),
            committed_states=tuple(self.committed),
            constraint_violations=tuple(self.violations),
            irreducible=self.irreducible,
            log=tuple(self.log),
        )


def localize(
    topo: Topology,
    alarm_edge: int,
    oracle: Callable[[np.ndarray], Mapping[str, bool]],
    *,
    initial_states: np.ndarray | None = None,
) -> LocalizationReport:
    """Localize the customers behind a feeder-level discrepancy alarm.

    ``oracle`` maps a switch-state vector to per-FRTU alarm flags; in
    production that is live telemetry, in tests a metering simulation.
    The returned report carries the switching plan, every telemetry check
    it spent, and how the suspect set narrowed to the final answer.
    """
    return _Planner(topo, alarm_edge, oracle, initial_states).run()
