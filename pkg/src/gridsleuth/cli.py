"""Command-line interface.

Subcommands:

- ``topo validate``: structural and operating-state checks on a topology
- ``topo matrices``: dump incidence and adjacency matrices (dense + sparse)
- ``topo energize``: print the energization vector for a switch string
- ``sim run``: simulate metering intervals, write the reading history CSV
- ``localize run``: run tamper localization against the simulated feeder
- ``score``: rank a node's meters from a reading history

Exit codes: 0 success, 1 unreadable or malformed input, 2 violated network
invariant (also a ``--check`` mismatch), 3 infeasible switching plan,
4 contradictory telemetry.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .energize import energized_nodes, frtu_coverage
from .errors import (
    DimensionMismatchError,
    GridSleuthError,
    InfeasiblePlanError,
    NotABreakerError,
    OracleInconsistentError,
    TopologyError,
    UnknownFrtuError,
    UnknownNodeError,
    ZeroAggregateError,
)
from .metering import (
    Scenario,
    SimulationOracle,
    detect,
    feeder_discrepancy,
    load_scenario,
    simulate_interval,
)
from .planner import localize
from .scoring import (
    DEFAULT_DEVIATION_THRESHOLD,
    rank_meters,
    score_window,
)
from .topology import (
    Topology,
    adjacency_from_incidence,
    load_topology,
    states_from_string,
    states_to_string,
    validate_operating_state,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INVARIANT = 2
EXIT_INFEASIBLE = 3
EXIT_INCONSISTENT = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridsleuth",
        description="Localize tampered smart meters in a radial distribution network.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    topo = sub.add_parser("topo", help="topology inspection")
    topo_sub = topo.add_subparsers(dest="topo_command", required=True)

    p_validate = topo_sub.add_parser("validate", help="check network invariants")
    p_validate.add_argument("topology", help="topology JSON file")
    p_validate.add_argument("--vr", help="switch states to validate (default: normal)")

    p_matrices = topo_sub.add_parser("matrices", help="write matrix CSV files")
    p_matrices.add_argument("topology", help="topology JSON file")
    p_matrices.add_argument("--vr", help="switch states for the adjacency (default: all closed)")
    p_matrices.add_argument("--out-dir", default=".", help="output directory")

    p_energize = topo_sub.add_parser("energize", help="print the energization vector")
    p_energize.add_argument("topology", help="topology JSON file")
    p_energize.add_argument("--vr", required=True, help="switch states, e.g. 1110111")

    sim = sub.add_parser("sim", help="metering simulation")
    sim_sub = sim.add_subparsers(dest="sim_command", required=True)
    p_sim = sim_sub.add_parser("run", help="simulate intervals and write the history CSV")
    p_sim.add_argument("scenario", help="scenario JSON file")
    p_sim.add_argument("--intervals", type=int, help="override the scenario interval count")
    p_sim.add_argument("--seed", type=int, help="override the scenario seed")
    p_sim.add_argument("--out", default="intervals.csv", help="history CSV path")

    loc = sub.add_parser("localize", help="tamper localization")
    loc_sub = loc.add_subparsers(dest="localize_command", required=True)
    p_loc = loc_sub.add_parser("run", help="localize the scenario's feeder alarm")
    p_loc.add_argument("scenario", help="scenario JSON file")
    p_loc.add_argument("--alarm-edge", type=int, help="override the scenario alarm edge")
    p_loc.add_argument("--seed", type=int, help="override the scenario seed")
    p_loc.add_argument(
        "--check", action="store_true",
        help="verify the verdict against the scenario ground truth and "
             "re-validate every committed state")
    p_loc.add_argument("--out-dir", default=".", help="report output directory")

    p_score = sub.add_parser("score", help="rank a node's meters from a history CSV")
    p_score.add_argument("scenario", help="scenario JSON file (baseline consumption)")
    p_score.add_argument("--history", required=True, help="reading history CSV from 'sim run'")
    p_score.add_argument("--node", type=int, required=True, help="localized node id")
    p_score.add_argument(
        "--deviation-threshold", type=float, default=DEFAULT_DEVIATION_THRESHOLD,
        help="fractional deviation from the historical median that flags a reading")
    p_score.add_argument("--out", default="scores.csv", help="scoring CSV path")
    return parser


def _effective_seed(file_seed: int, flag_seed: int | None) -> int:
    env = os.environ.get("GRIDSLEUTH_SEED")
    if env is not None:
        return int(env)
    if flag_seed is not None:
        return flag_seed
    return file_seed


def _load_topology_checked(path: str) -> Topology:
    return load_topology(path)


def cmd_topo_validate(args: argparse.Namespace) -> int:
    topo = _load_topology_checked(args.topology)
    print(f"structure: ok ({topo.n_nodes} nodes, {topo.n_edges} edges)")
    states = (
        states_from_string(args.vr, topo) if args.vr else topo.normal_states()
    )
    result = validate_operating_state(topo, states)
    print(f"switch states: {states_to_string(states)}")
    print(f"loop check: {'LOOP' if result.has_loop else 'radial'}")
    print(f"dark loads: {sorted(result.dark_loads) if result.dark_loads else 'none'}")
    print(
        "dg islands: "
        + (", ".join(str(sorted(i)) for i in result.dg_islands) or "none"))
    if result.violations:
        for v in result.violations:
            print(f"violation: {v}")
        return EXIT_INVARIANT
    print("operating state: ok")
    return EXIT_OK


def _write_dense(path: Path, matrix: np.ndarray, col_ids: list[int]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node"] + [str(c) for c in col_ids])
        for i, row in enumerate(matrix, start=1):
            writer.writerow([str(i)] + [str(int(x)) for x in row])


def _write_sparse(path: Path, matrix: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "value"])
        rows, cols = np.nonzero(matrix)
        for r, c in zip(rows, cols):
            writer.writerow([str(r + 1), str(c + 1), str(int(matrix[r, c]))])


def cmd_topo_matrices(args: argparse.Namespace) -> int:
    topo = _load_topology_checked(args.topology)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    incidence = topo.incidence()
    if args.vr:
        states = states_from_string(args.vr, topo)
    else:
        states = np.ones(topo.n_edges, dtype=np.uint8)
    adjacency = adjacency_from_incidence(incidence, states)
    _write_dense(out / "incidence.csv", incidence, [e.id for e in topo.edges])
    _write_sparse(out / "incidence_sparse.csv", incidence)
    _write_dense(out / "adjacency.csv", adjacency, [n.id for n in topo.nodes])
    _write_sparse(out / "adjacency_sparse.csv", adjacency)
    print(f"incidence: {incidence.shape[0]}x{incidence.shape[1]}, "
          f"{int(incidence.sum())} entries")
    print(f"adjacency: {adjacency.shape[0]}x{adjacency.shape[1]}, "
          f"{int(adjacency.sum())} entries under {states_to_string(states)}")
    print(f"wrote 4 files to {out}")
    return EXIT_OK


def cmd_topo_energize(args: argparse.Namespace) -> int:
    topo = _load_topology_checked(args.topology)
    states = states_from_string(args.vr, topo)
    vf = energized_nodes(topo, states)
    print(states_to_string(vf))
    return EXIT_OK


def _history_rows(scenario: Scenario, seed: int, intervals: int) -> list[dict]:
    topo = scenario.topology
    states = topo.normal_states()
    coverage = frtu_coverage(topo, states)
    node_frtu = {
        node: frtu for frtu, nodes in sorted(coverage.items()) for node in nodes
    }
    rows: list[dict] = []
    for k in range(intervals):
        interval = simulate_interval(
            topo, states, scenario.meters, seed,
            noise=scenario.noise, loss_factor=scenario.loss_factor, index=k)
        frtu_kwh = {fr.frtu: fr.aggregate_kwh for fr in interval.frtu_readings}
        for reading in interval.readings:
            frtu = node_frtu.get(reading.node, "")
            rows.append({
                "interval": k,
                "meter_id": reading.meter_id,
                "node": reading.node,
                "true_kwh": f"{reading.true_kwh:.6f}",
                "reported_kwh": (
                    "" if reading.reported_kwh is None
                    else f"{reading.reported_kwh:.6f}"),
                "frtu": frtu,
                "frtu_kwh": f"{frtu_kwh[frtu]:.6f}" if frtu else "",
            })
    return rows


def cmd_sim_run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    seed = _effective_seed(scenario.seed, args.seed)
    intervals = args.intervals if args.intervals is not None else scenario.intervals
    if intervals <= 0:
        raise DimensionMismatchError(f"interval count must be positive, got {intervals}")
    rows = _history_rows(scenario, seed, intervals)
    fieldnames = [
        "interval", "meter_id", "node", "true_kwh", "reported_kwh", "frtu", "frtu_kwh",
    ]
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)

    topo = scenario.topology
    states = topo.normal_states()
    last = simulate_interval(
        topo, states, scenario.meters, seed,
        noise=scenario.noise, loss_factor=scenario.loss_factor, index=0)
    alarmed = [
        fr.frtu for fr in last.frtu_readings
        if detect(feeder_discrepancy(last, fr.frtu), scenario.threshold)
    ]
    print(f"wrote {len(rows)} rows ({intervals} intervals) to {out}")
    print("alarms at interval 0: " + (", ".join(alarmed) if alarmed else "none"))
    return EXIT_OK


def cmd_localize_run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    seed = _effective_seed(scenario.seed, args.seed)
    alarm_edge = args.alarm_edge if args.alarm_edge is not None else scenario.alarm_edge
    if alarm_edge is None:
        raise UnknownFrtuError(
            "no alarm edge: pass --alarm-edge or set it in the scenario")
    topo = scenario.topology
    if not 1 <= alarm_edge <= topo.n_edges:
        raise NotABreakerError(
            f"alarm edge {alarm_edge} does not exist (edges run 1..{topo.n_edges})")
    oracle = SimulationOracle(
        topo, scenario.meters, seed,
        noise=scenario.noise, loss_factor=scenario.loss_factor,
        threshold=scenario.threshold)
    report = localize(topo, alarm_edge, oracle)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / "localization_report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    log_path = out / "localization_steps.log"
    with open(log_path, "w", encoding="utf-8") as fh:
        for line in report.log:
            fh.write(line + "\n")
    for line in report.log:
        print(line)
    print(f"wrote {report_path} and {log_path}")

    if args.check:
        for bits in report.committed_states:
            result = validate_operating_state(topo, states_from_string(bits, topo))
            if result.violations:
                print(f"check: committed state {bits} violates operating rules")
                return EXIT_INVARIANT
        truth = tuple(sorted(scenario.ground_truth))
        if tuple(report.final_suspects) != truth:
            print(f"check: verdict {list(report.final_suspects)} does not match "
                  f"ground truth {list(truth)}")
            return EXIT_INVARIANT
        print("check: verdict matches ground truth; all committed states valid")
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    base_by_meter = {m.meter_id: m for m in scenario.meters}

    per_meter: dict[str, dict[int, float | None]] = {}
    meter_node: dict[str, int] = {}
    try:
        with open(args.history, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            required = {"interval", "meter_id", "node", "reported_kwh"}
            if reader.fieldnames is None or not required <= set(reader.fieldnames):
                raise ValueError(
                    f"history CSV must carry columns {sorted(required)}")
            for row in reader:
                meter_id = row["meter_id"]
                node = int(row["node"])
                k = int(row["interval"])
                reported = row["reported_kwh"]
                meter_node[meter_id] = node
                per_meter.setdefault(meter_id, {})[k] = (
                    None if reported == "" else float(reported))
    except (KeyError, ValueError, TypeError) as exc:
        raise ValueError(f"malformed history CSV {args.history}: {exc}") from exc

    entries = []
    for meter_id in sorted(per_meter):
        if meter_node[meter_id] != args.node:
            continue
        series = per_meter[meter_id]
        window = [series[k] for k in sorted(series)]
        meter = base_by_meter.get(meter_id)
        if meter is None:
            raise ValueError(
                f"meter {meter_id} appears in the history but not in the scenario")
        historical = [meter.base_load_kwh] * max(len(window), 1)
        entries.append(score_window(
            meter_id, args.node, historical, window,
            deviation_threshold=args.deviation_threshold))

    ranked = rank_meters(args.node, entries)
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["meter_id", "node", "s_a", "p_a", "index", "rank"])
        for rank, entry in enumerate(ranked, start=1):
            writer.writerow([
                entry.meter_id,
                str(entry.node),
                f"{entry.score.value:.6f}",
                f"{entry.probability.value:.6f}",
                f"{entry.index:.6f}",
                str(rank),
            ])
    print(f"wrote {len(ranked)} meter scores to {out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        ("topo", "validate"): cmd_topo_validate,
        ("topo", "matrices"): cmd_topo_matrices,
        ("topo", "energize"): cmd_topo_energize,
        ("sim", "run"): cmd_sim_run,
        ("localize", "run"): cmd_localize_run,
    }
    if args.command == "score":
        handler = cmd_score
    else:
        subcommand = getattr(args, f"{args.command}_command")
        handler = handlers[(args.command, subcommand)]
    try:
        return handler(args)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (KeyError, ValueError, TypeError) as exc:
        print(f"error: malformed input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DimensionMismatchError, NotABreakerError, UnknownNodeError,
            UnknownFrtuError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InfeasiblePlanError as exc:
        print(f"error: infeasible plan: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OracleInconsistentError as exc:
        print(f"error: contradictory telemetry: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except (TopologyError, ZeroAggregateError, GridSleuthError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    raise SystemExit(main())
