"""Command-line surface: reduce / check / simulate / reconstruct / generate.

Every command prints a machine-readable run report (JSON) to stdout;
diagnostics go to stderr. Exit codes: 0 success, 1 parse error, 2 internal
error, 3 failed equivalence check or oracle counterexample. Timings in the
report are the only nondeterministic fields. `reduce --batch` processes a
directory in parallel; the worker count comes from CRNLUMP_THREADS.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .ctmc import (build_generator, check_ordinary_lumpability,
                   enumerate_ball, enumerate_states)
from .generators import (SirParams, multisite_binding_model, sir_network_model,
                         sir_star_model)
from .lumping import check_equivalence, coarsest_equivalence, quotient
from .model import Multiset, Partition, RateInterval, ReactionNetwork
from .ode import (ControlSchedule, schedule_from_csv, schedule_to_csv,
                  simulate, trajectory_from_csv, trajectory_to_csv)
from .parser import (ModelDocument, ParseError, parse_edge_list, parse_model,
                     parse_partition_file, serialize_model)
from .reconstruct import reconstruct_trajectory

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_INTERNAL = 2
EXIT_CHECK_FAILED = 3


class _Phases:
    def __init__(self):
        self.entries: Dict[str, float] = {}
        self._t0 = time.perf_counter()

    def mark(self, name: str):
        now = time.perf_counter()
        self.entries[name] = round((now - self._t0) * 1000.0, 3)
        self._t0 = now


def _emit_report(report: dict, path: Optional[str]):
    text = json.dumps(report)
    print(text)
    if path:
        Path(path).write_text(text + "\n", encoding="utf-8")


def _load_document(path: str) -> ModelDocument:
    return parse_model(Path(path).read_text(encoding="utf-8"), source=path)


def _initial_partition(doc: ModelDocument, partition_file: Optional[str]) -> Partition:
    if partition_file:
        return parse_partition_file(Path(partition_file).read_text(encoding="utf-8"),
                                    doc.network)
    if doc.initial_partition is not None:
        return doc.initial_partition
    return Partition.one_block(doc.network.n_species)


def _parse_assignments(text: str, net: ReactionNetwork) -> Dict[int, float]:
    out: Dict[int, float] = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, _, value = item.partition("=")
        out[net.index_of(name.strip())] = float(value)
    return out


def cmd_reduce(args) -> int:
    if args.batch:
        return _reduce_batch(args)
    phases = _Phases()
    doc = _load_document(args.input)
    initial = _initial_partition(doc, args.partition_file)
    phases.mark("parse")
    stats: dict = {}
    part = coarsest_equivalence(doc.network, initial, tolerance=args.tolerance,
                                stats=stats)
    phases.mark("lump")
    lumped, bmap = quotient(doc.network, part, tolerance=args.tolerance)
    phases.mark("quotient")
    if args.output:
        Path(args.output).write_text(serialize_model(ModelDocument(lumped)),
                                     encoding="utf-8")
    if args.map:
        Path(args.map).write_text(
            json.dumps(bmap.to_json_dict(doc.network, part), indent=2) + "\n",
            encoding="utf-8")
    phases.mark("write")
    _emit_report({
        "command": "reduce",
        "input": {"species": doc.network.n_species,
                  "reactions": doc.network.n_reactions},
        "output": {"species": lumped.n_species, "reactions": lumped.n_reactions},
        "blocks": part.n_blocks,
        "rounds": stats.get("rounds", 0),
        "sweeps": stats.get("sweeps", 0),
        "phases_ms": phases.entries,
        "flags": {"tolerance": args.tolerance, "tolerance_used": args.tolerance > 0},
    }, args.report)
    return EXIT_OK


def _reduce_one_file(task):
    path, out_dir, tolerance = task
    try:
        doc = _load_document(path)
        initial = doc.initial_partition or Partition.one_block(doc.network.n_species)
        stats: dict = {}
        part = coarsest_equivalence(doc.network, initial, tolerance=tolerance,
                                    stats=stats)
        lumped, bmap = quotient(doc.network, part, tolerance=tolerance)
        stem = Path(path).stem
        Path(out_dir, f"{stem}.red.crn").write_text(
            serialize_model(ModelDocument(lumped)), encoding="utf-8")
        Path(out_dir, f"{stem}.map.json").write_text(
            json.dumps(bmap.to_json_dict(doc.network, part), indent=2) + "\n",
            encoding="utf-8")
        return {"file": path, "ok": True,
                "input": {"species": doc.network.n_species,
                          "reactions": doc.network.n_reactions},
                "output": {"species": lumped.n_species,
                           "reactions": lumped.n_reactions},
                "rounds": stats.get("rounds", 0)}
    except Exception as exc:  # per-file isolation
        return {"file": path, "ok": False, "error": str(exc)}


def _reduce_batch(args) -> int:
    in_dir = Path(args.batch)
    out_dir = Path(args.out_dir or in_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = sorted(str(p) for p in in_dir.glob("*.crn"))
    workers = int(os.environ.get("CRNLUMP_THREADS", os.cpu_count() or 1))
    tasks = [(f, str(out_dir), args.tolerance) for f in files]
    if workers > 1 and len(files) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_reduce_one_file, tasks))
    else:
        results = [_reduce_one_file(t) for t in tasks]
    _emit_report({"command": "reduce-batch", "files": results,
                  "flags": {"tolerance": args.tolerance,
                            "tolerance_used": args.tolerance > 0}}, args.report)
    return EXIT_OK if all(r["ok"] for r in results) else EXIT_INTERNAL


def cmd_check(args) -> int:
    phases = _Phases()
    doc = _load_document(args.model)
    part = _initial_partition(doc, args.partition_file)
    phases.mark("parse")
    equivalent = check_equivalence(doc.network, part)
    phases.mark("check")
    report = {
        "command": "check",
        "input": {"species": doc.network.n_species,
                  "reactions": doc.network.n_reactions},
        "blocks": part.n_blocks,
        "equivalent": equivalent,
        "phases_ms": phases.entries,
        "flags": {},
    }
    failed = not equivalent
    if args.oracle:
        net = doc.network
        # With an explicit initial state the oracle runs on the reachable
        # space; otherwise it enumerates the full population ball, which sees
        # every state the reaction-level criterion quantifies over.
        if args.init:
            init = Multiset((i, int(v)) for i, v in
                            _parse_assignments(args.init, net).items())
            space = enumerate_states(net, init, args.pop_bound)
        elif net.initial_state is not None:
            space = enumerate_states(net, net.initial_state, args.pop_bound)
        else:
            space = enumerate_ball(net, args.pop_bound)
        oracle = {"states": space.n_states, "truncated": space.truncated}
        report["flags"]["truncated"] = space.truncated
        for extremal in ("lower", "upper"):
            gen = build_generator(space, net, extremal)
            res = check_ordinary_lumpability(gen, space, part)
            oracle[extremal] = res.ok
            if not res.ok:
                oracle[f"{extremal}_counterexample"] = \
                    res.counterexample.to_json_dict(net)
                failed = True
        phases.mark("oracle")
        report["oracle"] = oracle
    _emit_report(report, args.report)
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def cmd_simulate(args) -> int:
    phases = _Phases()
    doc = _load_document(args.model)
    net = doc.network
    if args.schedule:
        sched = schedule_from_csv(Path(args.schedule).read_text(encoding="utf-8"))
    else:
        sched = ControlSchedule.midpoint(net)
    if args.init:
        v0 = np.zeros(net.n_species)
        for i, v in _parse_assignments(args.init, net).items():
            v0[i] = v
    elif net.initial_concentration is not None:
        v0 = np.array(net.initial_concentration)
    else:
        print("simulation needs an initial state (--init or model init)",
              file=sys.stderr)
        return EXIT_INTERNAL
    phases.mark("parse")
    traj = simulate(net, v0, sched, args.t_end, args.step)
    phases.mark("integrate")
    if args.output:
        Path(args.output).write_text(trajectory_to_csv(traj), encoding="utf-8")
    phases.mark("write")
    _emit_report({
        "command": "simulate",
        "input": {"species": net.n_species, "reactions": net.n_reactions},
        "output": {"rows": len(traj.times)},
        "phases_ms": phases.entries,
        "flags": {},
    }, args.report)
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    phases = _Phases()
    doc = _load_document(args.model)
    net = doc.network
    part = _initial_partition(doc, args.partition_file)
    lumped_traj = trajectory_from_csv(Path(args.lumped_traj).read_text(encoding="utf-8"))
    lumped_sched = schedule_from_csv(
        Path(args.lumped_schedule).read_text(encoding="utf-8"))
    if args.v0:
        v0 = np.zeros(net.n_species)
        for i, v in _parse_assignments(args.v0, net).items():
            v0[i] = v
    elif net.initial_concentration is not None:
        v0 = np.array(net.initial_concentration)
    else:
        print("reconstruction needs an initial state (--v0 or model init)",
              file=sys.stderr)
        return EXIT_INTERNAL
    phases.mark("parse")
    result = reconstruct_trajectory(net, part, lumped_traj, lumped_sched, v0)
    phases.mark("reconstruct")
    if args.output:
        Path(args.output).write_text(trajectory_to_csv(result.trajectory),
                                     encoding="utf-8")
    if args.control_out:
        Path(args.control_out).write_text(schedule_to_csv(result.schedule),
                                          encoding="utf-8")
    if args.residual_out:
        lines = ["t,residual"] + [
            f"{t!r},{r!r}" for t, r in
            zip(result.trajectory.times[:-1], result.step_residuals)]
        Path(args.residual_out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    phases.mark("write")
    _emit_report({
        "command": "reconstruct",
        "input": {"species": net.n_species, "reactions": net.n_reactions},
        "output": {"rows": len(result.trajectory.times)},
        "max_residual": result.max_residual,
        "phases_ms": phases.entries,
        "flags": {},
    }, args.report)
    return EXIT_OK


def cmd_generate(args) -> int:
    phases = _Phases()
    if args.family == "sir-star":
        params = SirParams(args.beta, args.gamma, args.eta,
                           RateInterval(args.vac_lo, args.vac_hi))
        doc = sir_star_model(args.n, params)
    elif args.family == "sir-net":
        params = SirParams(args.beta, args.gamma, args.eta,
                           RateInterval(args.vac_lo, args.vac_hi))
        graph = parse_edge_list(Path(args.edge_list).read_text(encoding="utf-8"),
                                undirected=args.undirected)
        doc = sir_network_model(graph, params, args.uncertainty_halfwidth)
    elif args.family == "multisite":
        doc = multisite_binding_model(
            args.n,
            RateInterval(args.assoc_lo, args.assoc_hi),
            RateInterval(args.dissoc_lo, args.dissoc_hi))
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(args.family)
    phases.mark("generate")
    Path(args.output).write_text(serialize_model(doc), encoding="utf-8")
    phases.mark("write")
    _emit_report({
        "command": "generate",
        "output": {"species": doc.network.n_species,
                   "reactions": doc.network.n_reactions},
        "phases_ms": phases.entries,
        "flags": {},
    }, args.report)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="crnlump",
        description="Lumping and control toolkit for interval-rate "
                    "mass-action reaction networks")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", help="compute the coarsest species "
                                      "equivalence and write the quotient")
    p.add_argument("-i", "--input", help="model file")
    p.add_argument("-o", "--output", help="reduced model file")
    p.add_argument("--map", help="block map JSON output")
    p.add_argument("--partition-file", help="initial partition override")
    p.add_argument("--tolerance", type=float, default=0.0,
                   help="absolute rate-comparison tolerance (soundness-"
                        "weakening; default 0 = exact)")
    p.add_argument("--batch", help="reduce every *.crn file in a directory")
    p.add_argument("--out-dir", help="output directory for --batch")
    p.add_argument("--report", help="write the run report JSON to a file")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("check", help="check a partition for species "
                                     "equivalence, optionally against the "
                                     "state-space oracle")
    p.add_argument("model")
    p.add_argument("--partition-file")
    p.add_argument("--oracle", action="store_true",
                   help="also check ordinary lumpability of both extremal "
                        "generators on the enumerated space")
    p.add_argument("--pop-bound", type=int, default=4)
    p.add_argument("--init", help="initial state, e.g. 'A=1,B=2'")
    p.add_argument("--report")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="integrate the deterministic model")
    p.add_argument("model")
    p.add_argument("--schedule", help="control schedule CSV")
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--init", help="initial concentrations, e.g. 'A=1,B=0.5'")
    p.add_argument("-o", "--output", help="trajectory CSV")
    p.add_argument("--report")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct",
                       help="recover original controls from a lumped "
                            "trajectory and schedule")
    p.add_argument("model")
    p.add_argument("--partition-file")
    p.add_argument("--lumped-traj", required=True)
    p.add_argument("--lumped-schedule", required=True)
    p.add_argument("--v0", help="initial concentrations, e.g. 'A=1,B=0.5'")
    p.add_argument("-o", "--output", help="reconstructed trajectory CSV")
    p.add_argument("--control-out", help="realized control schedule CSV")
    p.add_argument("--residual-out", help="per-step residual CSV")
    p.add_argument("--report")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("generate", help="write a bundled case-study model")
    p.add_argument("family", choices=["sir-star", "sir-net", "multisite"])
    p.add_argument("--n", type=int, help="locations (sir-star) or sites (multisite)")
    p.add_argument("--beta", type=float, help="infection scaling")
    p.add_argument("--gamma", type=float, help="recovery rate")
    p.add_argument("--eta", type=float, help="immunity-loss rate")
    p.add_argument("--vac-lo", type=float, default=0.0)
    p.add_argument("--vac-hi", type=float, default=1.0)
    p.add_argument("--edge-list", help="edge list file (sir-net)")
    p.add_argument("--undirected", action="store_true")
    p.add_argument("--uncertainty-halfwidth", type=float)
    p.add_argument("--assoc-lo", type=float, default=9.95)
    p.add_argument("--assoc-hi", type=float, default=10.05)
    p.add_argument("--dissoc-lo", type=float, default=0.05)
    p.add_argument("--dissoc-hi", type=float, default=0.15)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_generate)
    return top


def run(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "generate":
        needs_n = args.family in ("sir-star", "multisite")
        if needs_n and args.n is None:
            print("generate: --n is required", file=sys.stderr)
            return EXIT_INTERNAL
        if args.family.startswith("sir") and None in (args.beta, args.gamma, args.eta):
            print("generate: --beta, --gamma and --eta are required for SIR models",
                  file=sys.stderr)
            return EXIT_INTERNAL
        if args.family == "sir-net" and not args.edge_list:
            print("generate: --edge-list is required for sir-net", file=sys.stderr)
            return EXIT_INTERNAL
    if args.command == "reduce" and not args.batch and not args.input:
        print("reduce: -i/--input is required", file=sys.stderr)
        return EXIT_INTERNAL
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main():  # console entry point
    sys.exit(run())


if __name__ == "__main__":
    main()
