"""Command-line front end.

Every subcommand reads input files, writes output files atomically, and
prints a report to stdout (JSON by default, ``--format text`` for a
summary).  Exit codes: 0 success, 2 usage error, 3 a domain precondition
failed (the message names it), 4 unexpected internal failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import fileio, oracle, refdata
from .errors import BellSeriesError, PreconditionError
from .model import (
    PAIRINGS,
    RecordedRun,
    Schedule,
    SeriesTable,
    block_halves,
    random_per_slot,
    schedule_from_json,
    table_from_run,
)
from .sica import (
    CompleteTable,
    CondensedTable,
    apply_plan,
    build_complete_table,
    check_sica,
    condense,
    fill_counterfactual,
    reorder_to_sica,
)
from .simulate import DEFAULT_ANGLES, SourceConfig, simulate
from .stats import correlation_report, run_detector_efficiencies

_FIGURE_NAMES = ("fig2", "fig3", "fig6-black", "fig6-red", "fig7", "fig8", "fig9")


def _split_seed(seed: int) -> tuple[int, int]:
    """One user seed feeds two independent streams: schedule, then source."""
    children = np.random.SeedSequence(seed).spawn(2)
    return tuple(int(c.generate_state(1, np.uint64)[0]) for c in children)


def _make_schedule(spec: str, slots: int | None, seed: int | None) -> Schedule:
    if spec == "block":
        if slots is None:
            raise PreconditionError("--schedule block needs --slots")
        return block_halves(slots)
    if spec == "random":
        if slots is None or seed is None:
            raise PreconditionError("--schedule random needs --slots and --seed")
        return random_per_slot(slots, seed)
    if spec.startswith("file:"):
        path = spec[len("file:"):]
        with open(path, "r", encoding="utf-8") as fp:
            return schedule_from_json(json.load(fp))
    raise PreconditionError(
        f"unknown schedule {spec!r}: expected block, random, or file:<path>"
    )


def _load_input(path: str):
    """A table file is a single JSON object; anything else is an event log."""
    try:
        with open(path, "r", encoding="utf-8") as fp:
            text = fp.read()
    except OSError as exc:
        raise PreconditionError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = None
    if isinstance(data, dict) and "slots" in data:
        table = fileio.table_from_json(data)
        provenance = fileio.provenance_from_json(data)
        return table, provenance, None
    run = fileio.read_run_file(path)
    return table_from_run(run), None, run


def _parse_free_choices(text: str, quarter: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise PreconditionError(
            "--free-choices wants two comma-separated hex words, one per station row"
        )
    words = []
    for part in parts:
        try:
            words.append(int(part, 16))
        except ValueError:
            raise PreconditionError(f"free-choice word {part!r} is not hexadecimal")
    for w in words:
        if w < 0 or w >> quarter:
            raise PreconditionError(
                f"free-choice word 0x{w:x} does not fit {quarter} bits"
            )
    return tuple(
        tuple((w >> (quarter - 1 - j)) & 1 for j in range(quarter)) for w in words
    )


def _parse_constraint(text: str):
    if text in ("none", ""):
        return None
    if text == "equal-nc":
        return "equal_nc"
    if text == "sica":
        return "sica"
    for prefix, kind in (
        ("eta>=", "eta_at_least"),
        ("eta<=", "eta_at_most"),
        ("eta<", "eta_below"),
    ):
        if text.startswith(prefix):
            return (kind, Fraction(text[len(prefix):]))
    raise PreconditionError(
        f"unknown constraint {text!r}: expected none, equal-nc, sica, "
        "eta>=Q, eta<=Q, or eta<Q"
    )


def _frac_str(node) -> str:
    if node is None:
        return "undefined"
    return f"{node['num']}/{node['den']} = {node['decimal']:.4f}"


def _render_text(report: dict) -> str:
    lines = [f"slots: {report['slots']}"
             + (" (fully measured)" if report["fully_measured"] else "")]
    for key, stats in report["pairings"].items():
        lines.append(f"E({key}) = {_frac_str(stats['e'])}  [N_c = {stats['n_c']}]")
    s = report["chsh"]["s"]
    if s is None:
        lines.append("S undefined (some pairing has no coincidences)")
    else:
        lines.append(f"S = {_frac_str(s)}")
    lines.append(f"J = {report['clauser_horne']['j']}")
    eff = report["efficiency"]
    lines.append(
        f"eta = {_frac_str(eff['eta'])}; S*eta = {_frac_str(eff['s_times_eta'])}; "
        f"verdict: {eff['verdict']}"
    )
    if "cardinality_bound" in report:
        cb = report["cardinality_bound"]
        lines.append(
            f"counting bound: {cb['lhs']} <= {cb['rhs']}"
            + (" (holds)" if cb["holds"] else " (VIOLATED)")
        )
    return "\n".join(lines) + "\n"


def _emit(args, report: dict) -> None:
    if getattr(args, "output_report", None):
        fileio.write_json_atomic(args.output_report, report)
    if args.format == "text":
        sys.stdout.write(_render_text(report))
    else:
        json.dump(report, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")


def _print_json(data: dict, args) -> None:
    if args.format == "text":
        for key, value in data.items():
            if isinstance(value, (dict, list)):
                value = json.dumps(value, sort_keys=True)
            sys.stdout.write(f"{key}: {value}\n")
    else:
        json.dump(data, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_simulate(args) -> int:
    schedule_seed, source_seed = _split_seed(args.seed)
    schedule = _make_schedule(args.schedule, args.slots, schedule_seed)
    instructions = None
    if args.model == "deterministic":
        if not args.input:
            raise PreconditionError(
                "--model deterministic reads its instruction table from --input"
            )
        table, _, _ = _load_input(args.input)
        instructions = table
    angles = tuple(float(x) for x in args.angles.split(","))
    if len(angles) != 4:
        raise PreconditionError("--angles wants four comma-separated degrees")
    config = SourceConfig(
        model=args.model,
        schedule=schedule,
        seed=source_seed,
        angles=angles,
        eta=args.eta,
        instructions=instructions,
    )
    run = simulate(config)
    fileio.write_run_file(run, args.output)
    report = {
        "command": "simulate",
        "output": args.output,
        "seed": args.seed,
        "slots": run.slots,
        "analysis": correlation_report(table_from_run(run)),
    }
    _print_json(report, args)
    return 0


def _cmd_analyze(args) -> int:
    table, _, run = _load_input(args.input)
    report = correlation_report(table)
    if run is not None:
        report["detectors"] = {
            label: {
                "singles": rec["singles"],
                "coincidences": rec["coincidences"],
                "efficiency": (
                    None
                    if rec["efficiency"] is None
                    else {
                        "num": rec["efficiency"].numerator,
                        "den": rec["efficiency"].denominator,
                        "decimal": float(rec["efficiency"]),
                    }
                ),
            }
            for label, rec in run_detector_efficiencies(run).items()
        }
    args.output_report = args.output
    _emit(args, report)
    return 0


def _table_schedule(args, table: SeriesTable) -> Schedule | None:
    if not args.schedule:
        return None
    if args.schedule == "block":
        return block_halves(table.slots)
    if args.schedule.startswith("file:"):
        return _make_schedule(args.schedule, None, None)
    raise PreconditionError(
        "tables take --schedule block or file:<path>; random needs simulate"
    )


def _cmd_sica_check(args) -> int:
    table, _, run = _load_input(args.input)
    schedule = run.schedule if run is not None else _table_schedule(args, table)
    verdict = check_sica(table, schedule)
    report = {
        "command": "sica-check",
        "holds": verdict.holds,
        "note": verdict.note,
        "witnesses": [
            {
                "row": w.row,
                "rule": w.rule,
                "detail": w.detail,
                "position": w.position,
                "slot_left": w.slot_left,
                "slot_right": w.slot_right,
            }
            for w in verdict.witnesses
        ],
    }
    if args.output:
        fileio.write_json_atomic(args.output, report)
    _print_json(report, args)
    return 0


def _cmd_sica_reorder(args) -> int:
    _, _, run = _load_input(args.input)
    if run is None:
        raise PreconditionError("reordering works on event logs, not full tables")
    outcome = reorder_to_sica(run, budget=args.budget)
    report = {
        "command": "sica-reorder",
        "success": outcome.success,
        "best_keepable": outcome.best_keepable,
        "required": outcome.required,
    }
    if outcome.success:
        rearranged = apply_plan(run, outcome.plan)
        report["discarded_slots"] = list(outcome.plan.discarded_slots)
        report["kept_per_block"] = outcome.plan.kept_per_block
        if args.output:
            fileio.write_run_file(rearranged, args.output)
            report["output"] = args.output
        report["analysis"] = correlation_report(table_from_run(rearranged))
    else:
        report["obstruction"] = outcome.obstruction
    _print_json(report, args)
    return 0


def _cmd_sica_condense(args) -> int:
    table, provenance, run = _load_input(args.input)
    if run is not None:
        condensed = condense(table, run.schedule)
        out_prov = None
    elif provenance is not None:
        schedule = _table_schedule(args, table) or block_halves(table.slots)
        complete = CompleteTable(table, provenance, schedule)
        result = complete.condense()
        condensed, out_prov = result.table, result.provenance
    else:
        condensed = condense(table, _table_schedule(args, table))
        out_prov = None
    if args.output:
        fileio.write_json_atomic(
            args.output, fileio.table_to_json(condensed, out_prov)
        )
    report = {
        "command": "sica-condense",
        "slots": condensed.slots,
        "analysis": correlation_report(condensed),
    }
    _print_json(report, args)
    return 0


def _cmd_sica_complete(args) -> int:
    _, _, run = _load_input(args.input)
    if run is None:
        raise PreconditionError("completion works on event logs, not full tables")
    if run.slots % 4 != 0:
        raise PreconditionError(
            f"completion needs a slot count divisible by 4, got {run.slots}"
        )
    bits_a, bits_ap = _parse_free_choices(args.free_choices, run.slots // 4)
    result = build_complete_table(run, bits_a, bits_ap, budget=args.budget)
    complete = result.complete
    if args.output:
        fileio.write_json_atomic(
            args.output, fileio.table_to_json(complete.table, complete.provenance)
        )
    report = {
        "command": "sica-complete",
        "slots": complete.table.slots,
        "discarded_slots": list(result.discarded_slots),
        "note": result.note,
        "identity_holds": complete.check().holds,
        "factual_correlations": {
            p.key: {
                "n_c": st.n_c,
                "e": None if st.e is None else {
                    "num": st.e.numerator,
                    "den": st.e.denominator,
                    "decimal": float(st.e),
                },
            }
            for p, st in complete.factual_correlations().items()
        },
        "analysis": correlation_report(complete.table),
    }
    _print_json(report, args)
    return 0


def _cmd_fill(args) -> int:
    _, _, run = _load_input(args.input)
    if run is None:
        raise PreconditionError("fill works on event logs, not full tables")
    if args.policy == "zeros":
        table = fill_counterfactual(run, "zeros")
        provenance = None
    else:
        bits_a, bits_ap = _parse_free_choices(args.free_choices, run.slots // 4)
        result = fill_counterfactual(
            run, "sica", bits_a, bits_ap, budget=args.budget
        )
        table, provenance = result.complete.table, result.complete.provenance
    if args.output:
        fileio.write_json_atomic(args.output, fileio.table_to_json(table, provenance))
    report = {
        "command": "fill",
        "policy": args.policy,
        "slots": table.slots,
        "analysis": correlation_report(table),
    }
    _print_json(report, args)
    return 0


def _spec_json(spec: oracle.EnumSpec) -> dict:
    constraint = spec.constraint
    if isinstance(constraint, tuple):
        constraint = {"kind": constraint[0], "threshold": str(constraint[1])}
    return {
        "slots": spec.slots,
        "alphabet": spec.alphabet,
        "constraint": constraint,
        "budget": spec.budget,
        "space_size": spec.space_size,
    }


def _cmd_oracle(args) -> int:
    spec = oracle.EnumSpec(
        slots=args.slots,
        alphabet=args.alphabet,
        constraint=_parse_constraint(args.constraint),
        budget=args.budget,
    )
    if args.objective == "cardinality":
        sweep = oracle.sweep_cardinality_bound(spec)
        report = {
            "command": "oracle",
            "objective": "cardinality",
            "spec": _spec_json(spec),
            "tables_scanned": sweep.tables_scanned,
            "violations": sweep.violations,
            "min_slack": sweep.min_slack,
            "witness": (
                None if sweep.witness is None else fileio.table_to_json(sweep.witness)
            ),
            "elapsed_s": round(sweep.elapsed, 3),
        }
    else:
        op = {
            "chsh": oracle.max_chsh,
            "ch": oracle.max_clauser_horne,
            "s-eta": oracle.max_s_eta,
        }[args.objective]
        result = op(spec, witness_cap=args.witnesses)
        report = {
            "command": "oracle",
            "objective": args.objective,
            "spec": _spec_json(spec),
            "max": (
                None
                if result.max_value is None
                else {
                    "num": result.max_value.numerator,
                    "den": result.max_value.denominator,
                    "decimal": float(result.max_value),
                }
            ),
            "tables_scanned": result.tables_scanned,
            "admissible": result.admissible,
            "witnesses": [fileio.table_to_json(w) for w in result.witnesses],
            "elapsed_s": round(result.elapsed, 3),
            "note": result.note,
        }
    if args.output:
        fileio.write_json_atomic(args.output, report)
    _print_json(report, args)
    return 0


def _figure_artifacts(name: str):
    built = refdata.DATASETS[name]()
    if isinstance(built, CompleteTable):
        table_json = fileio.table_to_json(built.table, built.provenance)
        stats = correlation_report(built.table)
        stats["identity_holds"] = built.check().holds
        stats["factual_correlations"] = {
            p.key: {"n_c": st.n_c, "num": st.e.numerator, "den": st.e.denominator}
            for p, st in built.factual_correlations().items()
            if st.e is not None
        }
        return ("table", table_json, stats)
    if isinstance(built, CondensedTable):
        return ("table", fileio.table_to_json(built.table, built.provenance),
                correlation_report(built.table))
    if isinstance(built, SeriesTable):
        return ("table", fileio.table_to_json(built), correlation_report(built))
    if isinstance(built, RecordedRun):
        stats = correlation_report(table_from_run(built))
        outcome = reorder_to_sica(built)
        stats["reorder"] = {
            "success": outcome.success,
            "best_keepable": outcome.best_keepable,
            "required": outcome.required,
        }
        if not outcome.success:
            stats["reorder"]["obstruction"] = outcome.obstruction
        return ("run", built, stats)
    raise AssertionError(f"unhandled dataset type for {name}")


def _cmd_figures(args) -> int:
    names = _FIGURE_NAMES if args.which == "all" else (args.which,)
    for name in names:
        if name not in refdata.DATASETS:
            raise PreconditionError(
                f"unknown dataset {name!r}: expected one of "
                + ", ".join(sorted(refdata.DATASETS))
            )
    os.makedirs(args.output, exist_ok=True)
    written = []
    for name in names:
        kind, payload, stats = _figure_artifacts(name)
        if kind == "table":
            path = os.path.join(args.output, f"{name}.table.json")
            fileio.write_json_atomic(path, payload)
        else:
            path = os.path.join(args.output, f"{name}.events.jsonl")
            fileio.write_run_file(payload, path)
        stats_path = os.path.join(args.output, f"{name}.stats.json")
        fileio.write_json_atomic(stats_path, stats)
        written.extend([path, stats_path])
    _print_json({"command": "figures", "written": written}, args)
    return 0


# ---------------------------------------------------------------------------
# Parser


def _add_common(sub, *, output_help: str) -> None:
    sub.add_argument("--output", help=output_help)
    sub.add_argument(
        "--format", choices=("json", "text"), default="json",
        help="stdout report format",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bellseries",
        description="Two-station outcome-series toolkit: simulate, analyze, "
        "check and repair the series identity, and verify bounds exhaustively.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("simulate", help="generate a recorded run")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--slots", type=int, required=True)
    p.add_argument("--schedule", default="block", help="block, random, or file:<path>")
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--angles", default=",".join(str(a) for a in DEFAULT_ANGLES))
    p.add_argument("--model", choices=("quantum", "deterministic"), default="quantum")
    p.add_argument("--input", help="instruction table for --model deterministic")
    _add_common(p, output_help="event log to write")
    p.set_defaults(func=_cmd_simulate)
    p._required_output = True

    p = subs.add_parser("analyze", help="statistics report for a run or table")
    p.add_argument("--input", required=True)
    _add_common(p, output_help="report JSON to write")
    p.set_defaults(func=_cmd_analyze)

    p = subs.add_parser("sica-check", help="series-identity verdict")
    p.add_argument("--input", required=True)
    p.add_argument("--schedule", help="block or file:<path>, for full tables")
    _add_common(p, output_help="verdict JSON to write")
    p.set_defaults(func=_cmd_sica_check)

    p = subs.add_parser("sica-reorder", help="identity-restoring rearrangement")
    p.add_argument("--input", required=True)
    p.add_argument("--budget", type=int, help="max slots to discard per block")
    _add_common(p, output_help="rearranged event log to write")
    p.set_defaults(func=_cmd_sica_reorder)

    p = subs.add_parser("sica-condense", help="halve an identity-satisfying table")
    p.add_argument("--input", required=True)
    p.add_argument("--schedule", help="block or file:<path>, for full tables")
    _add_common(p, output_help="condensed table JSON to write")
    p.set_defaults(func=_cmd_sica_condense)

    p = subs.add_parser(
        "sica-complete", help="fill counterfactual cells so the identity holds"
    )
    p.add_argument("--input", required=True)
    p.add_argument(
        "--free-choices", required=True,
        help="two hex words, one per station row (e.g. 1,2)",
    )
    p.add_argument("--budget", type=int, help="max slots to trim per quarter")
    _add_common(p, output_help="complete table JSON to write")
    p.set_defaults(func=_cmd_sica_complete)

    p = subs.add_parser("fill", help="fill unmeasured cells by policy")
    p.add_argument("policy", choices=("zeros", "sica"))
    p.add_argument("--input", required=True)
    p.add_argument("--free-choices", help="for the sica policy")
    p.add_argument("--budget", type=int)
    _add_common(p, output_help="table JSON to write")
    p.set_defaults(func=_cmd_fill)

    p = subs.add_parser("oracle", help="exhaustive sweep at small sizes")
    p.add_argument(
        "--objective", required=True, choices=("chsh", "ch", "s-eta", "cardinality")
    )
    p.add_argument("--slots", type=int, required=True)
    p.add_argument("--alphabet", choices=("pm", "pmz"), default="pm")
    p.add_argument(
        "--constraint", default="none",
        help="none, equal-nc, sica, eta>=Q, eta<=Q, or eta<Q",
    )
    p.add_argument("--budget", type=int, default=oracle.DEFAULT_BUDGET)
    p.add_argument("--witnesses", type=int, default=3)
    _add_common(p, output_help="sweep report JSON to write")
    p.set_defaults(func=_cmd_oracle)

    p = subs.add_parser("figures", help="regenerate the worked-example datasets")
    p.add_argument("--which", default="all")
    p.add_argument("--output", default=".", help="directory for the artifacts")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.set_defaults(func=_cmd_figures)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    if args.command == "simulate" and not args.output:
        print("error: simulate needs --output for the event log", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except BellSeriesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:
        print(f"internal error: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
