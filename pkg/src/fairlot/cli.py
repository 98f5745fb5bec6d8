"""Batch command-line front end.

Subcommands: gen, run, check, verify, replay. Exit codes are stable:
0 success or claim confirmed, 1 a requested property fails or a
deviation is found, 2 usage or instance-kind errors, 3 an enumeration
or support cap was exceeded. All randomness flows from an explicit
--seed flag; outputs for equal inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import generate, mechanisms, oracle, properties, serial
from .core import FairlotError, ValidationError, validate_allocation
from .generate import InvalidSpec
from .mechanisms import SupportTooLarge, WrongInstanceKind
from .oracle import EnumerationTooLarge
from .properties import Notion, Verdict

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_CAP = 3


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)


def _machine(data: dict) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def _load_document(path: str) -> serial.InstanceDocument:
    with open(path, "r", encoding="utf-8") as handle:
        return serial.parse_document(handle.read())


def _cmd_gen(args: argparse.Namespace) -> int:
    doc = generate.generate_document(
        args.kind,
        args.n,
        args.m,
        args.seed,
        k=args.k,
        max_num=args.max_num,
        max_den=args.max_den,
        reports=args.reports,
    )
    _write(serial.serialize_document(doc), args.output)
    return EXIT_OK


def _run_mechanism(args: argparse.Namespace, doc: serial.InstanceDocument) -> mechanisms.MechanismOutput:
    if doc.reported_profile is None:
        raise ValidationError([])
    if args.mechanism == "randchore":
        return mechanisms.rand_chore(doc.instance, doc.reported_profile, support_cap=args.support_cap)
    return mechanisms.rand_mixed(doc.instance, doc.reported_profile, support_cap=args.support_cap)


def _cmd_run(args: argparse.Namespace) -> int:
    doc = _load_document(args.instance)
    if doc.reported_profile is None:
        print("error: instance document carries no reported_profile", file=sys.stderr)
        return EXIT_USAGE

    if args.mechanism == "seqpick":
        if args.seq is None:
            print("error: seqpick requires --seq", file=sys.stderr)
            return EXIT_USAGE
        counts = tuple(int(t) for t in args.seq.split(","))
        order = tuple(int(t) for t in args.order.split(",")) if args.order else None
        allocation = mechanisms.sequential_picking(doc.instance, doc.reported_profile, counts, order)
        if args.format == "machine":
            _write(_machine({"mechanism": "seqpick", "allocation": list(allocation.owner)}), args.output)
        else:
            _write("mechanism seqpick\n" + serial.serialize_allocation(allocation), args.output)
        return EXIT_OK

    output = _run_mechanism(args, doc)
    sample = None
    if args.sample:
        if args.seed is None:
            print("error: sampling requires --seed", file=sys.stderr)
            return EXIT_USAGE
        sample = mechanisms.sample_allocation(output, args.seed)

    if args.format == "machine":
        data = mechanisms.output_to_json(output)
        if sample is not None:
            data["sample"] = list(sample.owner)
        _write(_machine(data), args.output)
    else:
        text = mechanisms.serialize_output(output)
        if sample is not None:
            text += ("sample " + " ".join(str(o) for o in sample.owner)).rstrip() + "\n"
        _write(text, args.output)
    return EXIT_OK


_EXACT = {"ef": Notion.EF, "eq": Notion.EQ, "prop": Notion.PROP}
_RELAXED = {"ef1": Notion.EF1, "eq1": Notion.EQ1, "prop1": Notion.PROP1}
_NOTION_NAMES = tuple(_EXACT) + tuple(_RELAXED) + ("uwm", "ewm", "po")


def _parse_notions(raw: str) -> list[str]:
    notions = [token.strip().lower() for token in raw.split(",") if token.strip()]
    for notion in notions:
        if notion not in _NOTION_NAMES:
            raise InvalidSpec(f"unknown notion {notion!r}; known: {', '.join(_NOTION_NAMES)}")
    return notions


def _check_deterministic(args, doc, allocation) -> tuple[dict[str, Verdict], str]:
    instance, profile = doc.instance, doc.true_profile or doc.reported_profile
    verdicts: dict[str, Verdict] = {}
    for name in _parse_notions(args.notions):
        if name in _EXACT:
            verdicts[name] = properties.check_fair(_EXACT[name], allocation, profile)
        elif name in _RELAXED:
            verdicts[name] = properties.check_fair(_RELAXED[name], allocation, profile)
        elif name == "uwm":
            verdicts[name] = properties.is_uwm(allocation, profile)
        elif name == "po":
            optimal, dominator = oracle.is_pareto_optimal(allocation, instance, profile, cap=args.enum_cap)
            verdicts[name] = (
                properties.TRUE
                if optimal
                else Verdict("FALSE", f"dominated by {list(dominator.owner)}")
            )
        else:  # ewm against the exhaustive optimum
            opt, _ = oracle.opt_welfare("EW", instance, profile, cap=args.enum_cap)
            value = properties.welfare("EW", allocation, profile)
            verdicts[name] = (
                properties.TRUE
                if value == opt
                else Verdict("FALSE", f"egalitarian welfare {value} < optimum {opt}")
            )
    lines = [f"notion {name} {v.status}" + (f" witness: {v.witness}" if v.witness else "") for name, v in verdicts.items()]
    return verdicts, "\n".join(lines) + "\n"


def _cmd_check(args: argparse.Namespace) -> int:
    doc = _load_document(args.instance)
    profile = doc.true_profile or doc.reported_profile
    if profile is None:
        print("error: instance document carries no profile to evaluate against", file=sys.stderr)
        return EXIT_USAGE

    if args.alloc is not None:
        owner = [int(t) for t in args.alloc.split(",")] if args.alloc else []
        allocation = validate_allocation(doc.instance, owner)
        verdicts, text = _check_deterministic(args, doc, allocation)
        if args.format == "machine":
            data = {name: {"status": v.status, "witness": v.witness} for name, v in verdicts.items()}
            _write(_machine({"verdicts": data}), args.output)
        else:
            _write(text, args.output)
        return EXIT_OK if all(v.holds for v in verdicts.values()) else EXIT_VIOLATION

    if args.mechanism is None:
        print("error: check needs either --alloc or --mechanism", file=sys.stderr)
        return EXIT_USAGE
    if doc.reported_profile is None:
        print("error: instance document carries no reported_profile", file=sys.stderr)
        return EXIT_USAGE

    if args.mechanism == "randchore":
        output = mechanisms.rand_chore(doc.instance, doc.reported_profile, support_cap=args.support_cap)
    else:
        output = mechanisms.rand_mixed(doc.instance, doc.reported_profile, support_cap=args.support_cap)

    requested = _parse_notions(args.notions)
    pareto = None
    opt_egalitarian = None
    if "po" in requested:
        scanner = oracle.AllocationScanner(doc.instance, profile, cap=args.enum_cap)
        def pareto(allocation, _scanner=scanner):
            optimal, dominator = _scanner.is_pareto_optimal(allocation)
            if optimal:
                return properties.TRUE
            return Verdict("FALSE", f"dominated by {list(dominator.owner)}")
    report = properties.evaluate_randomized(output, profile, pareto=pareto, opt_egalitarian=opt_egalitarian)

    if args.format == "machine":
        _write(_machine(properties.report_to_json(report)), args.output)
    else:
        _write(properties.report_to_text(report), args.output)

    failed = False
    for name in requested:
        if name in _EXACT or name == "ewm":
            verdict = report.ex_ante[name.upper() if name != "ewm" else "EWM"]
            failed |= verdict.status == "FALSE" or verdict.status == "NOT_EVALUATED"
        if name == "uwm":
            failed |= not report.ex_ante["UWM"].holds
            failed |= any(not e.verdicts["UWM"].holds for e in report.ex_post)
        if name in _RELAXED or name == "po":
            key = name.upper()
            failed |= any(not e.verdicts[key].holds for e in report.ex_post)
    return EXIT_VIOLATION if failed else EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    doc = _load_document(args.instance)
    if doc.true_profile is None:
        print("error: instance document carries no true_profile", file=sys.stderr)
        return EXIT_USAGE
    if args.mode == "spie":
        report = oracle.verify_spie(
            args.mechanism, doc.instance, doc.true_profile, others=args.others, cap=args.enum_cap
        )
    else:
        report = oracle.verify_gspie(
            args.mechanism,
            doc.instance,
            doc.true_profile,
            max_coalition=args.max_coalition,
            others=args.others,
            cap=args.enum_cap,
        )
    if args.format == "machine":
        _write(_machine(oracle.deviation_report_to_json(report)), args.output)
    else:
        _write(oracle.deviation_report_to_text(report), args.output)
    return EXIT_OK if report.truthful_optimal else EXIT_VIOLATION


def _cmd_replay(args: argparse.Namespace) -> int:
    report = oracle.replay(args.case, n=args.n, cap=args.enum_cap)
    if args.format == "machine":
        _write(_machine(oracle.replay_report_to_json(report)), args.output)
    else:
        _write(oracle.replay_report_to_text(report), args.output)
    return EXIT_OK if report.confirmed else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairlot",
        description="Exact randomized allocation of chores and mixed items: run mechanisms, "
        "check fairness and efficiency, verify strategyproofness, replay impossibility results.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a random valid instance document")
    gen.add_argument("--kind", required=True, choices=["chores1", "choresk", "mixed2"])
    gen.add_argument("--n", required=True, type=int, help="number of agents")
    gen.add_argument("--m", required=True, type=int, help="number of items")
    gen.add_argument("--k", type=int, default=2, help="inherent values per item (choresk)")
    gen.add_argument("--seed", required=True, type=int)
    gen.add_argument("--max-num", type=int, default=9)
    gen.add_argument("--max-den", type=int, default=1)
    gen.add_argument("--reports", choices=["truthful", "independent"], default="truthful")
    gen.add_argument("-o", "--output")
    gen.set_defaults(func=_cmd_gen)

    run = sub.add_parser("run", help="run a mechanism on an instance document")
    run.add_argument("instance")
    run.add_argument("--mechanism", required=True, choices=["randchore", "randmixed", "seqpick"])
    run.add_argument("--seq", help="comma-separated picking counts (seqpick)")
    run.add_argument("--order", help="comma-separated agent order (seqpick)")
    run.add_argument("--sample", action="store_true", help="draw one allocation from the output")
    run.add_argument("--seed", type=int)
    run.add_argument("--support-cap", type=int, default=None)
    run.add_argument("--format", choices=["human", "machine"], default="human")
    run.add_argument("-o", "--output")
    run.set_defaults(func=_cmd_run)

    check = sub.add_parser("check", help="evaluate fairness/efficiency notions")
    check.add_argument("instance")
    check.add_argument("--notions", required=True, help="comma-separated, e.g. ef1,eq1,po")
    check.add_argument("--alloc", help="comma-separated owners of a deterministic allocation")
    check.add_argument("--mechanism", choices=["randchore", "randmixed"])
    check.add_argument("--support-cap", type=int, default=None)
    check.add_argument("--enum-cap", type=int, default=None)
    check.add_argument("--format", choices=["human", "machine"], default="human")
    check.add_argument("-o", "--output")
    check.set_defaults(func=_cmd_check)

    verify = sub.add_parser("verify", help="exhaustive strategyproofness check")
    verify.add_argument("instance")
    verify.add_argument("--mechanism", required=True, choices=sorted(oracle.MECHANISMS))
    verify.add_argument("--mode", required=True, choices=["spie", "gspie"])
    verify.add_argument("--others", choices=["all", "truthful"], default=None)
    verify.add_argument("--max-coalition", type=int, default=None)
    verify.add_argument("--enum-cap", type=int, default=None)
    verify.add_argument("--format", choices=["human", "machine"], default="human")
    verify.add_argument("-o", "--output")
    verify.set_defaults(func=_cmd_verify)

    rep = sub.add_parser("replay", help="re-derive a fixed negative result")
    rep.add_argument("case", choices=list(oracle.REPLAY_CASES))
    rep.add_argument("--n", type=int, default=3, help="agent count for ewm-bound")
    rep.add_argument("--enum-cap", type=int, default=None)
    rep.add_argument("--format", choices=["human", "machine"], default="human")
    rep.add_argument("-o", "--output")
    rep.set_defaults(func=_cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if getattr(args, "others", None) is None and getattr(args, "mode", None):
        args.others = "all" if args.mode == "spie" else "truthful"
    try:
        return args.func(args)
    except (SupportTooLarge, EnumerationTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (WrongInstanceKind, InvalidSpec, ValidationError, serial.ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FairlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
