"""Command-line front end.

    sltl check problem.sltl [--model] [--trace] [--format json]
    sltl trace problem.sltl
    sltl oracle problem.sltl [--oracle-seqs 2 --oracle-prefix 1 --oracle-loop 2]
    sltl oracle problem.sltl --verify-model model.json
    sltl diff a.sltl b.sltl ... | sltl diff --random 500 --seed 1

Exit codes: 0 satisfiable / agreement / valid model, 1 unsatisfiable /
nothing found / disagreement / invalid model, 2 usage or input error,
3 search limit reached, 4 internal consistency failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence, TextIO

from .oracle import BoundsTooLarge, OracleBounds, brute_sat, differential_check, random_corpus
from .parser import ParseError, UndeclaredName, parse
from .semantics import LassoStructure, StructureError, UnknownName, satisfies_spec
from .tableau import ExtractionError, SearchLimits, solve

EXIT_OK, EXIT_NO, EXIT_USAGE, EXIT_LIMIT, EXIT_INTERNAL = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _load_spec(path: str, strict: bool):
    return parse(_read(path), strict=strict)


def _bounds(args) -> OracleBounds:
    try:
        return OracleBounds(args.oracle_seqs, args.oracle_prefix, args.oracle_loop)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(out: TextIO, args, payload: dict, text: list[str]) -> None:
    if args.format == "json":
        out.write(json.dumps(payload, sort_keys=True) + "\n")
    else:
        for line in text:
            out.write(line + "\n")


def cmd_check(args, out: TextIO, err: TextIO) -> int:
    spec = _load_spec(args.input, args.strict_vocab)
    limits = SearchLimits(max_nodes=args.max_steps)
    tracer = None
    if args.trace:
        if args.format == "json":
            tracer = lambda e: out.write(json.dumps(e.to_json(), sort_keys=True) + "\n")
        else:
            tracer = lambda e: out.write(e.to_text() + "\n")
    verdict = solve(spec, limits, trace=tracer, jobs=args.jobs)
    stats = {"nodes": verdict.stats.nodes, "crossed": verdict.stats.crossed,
             "max_branch": verdict.stats.max_branch,
             "max_instants": verdict.stats.max_instants}
    payload: dict = {"verdict": verdict.status, "stats": stats}
    text = [verdict.status]
    if verdict.status == "LIMIT":
        payload["reason"] = verdict.reason
        err.write(f"search stopped: {verdict.reason}\n")
    if verdict.sat and verdict.model is None:
        payload["note"] = verdict.reason
        err.write(f"no finite model: {verdict.reason}\n")
    if verdict.sat and args.model and verdict.model is not None:
        payload["model"] = verdict.model.to_json()
        text.append(verdict.model.dumps())
    _emit(out, args, payload, text)
    return {"SAT": EXIT_OK, "UNSAT": EXIT_NO, "LIMIT": EXIT_LIMIT}[verdict.status]


def cmd_oracle(args, out: TextIO, err: TextIO) -> int:
    spec = _load_spec(args.input, args.strict_vocab)
    if args.verify_model:
        try:
            model = LassoStructure.loads(_read(args.verify_model))
        except (ValueError, StructureError) as exc:
            raise UsageError(f"bad model file: {exc}") from None
        if not 0 <= args.index < len(model.sequences):
            raise UsageError(f"model has no sequence {args.index}")
        try:
            ok = satisfies_spec(model, args.index, spec)
        except UnknownName as exc:
            raise UsageError(f"model does not interpret {exc}") from None
        _emit(out, args, {"valid": ok}, ["VALID" if ok else "INVALID"])
        return EXIT_OK if ok else EXIT_NO
    try:
        result = brute_sat(spec, _bounds(args))
    except BoundsTooLarge as exc:
        raise UsageError(str(exc)) from None
    if result.found:
        payload = {"result": "FOUND", "index": result.index, "model": result.structure.to_json()}
        _emit(out, args, payload, ["FOUND", result.structure.dumps()])
        return EXIT_OK
    _emit(out, args, {"result": "NOT_FOUND", "examined": result.examined},
          [f"NOT_FOUND (examined {result.examined} structures)"])
    return EXIT_NO


def cmd_diff(args, out: TextIO, err: TextIO) -> int:
    if args.random is not None:
        if args.inputs:
            raise UsageError("give either problem files or --random, not both")
        corpus = random_corpus(args.random, args.seed)
    elif args.inputs:
        corpus = [_load_spec(p, args.strict_vocab) for p in args.inputs]
    else:
        raise UsageError("diff needs problem files or --random N")
    try:
        report = differential_check(corpus, _bounds(args), SearchLimits(max_nodes=args.max_steps))
    except BoundsTooLarge as exc:
        raise UsageError(str(exc)) from None
    text = [f"{e.tableau:<6} {e.oracle:<9} {e.spec}" for e in report.entries]
    text += [f"  ! {p}" for e in report.disagreements for p in e.problems]
    text.append(f"{len(report.entries)} checked, {len(report.disagreements)} disagreements")
    _emit(out, args, report.to_json(), text)
    return EXIT_OK if report.ok else EXIT_NO


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--strict-vocab", action="store_true",
                        help="every proposition and standpoint must be declared")
    common.add_argument("--max-steps", type=int, default=None, metavar="N",
                        help="stop the tableau after N nodes")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1, metavar="N",
                        help="search subtrees in N processes")
    bounds = argparse.ArgumentParser(add_help=False)
    bounds.add_argument("--oracle-seqs", type=int, default=2, metavar="N")
    bounds.add_argument("--oracle-prefix", type=int, default=1, metavar="N")
    bounds.add_argument("--oracle-loop", type=int, default=2, metavar="N")

    parser = argparse.ArgumentParser(prog="sltl", description="Standpoint LTL satisfiability checker")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="decide satisfiability")
    p.add_argument("input")
    p.add_argument("--model", action="store_true", help="print a model when satisfiable")
    p.add_argument("--trace", action="store_true", help="print every tableau node")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("trace", parents=[common], help="check and print the tableau")
    p.add_argument("input")
    p.add_argument("--model", action="store_true")
    p.set_defaults(func=cmd_check, trace=True)

    p = sub.add_parser("oracle", parents=[common, bounds], help="brute-force search for a small model")
    p.add_argument("input")
    p.add_argument("--verify-model", metavar="FILE", help="only evaluate the given model")
    p.add_argument("--index", type=int, default=0, help="sequence to evaluate with --verify-model")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("diff", parents=[common, bounds], help="compare tableau and oracle")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--random", type=int, default=None, metavar="N", help="use N random problems")
    p.set_defaults(func=cmd_diff)
    return parser


def main(argv: Sequence[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if getattr(args, "max_steps", None) is not None and args.max_steps < 1:
        err.write("--max-steps must be positive\n")
        return EXIT_USAGE
    try:
        return args.func(args, out, err)
    except (ParseError, UndeclaredName) as exc:
        err.write(f"{args.input if hasattr(args, 'input') else 'input'}: {exc}\n")
        return EXIT_USAGE
    except UsageError as exc:
        err.write(f"{exc}\n")
        return EXIT_USAGE
    except (ExtractionError, AssertionError) as exc:
        err.write(f"internal error: {exc}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
