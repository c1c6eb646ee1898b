"""Command line front end: validate, analyze, export, compare.

Exit codes are part of the contract: 0 success, 1 semantic failure
(validation violations, unusable risk graph), 2 parse or usage failure,
3 unreadable input (I/O error or bad encoding). Diagnostics go to standard
error as ``file:line:col: severity: message``; reports go to standard
output. Setting ``NO_COLOR`` (or piping stderr) disables ANSI styling.
"""

from __future__ import annotations

import argparse
import contextlib
import os
import sys
from typing import IO

from . import report as report_mod
from .dsl import ParseDiagnostic, ParseResult, Severity, SourceSpan, parse_model, parse_rules
from .levels import QualitativeLevel
from .stride import RuleSet

EXIT_OK = 0
EXIT_SEMANTIC = 1
EXIT_PARSE = 2
EXIT_IO = 3

_RED = "\x1b[31m"
_YELLOW = "\x1b[33m"
_RESET = "\x1b[0m"


class _Failure(Exception):
    """Abort the command with a message and a specific exit code."""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _want_color(stream: IO[str]) -> bool:
    if os.environ.get("NO_COLOR"):
        return False
    probe = getattr(stream, "isatty", None)
    return bool(probe and probe())


def _emit(stream: IO[str], diagnostics: tuple[ParseDiagnostic, ...]) -> None:
    color = _want_color(stream)
    for diag in diagnostics:
        severity = diag.severity.value
        if color:
            tint = _RED if diag.severity is Severity.ERROR else _YELLOW
            severity = f"{tint}{severity}{_RESET}"
        stream.write(f"{diag.span.render()}: {severity}: {diag.message}\n")


def _read_text(path: str) -> str:
    try:
        with open(path, "rb") as handle:
            data = handle.read()
    except OSError as exc:
        raise _Failure(EXIT_IO, f"{path}: error: {exc}") from exc
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise _Failure(
            EXIT_IO, f"{path}:1:1: error: input is not valid UTF-8"
        ) from exc


def _parse_or_fail(
    text: str, path: str, stderr: IO[str], *, lax: bool = False
) -> ParseResult:
    result = parse_model(text, path, lax=lax)
    _emit(stderr, result.diagnostics)
    if result.model is None:
        code = EXIT_PARSE if result.failure_stage == "syntax" else EXIT_SEMANTIC
        raise _Failure(code, "")
    return result


def _load_rules(path: str | None, stderr: IO[str]) -> RuleSet | None:
    if path is None:
        return None
    text = _read_text(path)
    result = parse_rules(text, path)
    _emit(stderr, result.diagnostics)
    if result.rules is None:
        raise _Failure(EXIT_PARSE, "")
    return result.rules


def _semantic_notes(
    path: str, result: ParseResult, notes: tuple[str, ...], stderr: IO[str]
) -> None:
    # Graph diagnostics use validation location strings; map them back to
    # source positions where the parser recorded a span.
    diags = []
    for note in notes:
        location, _, message = note.partition(": ")
        span = result.spans.get(location, SourceSpan(path, 1, 1))
        diags.append(
            ParseDiagnostic(Severity.ERROR, span, message or location)
        )
    _emit(stderr, tuple(diags))


def _cmd_validate(args: argparse.Namespace, stdout: IO[str], stderr: IO[str]) -> int:
    text = _read_text(args.file)
    _parse_or_fail(text, args.file, stderr, lax=args.lax)
    return EXIT_OK


def _split_csv_arg(raw: str, allowed: tuple[str, ...], what: str) -> tuple[str, ...]:
    values = tuple(part.strip() for part in raw.split(",") if part.strip())
    for value in values:
        if value not in allowed:
            raise _Failure(
                EXIT_PARSE,
                f"error: unknown {what} {value!r} (choose from {', '.join(allowed)})",
            )
    return values


def _cmd_analyze(args: argparse.Namespace, stdout: IO[str], stderr: IO[str]) -> int:
    methods = _split_csv_arg(args.methods, report_mod.METHOD_ORDER, "method")
    if not methods:
        raise _Failure(EXIT_PARSE, "error: --methods selected nothing")
    fuse = tuple(args.fuse or ())
    if args.format == "csv" and args.out_dir is None:
        raise _Failure(EXIT_PARSE, "error: --format csv requires --out-dir")
    rules = _load_rules(args.rules, stderr)
    text = _read_text(args.file)
    result = _parse_or_fail(text, args.file, stderr)
    model = result.model
    assert model is not None
    bundle = report_mod.analyze_model(
        model,
        input_bytes=text.encode("utf-8"),
        methods=methods,
        fuse=fuse,
        rules=rules,
        seed_threshold=QualitativeLevel.from_keyword(args.seed_threshold),
        stride_interactions=args.stride_interactions,
    )
    if "coras: risk graph failed to build" in bundle.warnings:
        assert bundle.coras is not None
        _semantic_notes(args.file, result, bundle.coras.notes, stderr)
        return EXIT_SEMANTIC
    if args.format == "md":
        stdout.write(report_mod.render_markdown(bundle))
        stdout.write("\n")
    elif args.format == "json":
        stdout.write(report_mod.bundle_to_json(bundle))
    else:
        os.makedirs(args.out_dir, exist_ok=True)
        for name, content in sorted(report_mod.csv_tables(bundle).items()):
            with open(
                os.path.join(args.out_dir, name), "w", encoding="utf-8", newline=""
            ) as handle:
                handle.write(content)
    return EXIT_OK


def _cmd_export(args: argparse.Namespace, stdout: IO[str], stderr: IO[str]) -> int:
    text = _read_text(args.file)
    result = _parse_or_fail(text, args.file, stderr)
    model = result.model
    assert model is not None
    if args.diagram == "control-structure":
        stdout.write(report_mod.render_control_structure(model))
        return EXIT_OK
    if model.coras is None or not model.coras.nodes:
        stderr.write(
            f"{args.file}: error: model declares no risk-scenario content "
            "to draw\n"
        )
        return EXIT_SEMANTIC
    from . import coras as coras_mod

    built = coras_mod.build_graph(model)
    if built.graph is None:
        _semantic_notes(
            args.file,
            result,
            tuple(f"{d.location}: {d.message}" for d in built.diagnostics),
            stderr,
        )
        return EXIT_SEMANTIC
    graph = built.graph
    flavor = args.diagram.removeprefix("coras-")
    if flavor == "risk":
        graph = coras_mod.propagate_likelihood(graph).graph
    stdout.write(report_mod.render_coras_diagram(graph, flavor))
    return EXIT_OK


def _cmd_compare(args: argparse.Namespace, stdout: IO[str], stderr: IO[str]) -> int:
    rules = _load_rules(args.rules, stderr)
    text = _read_text(args.file)
    result = _parse_or_fail(text, args.file, stderr)
    model = result.model
    assert model is not None
    stdout.write(
        report_mod.compare_report(
            model, input_bytes=text.encode("utf-8"), rules=rules
        )
    )
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskweaver",
        description="Threat modeling and risk analysis over system models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="parse and check one model file")
    p_validate.add_argument("file")
    p_validate.add_argument(
        "--lax",
        action="store_true",
        help="report referential problems as warnings instead of errors",
    )
    p_validate.set_defaults(handler=_cmd_validate)

    p_analyze = sub.add_parser("analyze", help="run the analysis engines")
    p_analyze.add_argument("file")
    p_analyze.add_argument(
        "--methods",
        default="stpa,stride,coras",
        help="comma-separated subset of stpa,stride,coras",
    )
    p_analyze.add_argument(
        "--fuse",
        action="append",
        choices=list(report_mod.FUSE_MODES),
        help="feed threat scores into the other methods (repeatable)",
    )
    p_analyze.add_argument("--rules", help="scoring rules file replacing the default")
    p_analyze.add_argument(
        "--format", choices=["md", "csv", "json"], default="md"
    )
    p_analyze.add_argument(
        "--out-dir", help="directory for --format csv table files"
    )
    p_analyze.add_argument(
        "--seed-threshold",
        choices=["low", "medium", "high"],
        default="medium",
        help="minimum risk for graphing a threat entry",
    )
    p_analyze.add_argument(
        "--stride-interactions",
        action="store_true",
        help="also score control and feedback interactions",
    )
    p_analyze.set_defaults(handler=_cmd_analyze)

    p_export = sub.add_parser("export", help="render a diagram as DOT text")
    p_export.add_argument("file")
    p_export.add_argument(
        "--diagram",
        required=True,
        choices=[
            "control-structure",
            "coras-threat",
            "coras-risk",
            "coras-treatment",
        ],
    )
    p_export.set_defaults(handler=_cmd_export)

    p_compare = sub.add_parser(
        "compare", help="stage-by-stage comparison of the three methods"
    )
    p_compare.add_argument("file")
    p_compare.add_argument("--rules", help="scoring rules file replacing the default")
    p_compare.set_defaults(handler=_cmd_compare)
    return parser


def main(
    argv: list[str] | None = None,
    stdout: IO[str] | None = None,
    stderr: IO[str] | None = None,
) -> int:
    """Run one command; never raises, always returns an exit code."""
    out = stdout if stdout is not None else sys.stdout
    err = stderr if stderr is not None else sys.stderr
    parser = _build_parser()
    try:
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if not exc.code else EXIT_PARSE
    try:
        return int(args.handler(args, out, err))
    except _Failure as failure:
        if str(failure):
            err.write(str(failure) + "\n")
        return failure.code
    except BrokenPipeError:
        return EXIT_IO
    except Exception as exc:  # malformed input must never escape as a traceback
        err.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_SEMANTIC


def entrypoint() -> None:
    sys.exit(main())
