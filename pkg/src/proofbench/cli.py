"""Batch entry points over the kernel: check, extract, options, eval,
certify, sample, search, serve.

Exit codes: 0 ok, 2 parse error, 3 verification failure, 4 evaluation
error, 5 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import pathlib
import sys

from . import evaluator, foundry, kernel
from .engine import Session, enumerate_options
from .evaluator import Box, ExecError, Int, Rat, Vec
from .model import MachParams, ParseError, parse_program, parse_statement
from .theory import Theory, bundled_theory_names, load_bundled, load_theory_dir

EXIT_OK, EXIT_PARSE, EXIT_VERIFY, EXIT_EVAL, EXIT_INTERNAL = 0, 2, 3, 4, 5

ENV_PREFIX = "PROOFBENCH_"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proofbench", description="Verifying kernel and workbench tools."
    )
    parser.add_argument("--theory-dir", help="directory with theory definition files")
    parser.add_argument("--theory", help="bundled theory name (int, rat, vec, meta, sets)")
    parser.add_argument("--nint", type=int)
    parser.add_argument("--nlst", type=int)
    parser.add_argument("--nprem", type=int)
    parser.add_argument("--budget", type=int, help="execution budget (statement steps)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--format", choices=("text", "machine-lines"), default="text"
    )
    parser.add_argument(
        "--with-corpus",
        action="store_true",
        help="preload the bundled proof corpus into the rule store",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="verify proof scripts")
    p.add_argument("proofs", nargs="+")

    p = sub.add_parser("extract", help="verify and print extracted theorem blocks")
    p.add_argument("proofs", nargs="+")

    p = sub.add_parser("options", help="print the options file for a derivation")
    p.add_argument("session_file")

    p = sub.add_parser("eval", help="run a program on an input environment")
    p.add_argument("program_file")
    p.add_argument("env_file")

    p = sub.add_parser("certify", help="certify iteration of the bundled automaton")
    p.add_argument("--cells", type=int, default=8)
    p.add_argument("--rule", type=int, default=110)
    p.add_argument("--state", help="initial state as 0/1 digits, e.g. 01011000")
    p.add_argument("--steps", type=int, default=1000)

    p = sub.add_parser("sample", help="soundness-sample stored rules")
    p.add_argument("labels", nargs="*", help="rule labels (default: all hooked axioms)")
    p.add_argument("--samples", type=int, default=1000)

    p = sub.add_parser("search", help="bounded axiom search")
    p.add_argument("atoms", nargs="+")
    p.add_argument("--max-premise", type=int, default=2)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--fresh-store", action="store_true",
                   help="search against an empty rule store")

    p = sub.add_parser("serve", help="start the workbench service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--persist", help="session persistence path")
    return parser


def _env_default(name, cast=str):
    raw = os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))
    return cast(raw) if raw is not None else None


def resolve_mach(args) -> MachParams:
    mach = MachParams()
    overrides = {}
    for field in ("nint", "nlst", "nprem"):
        value = getattr(args, field, None)
        if value is None:
            value = _env_default(field, int)
        if value is not None:
            overrides[field] = value
    budget = getattr(args, "budget", None) or _env_default("budget", int)
    if budget is not None:
        overrides["tcpu"] = budget
    return mach.replace(**overrides) if overrides else mach


def resolve_theory(args, default_from=None) -> Theory:
    mach = resolve_mach(args)
    name = args.theory or _env_default("theory")
    theory_dir = args.theory_dir or _env_default("theory_dir")
    if theory_dir:
        return load_theory_dir(
            pathlib.Path(theory_dir), mach, hooks=evaluator.default_hooks()
        )
    if name is None and default_from:
        guess = pathlib.Path(default_from).resolve().parent.name
        if guess in bundled_theory_names():
            name = guess
    if name is None:
        raise SystemExit("no theory specified; use --theory or --theory-dir")
    if getattr(args, "with_corpus", False):
        return kernel.corpus_theory(name, mach)
    return load_bundled(name, mach)


def _emit(args, text_line, machine_record):
    if args.format == "machine-lines":
        print(json.dumps(machine_record, sort_keys=True))
    else:
        print(text_line)


def cmd_check(args) -> int:
    paths = sorted(pathlib.Path(p) for p in args.proofs)
    theory = resolve_theory(args, default_from=paths[0])
    try:
        scripts = [kernel.parse_proof_file(p, theory.mach) for p in paths]
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    reports = kernel.check_scripts(scripts, theory)
    failures = redundancies = 0
    for path, report in zip(paths, reports):
        if report.ok and not report.redundant:
            _emit(
                args,
                f"{path}: ok",
                {"proof": str(path), "ok": True, "redundant": []},
            )
        else:
            failures += 0 if report.ok else 1
            redundancies += 1 if report.redundant else 0
            detail = (
                "; ".join(f"line {v.number}: {v.message}" for v in report.failure_lines())
                or f"redundant lines {report.redundant}"
            )
            _emit(
                args,
                f"{path}: FAILED ({detail})",
                {
                    "proof": str(path),
                    "ok": report.ok,
                    "redundant": report.redundant,
                    "detail": detail,
                },
            )
    summary = f"{len(reports)} proofs verified, {redundancies} redundancies"
    if failures:
        summary = f"{failures} of {len(reports)} proofs FAILED"
    _emit(args, summary, {"summary": summary, "failures": failures})
    return EXIT_OK if failures == 0 and redundancies == 0 else EXIT_VERIFY


def cmd_extract(args) -> int:
    paths = sorted(pathlib.Path(p) for p in args.proofs)
    theory = resolve_theory(args, default_from=paths[0])
    try:
        scripts = [kernel.parse_proof_file(p, theory.mach) for p in paths]
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    kernel.check_scripts(scripts, theory)
    status = EXIT_OK
    for path, script in zip(paths, scripts):
        try:
            record, _ = kernel.extract_theorem(script, theory)
        except kernel.RedundancyRefusal as exc:
            print(f"{path}: redundancy refusal {exc.redundant}")
            status = EXIT_VERIFY
            continue
        except kernel.ProofError as exc:
            print(f"{path}: {exc}")
            status = EXIT_VERIFY
            continue
        print(record.serialize())
        print()
    return status


def cmd_options(args) -> int:
    path = pathlib.Path(args.session_file)
    theory = resolve_theory(args, default_from=path)
    try:
        program = parse_program(path.read_text(), theory.mach)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    lines = list(program)
    for option in enumerate_options(lines, theory):
        print(option.render())
    return EXIT_OK


def _parse_env_file(text: str):
    env = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        name, _, value = line.partition("=")
        env[name.strip()] = _parse_value(value.strip())
    return env


def _parse_value(text: str):
    if text.startswith("[["):
        payload = json.loads(text.replace(" ", ","))
        return Box(tuple(payload[0]), tuple(payload[1]))
    if text.startswith("["):
        payload = json.loads(text.replace(" ", ","))
        return Vec(tuple(payload))
    return Int(int(text))


def cmd_eval(args) -> int:
    theory = resolve_theory(args, default_from=pathlib.Path(args.program_file))
    try:
        program = parse_program(
            pathlib.Path(args.program_file).read_text(), theory.mach
        )
        env = _parse_env_file(pathlib.Path(args.env_file).read_text())
    except (ParseError, ValueError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        out = evaluator.eval_program(program, env, theory)
    except ExecError as exc:
        _emit(
            args,
            f"execution error: {exc}",
            {"error": exc.kind, "detail": exc.detail, "site": exc.site},
        )
        return EXIT_EVAL
    for name, value in out.items():
        if name in theory.constants:
            continue
        _emit(args, f"{name} = {_render_value(value)}", {name: _render_value(value)})
    return EXIT_OK


def _render_value(value):
    if isinstance(value, Int):
        return value.value
    if isinstance(value, Rat):
        return f"{value.units}e"
    if isinstance(value, Vec):
        return list(value.elements)
    if isinstance(value, Box):
        return [list(value.lo), list(value.hi)]
    return str(value)


def cmd_certify(args) -> int:
    args.theory = args.theory or "vec"
    theory = resolve_theory(args)
    automaton = evaluator.CellularAutomaton(args.cells, args.rule)
    domain = automaton.domain()
    if args.state:
        state = Vec(tuple(int(c) for c in args.state))
    else:
        state = Vec((0,) * args.cells)
    try:
        certificate = evaluator.certify_iteration(
            automaton, automaton.bound, domain, state, theory,
            spot_steps=args.steps, bound_id="identity",
        )
    except evaluator.CertificateRefusal as exc:
        print(f"refused: {exc}")
        return EXIT_EVAL
    print(certificate.serialize())
    return EXIT_OK


def cmd_sample(args) -> int:
    theory = resolve_theory(args)
    if args.labels:
        rules = [theory.rules[l] for l in args.labels]
    else:
        rules = foundry.sweepable_rules(theory)
    worst = EXIT_OK
    for rule in rules:
        try:
            verdict = foundry.soundness_sample(rule, theory, args.samples, args.seed)
        except (foundry.SamplingError, evaluator.NoEvaluatorHook) as exc:
            _emit(args, f"{rule.label}: skipped ({exc})", {"label": rule.label, "skipped": str(exc)})
            continue
        _emit(
            args,
            verdict.render(),
            {
                "label": verdict.label,
                "ok": verdict.ok,
                "samples": verdict.samples,
                "usable": verdict.usable,
                "violation": verdict.violation,
            },
        )
        if not verdict.ok:
            worst = EXIT_EVAL
    return worst


def cmd_search(args) -> int:
    theory = resolve_theory(args)
    if args.fresh_store:
        theory.rules = {}
    try:
        found = foundry.search_axioms(
            args.atoms,
            theory,
            max_premise=args.max_premise,
            samples=args.samples,
            seed=args.seed,
        )
    except foundry.CapExceeded as exc:
        print(f"caps exceeded: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    for record in found:
        print(record.serialize())
        print()
    print(f"{len(found)} candidates survive")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(mach=resolve_mach(args), persist=args.persist)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = globals()[f"cmd_{args.command}"]
    try:
        return handler(args)
    except SystemExit:
        raise
    except (ParseError,) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except kernel.ProofError as exc:
        print(f"verification error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except ExecError as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return EXIT_EVAL
    except Exception as exc:  # pragma: no cover
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
