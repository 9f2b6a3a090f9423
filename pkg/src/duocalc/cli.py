"""Command line interface.

Exit codes: 0 success, 1 domain error (JSON object on stderr), 2 usage error.
A circuit argument is a file (``.json`` for circuit JSON, anything else for
notation) or, if no such file exists, inline notation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import dsl
from .circuit import foliate, foliation_problems, validate
from .dot import export_dot
from .duotensor import Color
from .engine import compile_fragment, evaluation_report, evolve_foliation, ratio_check
from .errors import DuocalcError
from .io import circuit_from_json, load_theory

__all__ = ["main", "build_parser"]


class UsageError(Exception):
    pass


def _source(arg: str, theory):
    path = Path(arg)
    try:
        is_file = path.is_file()
    except OSError:
        is_file = False
    if is_file:
        text = path.read_text()
        if path.suffix == ".json":
            return circuit_from_json(json.loads(text))
        return dsl.parse(text, theory)
    return dsl.parse(arg, theory)


def _theory(args, required: bool):
    if args.theory is None:
        if required:
            raise UsageError(f"'{args.command}' needs --theory")
        return None
    return load_theory(args.theory)


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_validate(args) -> int:
    theory = _theory(args, False)
    f = _source(args.circuit, theory)
    report = validate(f)
    _emit({
        "valid": report.ok,
        "instances": len(f.instances),
        "wires": len(f.wires),
        "open_ports": [p.label for p in f.open_ports],
        "violations": [{"rule": v.rule, "detail": v.detail} for v in report.violations],
    })
    return 0 if report.ok else 1


def cmd_prob(args) -> int:
    theory = _theory(args, True)
    c = _source(args.circuit, theory)
    _emit(evaluation_report(c, theory, foliate(c) if args.foliate else None))
    return 0


def cmd_fragment(args) -> int:
    theory = _theory(args, True)
    compiled = compile_fragment(_source(args.circuit, theory), theory)
    t = compiled.duotensor
    if args.colors is not None:
        if len(args.colors) != len(t.indices):
            raise UsageError(f"--colors needs {len(t.indices)} letters (b/w), got {args.colors!r}")
        try:
            colors = [Color.parse(ch) for ch in args.colors]
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        t = compiled.colored(colors, theory)
    _emit(t.to_json())
    return 0


def cmd_ratio(args) -> int:
    theory = _theory(args, True)
    verdict = ratio_check(_source(args.first, theory), _source(args.second, theory), theory, args.rel_tol)
    _emit(verdict.to_json())
    return 0


def cmd_foliate(args) -> int:
    theory = _theory(args, False)
    c = _source(args.circuit, theory)
    fol = foliate(c)
    out = {"hypersurfaces": fol.to_json(), "sizes": fol.sizes(), "problems": foliation_problems(c, fol)}
    if theory is not None:
        ev = evolve_foliation(c, fol, theory)
        out.update(probability=min(1.0, max(0.0, ev.probability)), padding_count=ev.padding_count)
    _emit(out)
    return 0


def cmd_dot(args) -> int:
    theory = _theory(args, False)
    f = _source(args.circuit, theory)
    sys.stdout.write(export_dot(f, foliate(f) if args.foliate else None))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="duocalc", description="Duotensor circuit calculator")
    p.add_argument("--theory", help="theory JSON file")
    # SUPPRESS keeps a subcommand from overwriting a --theory given before it
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--theory", default=argparse.SUPPRESS, help="theory JSON file")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check the wiring rules")
    s.add_argument("circuit")
    s.set_defaults(run=cmd_validate)

    s = sub.add_parser("prob", parents=[common], help="circuit probability")
    s.add_argument("circuit")
    s.add_argument("--foliate", action="store_true", help="also report foliation padding")
    s.set_defaults(run=cmd_prob)

    s = sub.add_parser("fragment", parents=[common], help="compiled fragment duotensor as JSON")
    s.add_argument("circuit")
    s.add_argument("--colors", help="one b/w letter per open port, inputs first")
    s.set_defaults(run=cmd_fragment)

    s = sub.add_parser("ratio", parents=[common], help="is Prob(first)/Prob(second) well conditioned")
    s.add_argument("first")
    s.add_argument("second")
    s.add_argument("--rel-tol", type=float, default=1e-8)
    s.set_defaults(run=cmd_ratio)

    s = sub.add_parser("foliate", parents=[common], help="layered foliation of a circuit")
    s.add_argument("circuit")
    s.set_defaults(run=cmd_foliate)

    s = sub.add_parser("dot", parents=[common], help="Graphviz DOT of the wiring")
    s.add_argument("circuit")
    s.add_argument("--foliate", action="store_true", help="group instances by foliation step")
    s.set_defaults(run=cmd_dot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"duocalc: error: {exc}\n")
        return 2
    except DuocalcError as exc:
        sys.stderr.write(json.dumps(exc.to_json(), sort_keys=True) + "\n")
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}, sort_keys=True) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
