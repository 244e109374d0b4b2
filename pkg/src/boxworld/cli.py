"""Command-line front end: ``boxworld <verb> ...`` over the JSON file formats.

Exit codes: 0 affirmative/valid, 1 negative/invalid (JSON reason on stdout),
2 usage, I/O or size-guard error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from .errors import (
    BoxWorldError,
    ConditioningError,
    InvalidMeasurementError,
    InvalidStateError,
    InvalidTransformationError,
    SizeGuardError,
)
from .measurements import Measurement, TotalArray, simulate_postselect, total_array, validate_measurement
from .protocols import SwapScenario, Transformation, validate_transformation, verify_no_swapping
from .states import chsh, collapse, deterministic_vertices, is_local, nosig_vertices, pr_box, validate_state
from .tensor import as_signature, format_rational, parse_rational, tensor_from_data, tensor_to_data
from .wiring import counterexample_tripartite, adaptive_pair_measurement, greedy_decompose, lp_decompose

EXIT_OK, EXIT_NEGATIVE, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ": "))


def _read_json(path: str, stdin) -> dict:
    try:
        if path == "-":
            text = stdin.read()
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        return json.loads(text)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def _signature_arg(text: str):
    try:
        return as_signature(json.loads(text))
    except (json.JSONDecodeError, BoxWorldError) as exc:
        raise UsageError(f"bad --signature {text!r}: expected JSON like [[2,2],[2,2]]") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _load_array(data: dict) -> TotalArray:
    """A measurement file gives its total array; a tensor file is taken as one."""
    if "effects" in data:
        return total_array(Measurement.from_data(data))
    weight = parse_rational(data.get("weight", "1"))
    return TotalArray(tensor_from_data(data), weight)


def _vertex_data(vs) -> dict:
    return {
        "signature": [list(s) for s in vs.signature],
        "vertices": [tensor_to_data(v) for v in vs.vertices],
        "tags": list(vs.tags),
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boxworld", description=__doc__.splitlines()[0])
    parser.add_argument("-o", "--output", default="-", help="output file ('-' for stdout)")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("validate-state", help="check positivity, normalisation, no-signalling")
    p.add_argument("file")
    p = sub.add_parser("validate-measurement", help="check effects lie in [0,1] and M.P = 1")
    p.add_argument("file")
    p = sub.add_parser("chsh", help="CHSH value of a [[2,2],[2,2]] state")
    p.add_argument("file")

    p = sub.add_parser("vertices", help="vertices of the no-signalling or local polytope")
    p.add_argument("--signature", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--nosig", dest="kind", action="store_const", const="nosig")
    group.add_argument("--local", dest="kind", action="store_const", const="local")
    p.set_defaults(kind="nosig")

    p = sub.add_parser("collapse", help="conditional state after outcomes on some subsystems")
    p.add_argument("file")
    p.add_argument("--subsystems", required=True)
    p.add_argument("--settings", required=True)
    p.add_argument("--outcomes", required=True)

    p = sub.add_parser("is-local", help="exact membership in the local polytope")
    p.add_argument("file")

    p = sub.add_parser("decompose", help="write a total array as a mixture of basic arrays")
    p.add_argument("file")
    p.add_argument("--method", choices=("greedy", "lp"), default="greedy")

    p = sub.add_parser("simulate", help="post-selection simulation with fiducial measurements")
    p.add_argument("--state", required=True)
    p.add_argument("--measurement", required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("swap", help="check that Bob's measurement leaves A and C separable")
    p.add_argument("--ab", required=True)
    p.add_argument("--bc", required=True)
    p.add_argument("--bob", required=True)

    p = sub.add_parser("validate-transformation", help="check a map sends states to states")
    p.add_argument("file")
    p.add_argument("--signature", required=True)

    p = sub.add_parser("fixtures", help="emit a canonical object as JSON")
    p.add_argument("name", choices=("pr-box", "counterexample", "adaptive-pair"))
    return parser


def _dispatch(args, stdin) -> tuple[int, str]:
    verb = args.verb
    if verb == "fixtures":
        obj = {
            "pr-box": lambda: tensor_to_data(pr_box()),
            "counterexample": lambda: counterexample_tripartite().to_data(),
            "adaptive-pair": lambda: adaptive_pair_measurement().to_data(),
        }[args.name]()
        return EXIT_OK, canonical_json(obj)

    if verb == "validate-state":
        report = validate_state(tensor_from_data(_read_json(args.file, stdin)))
        return (EXIT_OK if report.valid else EXIT_NEGATIVE), canonical_json(report.to_data())

    if verb == "validate-measurement":
        report = validate_measurement(Measurement.from_data(_read_json(args.file, stdin)))
        return (EXIT_OK if report.valid else EXIT_NEGATIVE), canonical_json(report.to_data())

    if verb == "chsh":
        return EXIT_OK, format_rational(chsh(tensor_from_data(_read_json(args.file, stdin))))

    if verb == "vertices":
        sig = _signature_arg(args.signature)
        vs = nosig_vertices(sig) if args.kind == "nosig" else deterministic_vertices(sig)
        return EXIT_OK, canonical_json(_vertex_data(vs))

    if verb == "collapse":
        p = tensor_from_data(_read_json(args.file, stdin))
        out = collapse(p, _int_list(args.subsystems), _int_list(args.settings), _int_list(args.outcomes))
        return EXIT_OK, canonical_json(tensor_to_data(out))

    if verb == "is-local":
        res = is_local(tensor_from_data(_read_json(args.file, stdin)))
        return (EXIT_OK if res.local else EXIT_NEGATIVE), canonical_json(res.to_data())

    if verb == "decompose":
        m = _load_array(_read_json(args.file, stdin))
        if args.method == "greedy":
            try:
                d = greedy_decompose(m)
            except ValueError as exc:
                if m.tensor.n_subsystems > 2:
                    raise UsageError(str(exc)) from exc
                raise
            return EXIT_OK, canonical_json(d.to_data())
        res = lp_decompose(m)
        if hasattr(res, "terms"):
            return EXIT_OK, canonical_json(res.to_data())
        return EXIT_NEGATIVE, canonical_json(res.to_data())

    if verb == "simulate":
        if args.samples < 0:
            raise UsageError("--samples must be non-negative")
        if not 0 <= args.seed < 1 << 64:
            raise UsageError("--seed must be a 64-bit unsigned integer")
        p = tensor_from_data(_read_json(args.state, stdin))
        m = Measurement.from_data(_read_json(args.measurement, stdin))
        report = simulate_postselect(m, p, args.samples, args.seed)
        return EXIT_OK, canonical_json(report.to_data())

    if verb == "swap":
        P = tensor_from_data(_read_json(args.ab, stdin))
        Q = tensor_from_data(_read_json(args.bc, stdin))
        bob_data = _read_json(args.bob, stdin)
        bob = Measurement.from_data(bob_data)
        s = SwapScenario(P, Q, bob, int(bob_data.get("b1", 1)), int(bob_data.get("b2", 1)))
        report = verify_no_swapping(s)
        return (EXIT_OK if report.no_swapping else EXIT_NEGATIVE), canonical_json(report.to_data())

    if verb == "validate-transformation":
        t = Transformation.from_data(_read_json(args.file, stdin))
        ok = validate_transformation(t, _signature_arg(args.signature))
        return (EXIT_OK if ok else EXIT_NEGATIVE), canonical_json({"valid": ok})

    raise UsageError(f"unknown verb {verb}")  # pragma: no cover


def run(argv: Sequence[str] | None = None, stdin=None, stdout=None, stderr=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK

    try:
        code, text = _dispatch(args, stdin)
    except (InvalidStateError, InvalidMeasurementError, InvalidTransformationError, ConditioningError) as exc:
        code = EXIT_NEGATIVE
        text = canonical_json({"error": type(exc).__name__, "reason": str(exc)})
    except (UsageError, SizeGuardError, BoxWorldError, ValueError) as exc:
        print(f"boxworld: {exc}", file=stderr)
        return EXIT_ERROR

    if args.output == "-":
        stdout.write(text + "\n")
    else:
        try:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        except OSError as exc:
            print(f"boxworld: cannot write {args.output}: {exc}", file=stderr)
            return EXIT_ERROR
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
