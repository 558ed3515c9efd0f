"""Command-line interface.

Exit codes: 0 all verdicts pass or are skipped, 1 usage error, 2 input or
analysis error, 3 at least one verdict fails.
"""
from __future__ import annotations

import argparse
import json
import sys

from .algebra import DEFAULT_SEED
from .errors import QmsError
from .linalg import TolerancePolicy
from .report import (
    analyze,
    dumps,
    evolve_rows,
    exit_code,
    random_suite,
    read_model_file,
    read_operator_file,
    rows_to_csv,
    rows_to_json,
    suite_exit_code,
    SUPPORTED_DIMS,
)

EXIT_OK, EXIT_USAGE, EXIT_ERROR, EXIT_FAIL = 0, 1, 2, 3

EPILOG = """exit codes:
  0  every verdict passed or was skipped
  1  usage error (bad flags, unknown tolerance field, dims outside 2..8)
  2  unreadable or invalid input, or an analysis step raised an error
  3  at least one verdict failed

Tolerance fields can also be set with LINDBLAD_TOL_<FIELD> environment
variables.  Precedence: defaults < environment < model file "tol" < --tol.
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _tol_pairs(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--tol expects FIELD=VALUE, got {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--tol {key}: {value!r} is not a number") from None
    return out


def _policy(file_tol: dict, cli_tol: dict) -> TolerancePolicy:
    try:
        base = TolerancePolicy.from_env()
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad LINDBLAD_TOL_* value: {exc}") from None
    try:
        return base.replace(**file_tol).replace(**cli_tol)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad tolerance: {exc}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals or any(v < 0 for v in vals):
        raise UsageError("times must be a non-empty list of non-negative numbers")
    return vals


def _write(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args):
    cli_tol = _tol_pairs(args.tol)
    probe = _policy({}, cli_tol)
    mf = read_model_file(args.model, probe)
    return mf, _policy(mf.tol, cli_tol)


def cmd_analyze(args) -> int:
    mf, tol = _load(args)
    rep = analyze(mf.model, tol, args.seed, mf.tol)
    _write(dumps(rep), args.json_out)
    return exit_code(rep)


def cmd_verify(args) -> int:
    mf, tol = _load(args)
    rep = analyze(mf.model, tol, args.seed, mf.tol)
    out = {"label": mf.model.label, "seed": rep["seed"], "verdicts": rep["verdicts"]}
    sys.stdout.write(dumps(out))
    return exit_code(rep)


def cmd_evolve(args) -> int:
    mf, tol = _load(args)
    times = _float_list(args.times)
    x = read_operator_file(args.input, mf.model.dim)
    rows = evolve_rows(mf.model, x, times, args.picture, tol)
    if args.csv_out:
        _write(rows_to_csv(rows), args.csv_out)
    else:
        sys.stdout.write(json.dumps(rows_to_json(rows), indent=2) + "\n")
    return EXIT_OK


def cmd_random_suite(args) -> int:
    dims = _int_list(args.dims)
    if not dims or any(d not in SUPPORTED_DIMS for d in dims):
        raise UsageError(f"--dims must lie in {SUPPORTED_DIMS.start}..{SUPPORTED_DIMS.stop - 1}")
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    tol = _policy({}, _tol_pairs(args.tol))
    suite = random_suite(args.count, dims, args.seed, args.require_faithful, tol)
    _write(dumps(suite), args.json_out)
    return suite_exit_code(suite)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qmsdecomp", description="Analyze finite-dimensional GKSL quantum Markov semigroups.",
                epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, model=True):
        if model:
            sp.add_argument("--model", required=True, help="model JSON file")
        sp.add_argument("--tol", action="append", metavar="FIELD=VALUE", help="override a tolerance field")
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)

    a = sub.add_parser("analyze", help="full analysis report (JSON)")
    common(a)
    a.add_argument("--json-out", help="write the report here instead of stdout")
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("verify", help="verdict table only")
    common(v)
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("evolve", help="trajectory of an observable or a state")
    common(e)
    e.add_argument("--input", required=True, help="operator file: d x d array of [re, im] pairs")
    e.add_argument("--times", required=True, help="comma-separated times, e.g. 0,1,10")
    e.add_argument("--picture", choices=("heisenberg", "schrodinger"), default="heisenberg")
    e.add_argument("--csv-out", help="write CSV here; JSON goes to stdout otherwise")
    e.set_defaults(func=cmd_evolve)

    r = sub.add_parser("random-suite", help="analyze a batch of random models")
    common(r, model=False)
    r.add_argument("--count", type=int, required=True)
    r.add_argument("--dims", default="2,3,4", help="comma-separated dimensions in 2..8")
    r.add_argument("--require-faithful", action="store_true")
    r.add_argument("--json-out")
    r.set_defaults(func=cmd_random_suite)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"qmsdecomp: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QmsError as exc:
        print(f"qmsdecomp: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
