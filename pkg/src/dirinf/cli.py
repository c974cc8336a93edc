"""Command-line entry point ``dirinf``.

Subcommands::

    dirinf asymcone    --input poly.json
    dirinf ncone-inf   --input poly.json [--direction 1,0]
    dirinf subdiff-inf --input func.json --direction 1,0 [--format csv]
    dirinf certify {optimality,existence,ray,errorbound} --input problem.json
    dirinf reproduce   [--out bundle.json]

Inputs are JSON documents carrying ``"schema": 1``.  Exit codes: 0 success,
2 malformed or rejected input, 3 numerical failure, 4 certificate-level
failure (a certificate that is not ``Holds``, or a failing reproduction).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace

import numpy as np

from . import errors as E
from .asymptotics import EstimatorParams, estimate_dir_subdiff
from .certificates import (ProblemSpec, error_bound_certificate, existence_certificate,
                           optimality_at_infinity_check, ray_existence_check,
                           recession_directions)
from .funcs import func_from_json, poly_from_json
from .geometry import Direction, recession_cone
from .poly_infinity import dir_normal_cone_at_infinity, normal_cone_at_infinity
from .reproduce import emit_bundle, reproduce_examples

__all__ = ["main", "build_parser"]

SCHEMA = 1
EXIT_OK, EXIT_PARSE, EXIT_NUMERIC, EXIT_CERT = 0, 2, 3, 4

_PARAM_KEYS = {"R0", "rho", "K", "delta", "M", "eps_c", "G", "seed", "T"}
_COMMAND_KEYS = {
    "asymcone": {"polyhedron"},
    "ncone-inf": {"polyhedron", "direction"},
    "subdiff-inf": {"function", "direction", "n", "params"},
    "certify": {"problem", "direction", "xbar", "grid", "params"},
}
_INPUT_ERRORS = (E.ParseError, E.EmptySetError, E.DimensionLimitError, E.NotMemberError,
                 E.NotInDomainError, E.BoundedSetError, E.UnsupportedError)
_NUMERIC_ERRORS = (E.NumericalFailure, E.EvalOverflow, E.DomainUnreachable,
                   E.QualificationUnknown, E.InfeasibleError, E.NoViolatingSamples)


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="input JSON document")
    common.add_argument("--direction", help='comma-separated direction, e.g. "1,0"')
    common.add_argument("--grid", type=int, help="direction grid resolution")
    common.add_argument("--seed", type=int, help="random seed (default 42)")
    common.add_argument("--delta", type=float, help="cone half-width of the sampling families")
    common.add_argument("--rungs", type=int, help="number K of ladder rungs")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    ap = _ArgumentParser(prog="dirinf", description="Directional objects at infinity.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)
    sub.add_parser("asymcone", parents=[common], help="recession cone of a polyhedron")
    sub.add_parser("ncone-inf", parents=[common], help="normal cone at infinity")
    sub.add_parser("subdiff-inf", parents=[common], help="sampled subdifferentials at infinity")
    cert = sub.add_parser("certify", parents=[common], help="theorem-level certificates")
    cert.add_argument("theorem", choices=("optimality", "existence", "ray", "errorbound"))
    sub.add_parser("reproduce", parents=[common], help="run the worked examples")
    return ap


# -- input handling ---------------------------------------------------------------------

def _load(path, command):
    if path is None:
        raise E.ParseError("--input is required for this command")
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise E.ParseError(f"invalid JSON ({exc.msg} at line {exc.lineno})") from None
    except OSError as exc:
        raise E.ParseError(f"cannot read input: {exc.strerror}") from None
    if not isinstance(doc, dict):
        raise E.ParseError("top level must be an object")
    if doc.get("schema") != SCHEMA:
        raise E.ParseError(f"unsupported or missing schema (expected {SCHEMA})", "$.schema")
    extra = set(doc) - {"schema"} - _COMMAND_KEYS[command]
    if extra:
        raise E.ParseError(f"unknown keys {sorted(extra)}")
    return doc


def _parse_direction(text):
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise E.ParseError(f"bad direction {text!r}", "--direction") from None
    return _to_direction(vals, "--direction")


def _to_direction(vals, loc):
    try:
        return Direction(vals)
    except ValueError as exc:
        raise E.ParseError(str(exc), loc) from None


def _direction(args, doc, required=True):
    if args.direction:
        return _parse_direction(args.direction)
    if doc.get("direction") is not None:
        return _to_direction(doc["direction"], "$.direction")
    if required:
        raise E.ParseError("a direction is required (--direction or $.direction)")
    return None


def _params(args, doc) -> EstimatorParams:
    over = doc.get("params", {})
    if not isinstance(over, dict):
        raise E.ParseError("expected an object", "$.params")
    extra = set(over) - _PARAM_KEYS
    if extra:
        raise E.ParseError(f"unknown keys {sorted(extra)}", "$.params")
    kw = dict(over)
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.delta is not None:
        kw["delta"] = args.delta
    if args.rungs is not None:
        kw["K"] = args.rungs
    try:
        p = replace(EstimatorParams(), **kw)
    except (TypeError, ValueError) as exc:
        raise E.ParseError(str(exc), "$.params") from None
    return p


def _grid(args, doc, default=16):
    g = args.grid if args.grid is not None else doc.get("grid", default)
    if not isinstance(g, int) or g < 4:
        raise E.ParseError("grid must be an integer >= 4", "--grid")
    return g


# -- commands ---------------------------------------------------------------------------

def _rows_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _cone_rows(cone_json, label=""):
    rows = []
    for k, piece in enumerate(cone_json.get("pieces", [])):
        for g in piece["generators"]:
            rows.append([label, k, "generator"] + [repr(float(a)) for a in g])
        for g in piece["lineality"]:
            rows.append([label, k, "lineality"] + [repr(float(a)) for a in g])
    return rows


def cmd_asymcone(args):
    doc = _load(args.input, "asymcone")
    P = poly_from_json(doc.get("polyhedron"), "$.polyhedron")
    C = recession_cone(P)
    report = {"command": "asymcone", "cone": C.to_json(), "is_zero": C.is_zero()}
    if args.format == "csv":
        rows = [["", 0, "generator"] + [repr(float(a)) for a in g] for g in C.generators]
        rows += [["", 0, "lineality"] + [repr(float(a)) for a in g] for g in C.lineality]
        return report, _rows_csv(["label", "piece", "kind"] + [f"x{i}" for i in range(P.n)], rows), EXIT_OK
    return report, None, EXIT_OK


def cmd_ncone_inf(args):
    doc = _load(args.input, "ncone-inf")
    P = poly_from_json(doc.get("polyhedron"), "$.polyhedron")
    u = _direction(args, doc, required=False)
    if u is not None:
        N = dir_normal_cone_at_infinity(P, u)
        report = {"command": "ncone-inf", "direction": u.to_json(), "cone": N.to_json()}
        rows = _cone_rows(report["cone"], str(u.to_json()))
    else:
        N = normal_cone_at_infinity(P)
        sweep = [{"direction": d.to_json(), "cone": dir_normal_cone_at_infinity(P, d).to_json()}
                 for d in recession_directions(P, _grid(args, {}))]
        report = {"command": "ncone-inf", "cone": N.to_json(), "sweep": sweep}
        rows = _cone_rows(report["cone"], "all")
        for s in sweep:
            rows += _cone_rows(s["cone"], str(s["direction"]))
    text = None
    if args.format == "csv":
        text = _rows_csv(["label", "piece", "kind"] + [f"x{i}" for i in range(P.n)], rows)
    return report, text, EXIT_OK


def cmd_subdiff_inf(args):
    doc = _load(args.input, "subdiff-inf")
    f = func_from_json(doc.get("function"), "$.function")
    u = _direction(args, doc)
    p = _params(args, doc)
    n = doc.get("n", f.dim)
    if n is not None and n != u.n:
        raise E.ParseError(f"direction has dimension {u.n}, function has {n}", "$.direction")
    approx = estimate_dir_subdiff(f, u, p, n=u.n, record_samples=args.format == "csv")
    report = {"command": "subdiff-inf", **approx.to_json()}
    text = approx.samples_csv() if args.format == "csv" else None
    return report, text, EXIT_OK


def cmd_certify(args):
    doc = _load(args.input, "certify")
    ps = ProblemSpec.from_json(doc.get("problem"), "$.problem")
    p = _params(args, doc)
    th = args.theorem
    if th == "optimality":
        cert = optimality_at_infinity_check(ps, _direction(args, doc), p)
    elif th == "existence":
        cert = existence_certificate(ps, _grid(args, doc), p)
    elif th == "ray":
        if doc.get("xbar") is None:
            raise E.ParseError("ray certificates need $.xbar")
        try:
            xbar = np.asarray(doc["xbar"], dtype=float).reshape(ps.n)
        except (TypeError, ValueError):
            raise E.ParseError("expected a numeric vector", "$.xbar") from None
        cert = ray_existence_check(ps, xbar, _direction(args, doc), p)
    else:
        g = list(ps.g) if ps.g else ps.f
        cert = error_bound_certificate(g, ps.Omega, _grid(args, doc), p)
    report = {"command": f"certify {th}", **cert.to_json()}
    text = None
    if args.format == "csv":
        rows = [[json.dumps(r.u.to_json()), r.qualification, r.condition, r.direct, r.route,
                 r.excluded, repr(r.stability)] for r in cert.direction_reports]
        text = _rows_csv(["u", "qualification", "condition", "direct", "route", "excluded",
                          "stability"], rows)
    code = EXIT_OK if cert.status == "Holds" else EXIT_CERT
    return report, text, code


def cmd_reproduce(args):
    grid = _grid(args, {})
    seed = 42 if args.seed is None else args.seed
    p = _params(args, {})
    bundle = reproduce_examples(seed=seed, grid=grid, p=p)
    text = emit_bundle(bundle)
    if args.format == "csv":
        rows = [[k, v["status"]] for k, v in sorted(bundle["examples"].items())]
        text = _rows_csv(["example", "status"], rows)
    return bundle, text, EXIT_OK if bundle["ok"] else EXIT_CERT


_COMMANDS = {"asymcone": cmd_asymcone, "ncone-inf": cmd_ncone_inf,
             "subdiff-inf": cmd_subdiff_inf, "certify": cmd_certify, "reproduce": cmd_reproduce}


def _write(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report, text, code = _COMMANDS[args.command](args)
    except _INPUT_ERRORS as exc:
        print(f"dirinf: input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except _NUMERIC_ERRORS as exc:
        print(f"dirinf: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except E.LipschitzPreconditionFailed as exc:
        print(f"dirinf: precondition failed: {exc}", file=sys.stderr)
        return EXIT_CERT
    if text is None:
        text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    _write(text, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
