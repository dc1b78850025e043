"""Command-line front end: load a JSON scenario, run one command, print a JSON report.

Exit codes: 0 success, 2 a check ran and failed, 1 bad input or a library error.
"""

import argparse
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from .convex import GeneratedSet, bipolar_report, mazur_project, separate
from .duality import conjugate, represent
from .errors import CondRiskError, NotSeparable, SchemaError
from .lpmod import Cone, DualElement, Position
from .prob import build_space, build_subalgebra
from .risk import RiskMeasure, check_axioms, evaluate
from .randvar import encode_float

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_CHECK = 0, 1, 2


@dataclass
class Scenario:
    space: object
    f: object
    d: int
    cone: Cone
    positions: dict
    risk_entries: dict

    def position(self, name, dual=False):
        if name not in self.positions:
            raise SchemaError(f"/positions/{name}", f"no position named {name!r}")
        cls = DualElement if dual else Position
        return cls(self.space, self.positions[name])

    def risk(self, name):
        if name not in self.risk_entries:
            raise SchemaError(f"/risks/{name}", f"no risk measure named {name!r}")
        entry = self.risk_entries[name]
        ptr = f"/risks/{name}"
        kind = entry.get("kind")
        if kind == "entropic":
            return RiskMeasure.entropic(self.f, self.d, _param(entry, "gamma", ptr, 1.0), self.cone)
        if kind == "avar":
            return RiskMeasure.avar(self.f, self.d, _param(entry, "lambda", ptr, 0.5), self.cone)
        if kind == "worst_case":
            return RiskMeasure.worst_case(self.f, self.d, self.cone)
        raise SchemaError(f"{ptr}/kind", f"unsupported kind {kind!r}")

    def family(self, names):
        return [self.position(n) for n in names]


def _param(entry, key, ptr, default):
    if key not in entry:
        return default
    val = entry[key]
    if isinstance(val, list):
        if not all(_is_number(v) for v in val):
            raise SchemaError(f"{ptr}/{key}", "expected numbers")
        return [float(v) for v in val]
    if not _is_number(val):
        raise SchemaError(f"{ptr}/{key}", "expected a number or a list of numbers")
    return float(val)


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _require(obj, key, kind, ptr):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"{ptr}/{key}", "missing field")
    if not isinstance(obj[key], kind):
        raise SchemaError(f"{ptr}/{key}", f"expected {kind.__name__}")
    return obj[key]


def parse_scenario(data):
    """Validate a scenario document and build its objects."""
    if not isinstance(data, dict):
        raise SchemaError("", "scenario must be a JSON object")
    atoms = _require(data, "atoms", list, "")
    pairs = []
    for i, a in enumerate(atoms):
        ptr = f"/atoms/{i}"
        if not isinstance(a, dict) or "id" not in a or "prob" not in a:
            raise SchemaError(ptr, "atoms need 'id' and 'prob'")
        if not _is_number(a["prob"]):
            raise SchemaError(f"{ptr}/prob", "expected a number")
        pairs.append((str(a["id"]), float(a["prob"])))
    try:
        space = build_space(pairs)
    except (CondRiskError, ValueError) as exc:
        raise SchemaError("/atoms", str(exc)) from None

    blocks = _require(data, "f_blocks", list, "")
    for k, b in enumerate(blocks):
        if not isinstance(b, list):
            raise SchemaError(f"/f_blocks/{k}", "expected a list of atom ids")
    try:
        f = build_subalgebra(space, [[str(a) for a in b] for b in blocks])
    except CondRiskError as exc:
        raise SchemaError("/f_blocks", str(exc)) from None

    d = _require(data, "d", int, "")
    if isinstance(d, bool) or d < 1:
        raise SchemaError("/d", "expected a positive integer")

    if "cone" in data:
        ineq = _require(data["cone"], "inequalities", list, "/cone")
        try:
            cone = Cone(ineq, d=d)
        except (CondRiskError, ValueError) as exc:
            raise SchemaError("/cone/inequalities", str(exc)) from None
    else:
        cone = Cone.orthant(d)

    positions = {}
    for name, rows in _require(data, "positions", dict, "").items():
        ptr = f"/positions/{name}"
        if not isinstance(rows, list) or len(rows) != space.n:
            raise SchemaError(ptr, f"expected {space.n} rows, one per atom")
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != d or not all(_is_number(v) for v in row):
                raise SchemaError(f"{ptr}/{i}", f"expected {d} finite numbers")
        positions[name] = np.array(rows, dtype=float)

    risks = data.get("risks", {})
    if not isinstance(risks, dict):
        raise SchemaError("/risks", "expected an object")
    for name, entry in risks.items():
        if not isinstance(entry, dict) or "kind" not in entry:
            raise SchemaError(f"/risks/{name}/kind", "missing field")
    return Scenario(space, f, d, cone, positions, risks)


def load_scenario(path):
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError("", f"invalid JSON: {exc}") from None
    return parse_scenario(data)


def _names(raw, flag):
    names = [n for n in raw.split(",") if n]
    if not names:
        raise SchemaError("/positions", f"{flag} needs at least one position name")
    return names


# ---------------------------------------------------------------- commands


def cmd_eval(sc, args):
    rho = sc.risk(args.risk)
    value = evaluate(rho, sc.position(args.position))
    return EXIT_OK, {"risk": args.risk, "position": args.position, "value": value.to_json(),
                     "block_values": list(sc.f.collapse(value.values))}


def cmd_dual_verify(sc, args):
    rho = sc.risk(args.risk)
    report = represent(rho, sc.position(args.position), tol=args.tol)
    out = {"risk": args.risk, "position": args.position, **report.to_json()}
    return (EXIT_OK if report.ok else EXIT_CHECK), out


def cmd_penalty(sc, args):
    rho = sc.risk(args.risk)
    z = sc.position(args.position, dual=True)
    value = conjugate(rho, z)
    return EXIT_OK, {
        "risk": args.risk,
        "position": args.position,
        "penalty": value.to_json(),
        "admissible": [bool(a) for a in z.admissible_blocks(sc.f)],
    }


def cmd_axioms(sc, args):
    rho = sc.risk(args.risk)
    report = check_axioms(rho, trials=args.trials, seed=args.seed)
    return (EXIT_OK if report.ok else EXIT_CHECK), {"risk": args.risk, **report.to_json()}


def cmd_mazur(sc, args):
    if not args.eps > 0:
        raise SchemaError("/eps", "--eps must be positive")
    res = mazur_project(sc.family(_names(args.family, "--family")), sc.position(args.position), sc.f, args.eps)
    out = {"position": args.position, "eps": args.eps, **res.to_json()}
    return (EXIT_OK if res.ok else EXIT_CHECK), out


def cmd_separate(sc, args):
    k = GeneratedSet(sc.family(_names(args.set, "--set")), sc.f)
    x = sc.position(args.position)
    try:
        cert = separate(k, x)
    except NotSeparable as exc:
        return EXIT_CHECK, {"position": args.position, "separable": False,
                            "block": exc.block, "distance": exc.distance}
    return EXIT_OK, {"position": args.position, "separable": True,
                     "verified": cert.check(k, x), **cert.to_json()}


def cmd_bipolar(sc, args):
    k = GeneratedSet(sc.family(_names(args.set, "--set")), sc.f, closure_flags=())
    out = bipolar_report(k, sc.position(args.position), one_sided=args.one_sided)
    return EXIT_OK, {"position": args.position, **out}


COMMANDS = {
    "eval": cmd_eval,
    "dual-verify": cmd_dual_verify,
    "penalty": cmd_penalty,
    "axioms": cmd_axioms,
    "mazur": cmd_mazur,
    "separate": cmd_separate,
    "bipolar": cmd_bipolar,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="condrisk", description="Conditional risk measures on finite spaces.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, *positionals):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("scenario", help="scenario JSON file")
        for pos in positionals:
            p.add_argument(pos)
        return p

    add("eval", "evaluate rho(X) per block", "risk", "position")
    add("dual-verify", "compare rho(X) with its dual representation", "risk", "position").add_argument(
        "--tol", type=float, default=1e-6)
    add("penalty", "penalty (conjugate) of a dual element", "risk", "position")
    p = add("axioms", "randomised axiom check", "risk")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p = add("mazur", "project onto the hull of a family", "position")
    p.add_argument("--family", required=True, help="comma-separated position names")
    p.add_argument("--eps", type=float, required=True)
    add("separate", "separate a position from a generated set", "position").add_argument(
        "--set", required=True, help="comma-separated position names")
    p = add("bipolar", "bipolar membership per block", "position")
    p.add_argument("--set", required=True, help="comma-separated position names")
    p.add_argument("--one-sided", action="store_true")
    return parser


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return encode_float(obj)
    return obj


def emit(report, stream):
    stream.write(json.dumps(_clean({"schema_version": SCHEMA_VERSION, **report}), sort_keys=True, indent=2))
    stream.write("\n")


def run(argv, stdout=None):
    """Run one command; returns the exit code after writing the report to ``stdout``."""
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        sc = load_scenario(args.scenario)
        code, report = COMMANDS[args.command](sc, args)
        report = {"command": args.command, "status": "ok" if code == EXIT_OK else "check_failed", **report}
    except FileNotFoundError as exc:
        code = EXIT_INPUT
        report = {"command": args.command, "status": "error",
                  "error": {"type": "FileNotFound", "message": f"{exc.filename}: {exc.strerror}"}}
    except (CondRiskError, ValueError) as exc:
        code = EXIT_INPUT
        err = {"type": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, SchemaError):
            err["pointer"] = exc.pointer
        report = {"command": args.command, "status": "error", "error": err}
    emit(report, stdout)
    return code


def main(argv=None):
    sys.exit(run(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
