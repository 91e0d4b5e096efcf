"""``nnverify`` command line.

Exit codes: 0 robust/valid, 1 counterexample or violation, 2 usage or parse
error, 3 environment error (missing file, solver unavailable), 4 undecided
(an Unknown verdict).
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import exact, grid, smt
from .grid import Outcome, Verdict
from .model_io import AND_DATA, ParseError, TrainerConfig, load_model, save_model, train_perceptron
from .net import DimensionMismatch, ShapeError, classify, network_forward, validate
from .numeric import MalformedNumber, parse_decimal, parse_scalar, render
from .query import Expectation, GridUnboundedError, QuerySyntaxError, load_query

EXIT_OK, EXIT_FOUND, EXIT_USAGE, EXIT_ENV, EXIT_UNDECIDED = 0, 1, 2, 3, 4


class _Once(argparse.Action):
    """Store an option value, rejecting repeats."""

    def __call__(self, parser, namespace, values, option_string=None):
        seen = getattr(namespace, "_seen_once", set())
        if self.dest in seen:
            parser.error(f"{option_string} given more than once")
        seen.add(self.dest)
        namespace._seen_once = seen
        setattr(namespace, self.dest, values)


class _UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nnverify", description="Verify small feed-forward networks.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check weight range, bias and output invariants")
    s.add_argument("model")
    s.add_argument("--format", choices=["human", "json"], default="human", action=_Once)

    s = sub.add_parser("infer", help="exact forward pass")
    s.add_argument("model")
    s.add_argument("--input", required=True, action=_Once)
    s.add_argument("--format", choices=["human", "json"], default="human", action=_Once)

    s = sub.add_parser("train-and", help="train a perceptron on the and-gate truth table")
    s.add_argument("-o", "--output", required=True, action=_Once)
    s.add_argument("--eta", default="0.1", action=_Once)
    s.add_argument("--epochs", type=int, default=10, action=_Once)
    s.add_argument("--seed", type=int, default=1, action=_Once)

    s = sub.add_parser("verify", help="check a robustness query")
    s.add_argument("model")
    s.add_argument("spec")
    s.add_argument("--method", required=True, choices=["grid", "corner", "ibp", "smt", "auto"], action=_Once)
    s.add_argument("--solver-cmd", default=smt.DEFAULT_SOLVER, action=_Once)
    s.add_argument("--timeout", type=float, default=30.0, action=_Once)
    s.add_argument("--jobs", type=int, default=1, action=_Once)
    s.add_argument("--format", choices=["human", "json"], default="human", action=_Once)

    s = sub.add_parser("covering", help="certify that a grid verdict covers the region")
    s.add_argument("model")
    s.add_argument("spec")
    s.add_argument("--format", choices=["human", "json"], default="human", action=_Once)

    s = sub.add_parser("encode", help="write an SMT-LIB2 script")
    s.add_argument("model")
    s.add_argument("spec")
    s.add_argument("-o", "--output", required=True, action=_Once)
    s.add_argument("--style", choices=["grid", "full"], default="grid", action=_Once)

    s = sub.add_parser("replay", help="run a candidate input through the network")
    s.add_argument("model")
    s.add_argument("--input", required=True, action=_Once)
    s.add_argument("--expect", required=True, type=int, action=_Once)
    s.add_argument("--format", choices=["human", "json"], default="human", action=_Once)

    s = sub.add_parser("nearest", help="closest grid point with a different class")
    s.add_argument("model")
    s.add_argument("spec")
    s.add_argument("--format", choices=["human", "json"], default="human", action=_Once)
    return p


def _emit(data: dict, fmt: str, out) -> None:
    if fmt == "json":
        out.write(json.dumps(data, indent=2) + "\n")
        return
    for key, value in data.items():
        if value is None or value == "" or value == []:
            continue
        if isinstance(value, list):
            value = ", ".join(str(v) for v in value)
        out.write(f"{key}: {value}\n")


def _verdict_exit(v: Verdict) -> int:
    if v.outcome is Outcome.COUNTEREXAMPLE:
        return EXIT_FOUND
    return EXIT_OK if v.robust else EXIT_UNDECIDED


def _smt_verify(net, q, args) -> Verdict:
    script = smt.encode_full(net, q)
    result = smt.run_solver(script, args.solver_cmd, args.timeout)
    if result.status == "unsat":
        return Verdict(Outcome.ROBUST, "smt", soundness_note="solver: negated expectation unsatisfiable on the region")
    if result.status == "sat":
        candidate = result.model.vector(script.input_vars)
        v = grid.replay(net, candidate, q.expect)
        if v.outcome is Outcome.COUNTEREXAMPLE:
            note = "solver model replayed and confirmed"
            if v.soundness_note:
                note += "; " + v.soundness_note
            return Verdict(Outcome.COUNTEREXAMPLE, "smt", v.witness, v.witness_output, 1, note)
        return Verdict(Outcome.UNKNOWN, "smt", soundness_note="solver model did not replay as a counterexample")
    return Verdict(Outcome.UNKNOWN, "smt", soundness_note=f"solver status {result.status} {result.note}".strip())


def _auto_verify(net, q, args) -> Verdict:
    try:
        return exact.corner_check(net, q)
    except exact.UnsupportedShape:
        pass
    if q.finite:
        v = exact.ibp_check(net, q)
        if v.outcome is not Outcome.UNKNOWN:
            return v
    if q.grid_step is not None and q.finite:
        return grid.grid_check(net, q, jobs=args.jobs)
    return Verdict(Outcome.UNKNOWN, "auto", soundness_note="no in-process method decided the query")


def _verify(net, q, args) -> Verdict:
    if q.expect is None:
        raise _UsageError("spec has no 'expect' clause")
    if args.method == "grid":
        cert = None
        try:
            cert = exact.check_covering(net, q)
        except exact.UnsupportedShape:
            pass
        v = grid.grid_check(net, q, certificate=cert, jobs=args.jobs)
        if cert is not None:
            v.details["covering"] = cert.to_dict()
        return v
    if args.method == "corner":
        return exact.corner_check(net, q)
    if args.method == "ibp":
        return exact.ibp_check(net, q)
    if args.method == "smt":
        return _smt_verify(net, q, args)
    return _auto_verify(net, q, args)


def _vector_arg(text: str) -> list[Fraction]:
    return [parse_scalar(t) for t in text.split(",")]


def _run(args, out) -> int:
    cmd = args.command
    if cmd == "train-and":
        cfg = TrainerConfig(eta=parse_scalar(args.eta), n_iter=args.epochs, seed=args.seed)
        net = train_perceptron(AND_DATA, cfg)
        save_model(net, args.output)
        table_ok = all(classify(net, x) == y for x, y in AND_DATA)
        layer = net.layers[0]
        _emit({"model": args.output, "bias": render(layer.bias[0]),
               "weights": [render(w) for w in layer.weights[0]], "truth_table_ok": table_ok}, "human", out)
        return EXIT_OK

    net = load_model(args.model)
    fmt = getattr(args, "format", "human")
    if cmd == "validate":
        report = validate(net)
        _emit({"output_binary": report.output_binary, "bias_positive": report.bias_positive,
               "weights_in_range": report.weights_in_range, "violations": report.violations}, fmt, out)
        return EXIT_OK if report.ok else EXIT_FOUND
    if cmd == "infer":
        x = _vector_arg(args.input)
        y = network_forward(net, x)
        _emit({"output": [render(v) for v in y], "class": classify(net, x)}, fmt, out)
        return EXIT_OK
    if cmd == "replay":
        candidate = [parse_decimal(t) for t in args.input.split(",")]
        v = grid.replay(net, candidate, Expectation("class", args.expect))
        _emit(v.to_dict(), fmt, out)
        return _verdict_exit(v)

    q = load_query(args.spec, net.input_dim)
    if cmd == "verify":
        v = _verify(net, q, args)
        _emit(v.to_dict(), fmt, out)
        return _verdict_exit(v)
    if cmd == "covering":
        cert = exact.check_covering(net, q)
        _emit(cert.to_dict(), fmt, out)
        return EXIT_OK if cert.covered else EXIT_FOUND
    if cmd == "encode":
        script = smt.encode_grid(net, q) if args.style == "grid" else smt.encode_full(net, q)
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(script.text)
        _emit({"wrote": args.output, "style": script.style}, "human", out)
        return EXIT_OK
    if cmd == "nearest":
        report = grid.nearest_adversarial(net, q)
        if report is None:
            _emit({"nearest": None, "result": "no grid point changes class"}, fmt, out)
            return EXIT_OK
        _emit(report.to_dict(), fmt, out)
        return EXIT_FOUND
    raise _UsageError(f"unknown command {cmd}")  # pragma: no cover


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _run(args, sys.stdout)
    except (OSError, smt.SolverLaunchError) as exc:
        print(f"nnverify: {exc}", file=sys.stderr)
        return EXIT_ENV
    except (ParseError, ShapeError, QuerySyntaxError, MalformedNumber, DimensionMismatch,
            GridUnboundedError, exact.UnsupportedShape, smt.SolverProtocolError, _UsageError, ValueError) as exc:
        print(f"nnverify: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
