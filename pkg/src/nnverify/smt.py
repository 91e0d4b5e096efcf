"""SMT-LIB2 encodings of robustness queries and a subprocess solver driver.

Two encodings are produced:

``grid``
    Region bounds plus one disjunction of grid values per input.  Models of
    the script are exactly the grid points; the network is not encoded, the
    candidates are meant to be replayed through :func:`nnverify.grid.replay`.
``full``
    Every layer is encoded in linear real arithmetic with ``ite`` for ReLU and
    threshold units, and the negated expectation is asserted.  ``unsat``
    means the network is robust on the whole region.

All constants are written as exact rationals.  The solver is any executable
that reads SMT-LIB2 on stdin (``z3 -in``, ``cvc5``).
"""

from __future__ import annotations

import re
import shlex
import subprocess
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

from .net import Network
from .numeric import MalformedNumber, ParsedDecimal, parse_decimal
from .query import Expectation, GridUnboundedError, RobustnessQuery, grid_points

HEADER = "(set-option :produce-models true)\n(set-logic QF_LRA)\n"
FOOTER = "(check-sat)\n(get-model)\n"
DEFAULT_SOLVER = "z3 -in"


class UnsupportedActivation(ValueError):
    pass


class SolverLaunchError(RuntimeError):
    pass


class SolverProtocolError(ValueError):
    def __init__(self, message: str, raw: str = ""):
        self.raw = raw
        super().__init__(message)


@dataclass(frozen=True)
class SmtScript:
    text: str
    style: str
    input_vars: tuple[str, ...]

    def __str__(self) -> str:
        return self.text


def const(r: Fraction) -> str:
    """Exact SMT-LIB real literal for ``r``."""
    r = Fraction(r)
    a = abs(r)
    body = f"{a.numerator}.0" if a.denominator == 1 else f"(/ {a.numerator} {a.denominator})"
    return f"(- {body})" if r < 0 else body


def input_names(n: int) -> tuple[str, ...]:
    return tuple(f"x_{i}" for i in range(n))


def _declare(names: Sequence[str]) -> str:
    return "".join(f"(declare-const {v} Real)\n" for v in names)


def _bounds(q: RobustnessQuery, names: Sequence[str]) -> str:
    out = []
    for v, iv in zip(names, q.region):
        if not isinstance(iv.lo, float):
            out.append(f"(assert (<= {const(iv.lo)} {v}))\n")
        if not isinstance(iv.hi, float):
            out.append(f"(assert (<= {v} {const(iv.hi)}))\n")
    return "".join(out)


def encode_grid(net: Network, q: RobustnessQuery) -> SmtScript:
    if q.input_dim != net.input_dim:
        raise ValueError(f"query has {q.input_dim} dimensions, network expects {net.input_dim}")
    points = grid_points(q)
    names = input_names(q.input_dim)
    parts = ["; ladder candidates: region bounds and grid values per input\n", HEADER, _declare(names), _bounds(q, names)]
    if len(points) == 0:
        parts.append("(assert false)\n")
    else:
        for v, axis in zip(names, points.axes):
            eqs = [f"(= {v} {const(c)})" for c in axis]
            parts.append(f"(assert {eqs[0]})\n" if len(eqs) == 1 else f"(assert (or {' '.join(eqs)}))\n")
    parts.append(FOOTER)
    return SmtScript("".join(parts), "grid", names)


def _affine(row, bias, inputs) -> str:
    terms = [f"(* {const(w)} {x})" for w, x in zip(row, inputs)]
    terms.append(const(bias))
    return f"(+ {' '.join(terms)})"


def _negated_expectation(net: Network, expect: Expectation, outputs: Sequence[str]) -> str:
    v = expect.value
    if expect.kind == "output" or net.binary_output:
        return f"(not (= {outputs[0]} {const(v)}))"
    if v >= len(outputs):
        return "true"
    k = outputs[v]
    wins = [f"(> {k} {outputs[j]})" for j in range(v)]
    wins += [f"(>= {k} {outputs[j]})" for j in range(v + 1, len(outputs))]
    if not wins:
        return "false"
    if len(wins) == 1:
        return f"(not {wins[0]})"
    return f"(not (and {' '.join(wins)}))"


def encode_full(net: Network, q: RobustnessQuery) -> SmtScript:
    if q.input_dim != net.input_dim:
        raise ValueError(f"query has {q.input_dim} dimensions, network expects {net.input_dim}")
    if q.expect is None:
        raise ValueError("query has no expectation")
    names = input_names(q.input_dim)
    decls = list(names)
    body = []
    current = names
    for li, layer in enumerate(net.layers, start=1):
        act = layer.activation
        if act.kind not in ("identity", "relu", "threshold"):
            raise UnsupportedActivation(act.kind)
        zs = [f"z_{li}_{j}" for j in range(layer.out_dim)]
        as_ = [f"a_{li}_{j}" for j in range(layer.out_dim)]
        decls += zs + as_
        for j, (row, b) in enumerate(zip(layer.weights, layer.bias)):
            body.append(f"(assert (= {zs[j]} {_affine(row, b, current)}))\n")
            if act.kind == "relu":
                rhs = f"(ite (>= {zs[j]} 0.0) {zs[j]} 0.0)"
            elif act.kind == "threshold":
                rhs = f"(ite (>= {zs[j]} {const(act.theta)}) 1.0 0.0)"
            else:
                rhs = zs[j]
            body.append(f"(assert (= {as_[j]} {rhs}))\n")
        current = as_
    parts = [
        "; network encoding: counterexample search, unsat means robust on the region\n",
        HEADER,
        _declare(decls),
        _bounds(q, names),
        "".join(body),
        "; negated expectation\n",
        f"(assert {_negated_expectation(net, q.expect, current)})\n",
        FOOTER,
    ]
    return SmtScript("".join(parts), "full", names)


# -- s-expressions -----------------------------------------------------------

_SEXP_TOKEN = re.compile(r'\s+|;[^\n]*|(\()|(\))|("(?:[^"]|"")*")|(\|[^|]*\|)|([^\s()";|]+)')

SExpr = Union[str, list]


def read_sexprs(text: str) -> list[SExpr]:
    stack: list[list] = [[]]
    pos = 0
    while pos < len(text):
        m = _SEXP_TOKEN.match(text, pos)
        if m is None:
            raise SolverProtocolError(f"unreadable text at offset {pos}: {text[pos:pos + 20]!r}", text)
        pos = m.end()
        if m.group(1):
            stack.append([])
        elif m.group(2):
            if len(stack) == 1:
                raise SolverProtocolError(f"unbalanced ')' at offset {m.start()}", text)
            done = stack.pop()
            stack[-1].append(done)
        elif m.group(3) or m.group(4) or m.group(5):
            stack[-1].append(m.group(m.lastindex))
    if len(stack) != 1:
        raise SolverProtocolError("unbalanced '(' in solver text", text)
    return stack[0]


def write_sexpr(e: SExpr) -> str:
    if isinstance(e, list):
        return "(" + " ".join(write_sexpr(x) for x in e) + ")"
    return e


# -- exact evaluator for emitted assertions ----------------------------------


def _eval(e: SExpr, env: Mapping[str, Fraction]):
    if isinstance(e, str):
        if e == "true":
            return True
        if e == "false":
            return False
        if e in env:
            return Fraction(env[e])
        try:
            return parse_decimal(e).value
        except MalformedNumber:
            raise KeyError(f"unbound symbol {e!r}") from None
    op, *args = e
    if op == "ite":
        return _eval(args[1], env) if _eval(args[0], env) else _eval(args[2], env)
    if op == "and":
        return all(_eval(a, env) for a in args)
    if op == "or":
        return any(_eval(a, env) for a in args)
    vals = [_eval(a, env) for a in args]
    if op == "not":
        return not vals[0]
    if op == "+":
        return sum(vals, Fraction(0))
    if op == "-":
        return -vals[0] if len(vals) == 1 else vals[0] - sum(vals[1:], Fraction(0))
    if op == "*":
        out = Fraction(1)
        for v in vals:
            out *= v
        return out
    if op == "/":
        return vals[0] / vals[1]
    chains = {"=": lambda a, b: a == b, "<=": lambda a, b: a <= b, ">=": lambda a, b: a >= b,
              "<": lambda a, b: a < b, ">": lambda a, b: a > b}
    if op in chains:
        return all(chains[op](a, b) for a, b in zip(vals, vals[1:]))
    raise ValueError(f"unsupported operator {op!r}")


def assertions(script: Union[SmtScript, str]) -> list[SExpr]:
    text = script.text if isinstance(script, SmtScript) else script
    return [cmd[1] for cmd in read_sexprs(text) if isinstance(cmd, list) and cmd and cmd[0] == "assert"]


def evaluate_assertions(script: Union[SmtScript, str], env: Mapping[str, Fraction]) -> list[tuple[str, bool]]:
    """Truth value of every ``assert`` under ``env``, computed exactly."""
    return [(write_sexpr(a), bool(_eval(a, env))) for a in assertions(script)]


def satisfies(script: Union[SmtScript, str], env: Mapping[str, Fraction]) -> bool:
    return all(ok for _, ok in evaluate_assertions(script, env))


# -- models and the solver driver -------------------------------------------


@dataclass(frozen=True)
class SmtModel:
    assignments: dict[str, ParsedDecimal]
    raw: str = field(default="", compare=False)

    def vector(self, names: Sequence[str]) -> list[ParsedDecimal]:
        missing = [n for n in names if n not in self.assignments]
        if missing:
            raise SolverProtocolError(f"model does not assign {missing}", self.raw)
        return [self.assignments[n] for n in names]

    @property
    def inexact(self) -> bool:
        return any(v.inexact for v in self.assignments.values())


def _definitions(items: list) -> list:
    if len(items) == 1 and isinstance(items[0], list):
        inner = items[0]
        if inner and inner[0] == "model":
            return inner[1:]
        if not inner or isinstance(inner[0], list):
            return inner
    return items


def parse_model(raw: str, expected: Sequence[str] = ()) -> SmtModel:
    """Read a ``get-model`` response into exact assignments."""
    assignments: dict[str, ParsedDecimal] = {}
    for d in _definitions(read_sexprs(raw)):
        if not (isinstance(d, list) and d and d[0] == "define-fun"):
            raise SolverProtocolError(f"unexpected model entry {write_sexpr(d)[:80]!r}", raw)
        if len(d) != 5:
            raise SolverProtocolError(f"malformed definition {write_sexpr(d)[:80]!r}", raw)
        _, name, params, sort, value = d
        if params:
            continue  # only constants matter
        if sort not in ("Real", "Int"):
            raise SolverProtocolError(f"{name} has non-numeric sort {write_sexpr(sort)}", raw)
        try:
            assignments[name.strip("|")] = parse_decimal(write_sexpr(value))
        except MalformedNumber as exc:
            raise SolverProtocolError(f"value of {name}: {exc}", raw) from None
    model = SmtModel(assignments, raw)
    model.vector(expected)
    return model


@dataclass(frozen=True)
class SolverResult:
    status: str  # sat | unsat | unknown | solver-error
    model: Optional[SmtModel] = None
    stderr_excerpt: str = ""
    note: str = ""

    def __post_init__(self):
        if (self.model is not None) != (self.status == "sat"):
            raise ValueError("a model is present exactly when the status is sat")


def _excerpt(text: str, limit: int = 400) -> str:
    text = text.strip()
    return text if len(text) <= limit else text[:limit] + "..."


def run_solver(script: Union[SmtScript, str], solver_cmd: str = DEFAULT_SOLVER, timeout: float = 30.0) -> SolverResult:
    text = script.text if isinstance(script, SmtScript) else script
    expected = script.input_vars if isinstance(script, SmtScript) else ()
    argv = shlex.split(solver_cmd)
    if not argv:
        raise SolverLaunchError("empty solver command")
    try:
        proc = subprocess.run(argv, input=text, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        return SolverResult("unknown", note=f"solver timed out after {timeout} s")
    except OSError as exc:
        raise SolverLaunchError(f"cannot run {argv[0]!r}: {exc}") from exc
    if proc.returncode < 0:
        raise SolverLaunchError(f"{argv[0]} was killed by signal {-proc.returncode}")

    out = proc.stdout
    items = read_sexprs(out)
    if not items:
        if proc.returncode != 0:
            return SolverResult("solver-error", stderr_excerpt=_excerpt(proc.stderr or out),
                                note=f"exit status {proc.returncode}")
        raise SolverProtocolError("solver produced no output", out)
    head = items[0]
    if isinstance(head, list) and head and head[0] == "error":
        return SolverResult("solver-error", stderr_excerpt=_excerpt(write_sexpr(head) + "\n" + proc.stderr))
    if head not in ("sat", "unsat", "unknown"):
        raise SolverProtocolError(f"unexpected first result {write_sexpr(head)[:80]!r}", out)
    if head != "sat":
        return SolverResult(head, stderr_excerpt=_excerpt(proc.stderr))
    rest = items[1:]
    if not rest or (isinstance(rest[0], list) and rest[0] and rest[0][0] == "error"):
        raise SolverProtocolError("sat without a model", out)
    model_text = out[out.index("sat") + 3:]
    return SolverResult("sat", parse_model(model_text, expected), _excerpt(proc.stderr))
