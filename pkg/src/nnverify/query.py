"""Robustness queries: data model, text DSL and grid enumeration.

A query file has one clause per line; ``#`` starts a comment::

    region x[0] in [0.7, 1.5]
    region x[1] in [0.7, 1.5]
    grid step 0.05
    grid cap 0.95        # optional: ignore grid points above this value
    expect class 1       # or: expect output 0|1
    norm inf             # 1, 2 or inf
    anchor 1, 1          # reference input for nearest-adversarial search

Scalars are decimals or ``a/b`` rationals; bounds may also be ``-inf``/``inf``.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence, Union

from .net import Network, classify, network_forward
from .numeric import MalformedNumber, parse_scalar, render

Bound = Union[Fraction, float]  # float only for +/-inf


class QuerySyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class DimensionOutOfRange(QuerySyntaxError):
    pass


class ConflictingClause(QuerySyntaxError):
    pass


class GridUnboundedError(ValueError):
    pass


@dataclass(frozen=True)
class Interval:
    lo: Bound = -math.inf
    hi: Bound = math.inf

    def __post_init__(self):
        for name in ("lo", "hi"):
            v = getattr(self, name)
            if isinstance(v, float):
                if not math.isinf(v):
                    object.__setattr__(self, name, Fraction(v))
            else:
                object.__setattr__(self, name, Fraction(v))
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def finite(self) -> bool:
        return not (isinstance(self.lo, float) or isinstance(self.hi, float))

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def __str__(self) -> str:
        return f"[{render_bound(self.lo)}, {render_bound(self.hi)}]"


def render_bound(b: Bound) -> str:
    if isinstance(b, float):
        return "inf" if b > 0 else "-inf"
    return render(b)


@dataclass(frozen=True)
class Expectation:
    """Expected result: ``class k`` (via :func:`classify`) or ``output v``."""

    kind: str
    value: int

    def __post_init__(self):
        if self.kind not in ("class", "output"):
            raise ValueError(f"unknown expectation kind {self.kind!r}")
        if self.kind == "output" and self.value not in (0, 1):
            raise ValueError("expected output must be 0 or 1")

    def observed(self, net: Network, x: Sequence) -> int | Fraction:
        if self.kind == "output":
            if net.output_dim != 1:
                raise ValueError("'expect output' needs a single-output network")
            return network_forward(net, x)[0]
        return classify(net, x)

    def holds(self, net: Network, x: Sequence) -> bool:
        return self.observed(net, x) == self.value

    def __str__(self) -> str:
        return f"{self.kind} {self.value}"


def as_expectation(expect: Union[Expectation, int]) -> Expectation:
    return expect if isinstance(expect, Expectation) else Expectation("class", int(expect))


NORMS = {"1": 1, "2": 2, "inf": math.inf}


@dataclass(frozen=True)
class RobustnessQuery:
    region: tuple[Interval, ...]
    grid_step: Optional[Fraction] = None
    grid_cap: Optional[Fraction] = None
    expect: Optional[Expectation] = None
    norm: Union[int, float] = math.inf
    anchor: Optional[tuple[Fraction, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "region", tuple(self.region))
        if self.grid_step is not None:
            step = Fraction(self.grid_step)
            if step <= 0:
                raise ValueError("grid step must be positive")
            object.__setattr__(self, "grid_step", step)
        if self.grid_cap is not None:
            object.__setattr__(self, "grid_cap", Fraction(self.grid_cap))
        if self.norm not in (1, 2, math.inf):
            raise ValueError(f"unsupported norm {self.norm!r}")
        if self.anchor is not None:
            anchor = tuple(Fraction(a) for a in self.anchor)
            if len(anchor) != len(self.region):
                raise ValueError(f"anchor has {len(anchor)} coordinates, region has {len(self.region)}")
            object.__setattr__(self, "anchor", anchor)

    @property
    def input_dim(self) -> int:
        return len(self.region)

    @property
    def finite(self) -> bool:
        return all(iv.finite for iv in self.region)

    def contains(self, x: Sequence) -> bool:
        return len(x) == len(self.region) and all(v in iv for v, iv in zip(x, self.region))

    def dim_grid(self, i: int) -> list[Fraction]:
        """Multiples of the grid step inside dimension ``i`` (anchored at 0)."""
        if self.grid_step is None:
            raise GridUnboundedError("query has no grid step")
        iv = self.region[i]
        if not iv.finite:
            raise GridUnboundedError(f"dimension {i} is unbounded: {iv}")
        hi = iv.hi if self.grid_cap is None else min(iv.hi, self.grid_cap)
        step = self.grid_step
        k_lo = math.ceil(iv.lo / step)
        k_hi = math.floor(hi / step)
        return [k * step for k in range(k_lo, k_hi + 1)]

    def on_grid(self, x: Sequence[Fraction]) -> bool:
        if not self.contains(x):
            return False
        for v in x:
            if (v / self.grid_step).denominator != 1:
                return False
            if self.grid_cap is not None and v > self.grid_cap:
                return False
        return True


class GridPoints:
    """Lazily enumerated Cartesian grid, lexicographic by dimension."""

    def __init__(self, query: RobustnessQuery):
        self.query = query
        self.axes = [query.dim_grid(i) for i in range(query.input_dim)]

    def __len__(self) -> int:
        return math.prod(len(a) for a in self.axes)

    def __iter__(self) -> Iterator[tuple[Fraction, ...]]:
        return itertools.product(*self.axes)


def grid_points(q: RobustnessQuery) -> GridPoints:
    return GridPoints(q)


# -- parser ------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>[+-]?(?:inf|\d+/\d+|\d+(?:\.\d*)?|\.\d+))|(?P<word>[A-Za-z_]+)|(?P<punct>[\[\],]))")


class _Line:
    def __init__(self, text: str, lineno: int):
        self.lineno = lineno
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                col = pos + len(text[pos:]) - len(text[pos:].lstrip()) + 1
                raise QuerySyntaxError(f"unexpected character {text[col - 1]!r}", lineno, col)
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind) + 1))
            pos = m.end()
        self.end_col = len(text) + 1
        self.i = 0

    def error(self, message: str, cls=QuerySyntaxError):
        col = self.tokens[self.i][2] if self.i < len(self.tokens) else self.end_col
        return cls(message, self.lineno, col)

    def peek(self) -> Optional[str]:
        return self.tokens[self.i][1] if self.i < len(self.tokens) else None

    def expect(self, value: str) -> None:
        if self.peek() != value:
            found = self.peek()
            raise self.error(f"expected {value!r}, found {found!r}" if found else f"expected {value!r}")
        self.i += 1

    def number(self, allow_inf: bool = False) -> Bound:
        if self.i >= len(self.tokens) or self.tokens[self.i][0] != "num":
            raise self.error("expected a number")
        text = self.tokens[self.i][1]
        if text.lstrip("+-") == "inf":
            if not allow_inf:
                raise self.error("infinity not allowed here")
            self.i += 1
            return -math.inf if text.startswith("-") else math.inf
        try:
            value = parse_scalar(text)
        except MalformedNumber:
            raise self.error(f"bad number {text!r}")
        self.i += 1
        return value

    def integer(self) -> int:
        at = self.i
        v = self.number()
        if v.denominator != 1:
            self.i = at
            raise self.error("expected an integer")
        return int(v)

    def word(self) -> str:
        if self.i >= len(self.tokens) or self.tokens[self.i][0] != "word":
            raise self.error("expected a keyword")
        w = self.tokens[self.i][1]
        self.i += 1
        return w

    def done(self) -> None:
        if self.i < len(self.tokens):
            raise self.error(f"unexpected {self.peek()!r}")


def parse_query(text: str, input_dim: int) -> RobustnessQuery:
    if input_dim < 1:
        raise ValueError("input_dim must be positive")
    region: list[Optional[Interval]] = [None] * input_dim
    fields: dict = {}

    def set_once(line: _Line, key: str, value) -> None:
        if key in fields:
            line.i = 0
            raise line.error(f"duplicate '{key.replace('_', ' ')}' clause", ConflictingClause)
        fields[key] = value

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _Line(raw.split("#", 1)[0], lineno)
        if not line.tokens:
            continue
        head = line.word()
        if head == "region":
            if line.word() != "x":
                line.i -= 1
                raise line.error("expected 'x'")
            line.expect("[")
            dim_at = line.i
            dim = line.integer()
            if dim < 0 or dim >= input_dim:
                line.i = dim_at
                raise line.error(f"dimension {dim} out of range for input_dim {input_dim}", DimensionOutOfRange)
            line.expect("]")
            if line.word() != "in":
                line.i -= 1
                raise line.error("expected 'in'")
            line.expect("[")
            lo = line.number(allow_inf=True)
            line.expect(",")
            hi = line.number(allow_inf=True)
            line.expect("]")
            line.done()
            if region[dim] is not None:
                line.i = dim_at
                raise line.error(f"dimension {dim} constrained twice", ConflictingClause)
            if lo > hi:
                raise QuerySyntaxError(f"empty interval [{lo}, {hi}]", lineno, 1)
            region[dim] = Interval(lo, hi)
        elif head == "grid":
            sub = line.word()
            if sub not in ("step", "cap"):
                line.i -= 1
                raise line.error("expected 'step' or 'cap'")
            value_at = line.i
            value = line.number()
            line.done()
            if sub == "step" and value <= 0:
                line.i = value_at
                raise line.error("grid step must be positive")
            set_once(line, f"grid_{sub}", value)
        elif head == "expect":
            kind = line.word()
            if kind not in ("class", "output"):
                line.i -= 1
                raise line.error("expected 'class' or 'output'")
            value_at = line.i
            value = line.integer()
            line.done()
            if value < 0 or (kind == "output" and value not in (0, 1)):
                line.i = value_at
                raise line.error(f"invalid expected {kind} {value}")
            set_once(line, "expect", Expectation(kind, value))
        elif head == "norm":
            if line.peek() is None:
                raise line.error("expected 1, 2 or inf")
            tok = line.peek()
            if tok not in NORMS:
                raise line.error("expected 1, 2 or inf")
            line.i += 1
            line.done()
            set_once(line, "norm", NORMS[tok])
        elif head == "anchor":
            coords = [line.number()]
            while line.peek() == ",":
                line.i += 1
                coords.append(line.number())
            line.done()
            if len(coords) != input_dim:
                line.i = 1
                raise line.error(f"anchor has {len(coords)} coordinates, expected {input_dim}", DimensionOutOfRange)
            set_once(line, "anchor", tuple(coords))
        else:
            line.i = 0
            raise line.error(f"unknown clause {head!r}")

    full_region = tuple(iv if iv is not None else Interval() for iv in region)
    return RobustnessQuery(full_region, **fields)


def render_query(q: RobustnessQuery) -> str:
    """Canonical text form; ``parse_query(render_query(q), n) == q``."""
    lines = []
    for i, iv in enumerate(q.region):
        if iv != Interval():
            lines.append(f"region x[{i}] in {iv}")
    if q.grid_step is not None:
        lines.append(f"grid step {render(q.grid_step)}")
    if q.grid_cap is not None:
        lines.append(f"grid cap {render(q.grid_cap)}")
    if q.expect is not None:
        lines.append(f"expect {q.expect}")
    if q.norm != math.inf:
        lines.append(f"norm {q.norm}")
    if q.anchor is not None:
        lines.append("anchor " + ", ".join(render(a) for a in q.anchor))
    return "\n".join(lines) + "\n"


def load_query(path, input_dim: int) -> RobustnessQuery:
    with open(path, encoding="utf-8") as fh:
        return parse_query(fh.read(), input_dim)
