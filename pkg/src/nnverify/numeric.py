"""Exact rational scalars and decimal parsing.

Every verification-relevant quantity in the package is a
:class:`fractions.Fraction`.  Floats only appear at the edges (display,
float-mode inference).  The parser understands the forms an SMT solver
prints for real values, including the truncated ``0.9500000000?`` form.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Rational = Fraction

Scalar = Union[Fraction, int, str]


class MalformedNumber(ValueError):
    """Raised when text does not denote a number we accept."""

    def __init__(self, text: str, fragment: str | None = None):
        self.text = text
        self.fragment = text if fragment is None else fragment
        super().__init__(f"malformed number {self.fragment!r} in {text!r}")


@dataclass(frozen=True)
class ParsedDecimal:
    value: Fraction
    inexact: bool = False

    def __float__(self) -> float:
        return to_float(self.value)


_DECIMAL_RE = re.compile(r"([+-]?)(\d+(?:\.\d*)?|\.\d+)(\?)?")
_RATIO_RE = re.compile(r"([+-]?\d+)/(\d+)")
_TOKEN_RE = re.compile(r"\s*(\(|\)|[^\s()]+)")


def _decimal_fraction(sign: str, digits: str) -> Fraction:
    whole, _, frac = digits.partition(".")
    value = Fraction(int((whole or "0") + frac), 10 ** len(frac))
    return -value if sign == "-" else value


def _parse_atom(atom: str, text: str) -> ParsedDecimal:
    m = _DECIMAL_RE.fullmatch(atom)
    if m is None:
        raise MalformedNumber(text, atom)
    return ParsedDecimal(_decimal_fraction(m.group(1), m.group(2)), m.group(3) is not None)


def _tokenize(text: str) -> list[str]:
    tokens = []
    pos = 0
    stripped = text.rstrip()
    while pos < len(stripped):
        m = _TOKEN_RE.match(stripped, pos)
        if m is None:
            raise MalformedNumber(text, stripped[pos:])
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


def _parse_term(tokens: list[str], pos: int, text: str) -> tuple[ParsedDecimal, int]:
    if pos >= len(tokens):
        raise MalformedNumber(text, "<end of input>")
    tok = tokens[pos]
    if tok != "(":
        if tok == ")":
            raise MalformedNumber(text, tok)
        return _parse_atom(tok, text), pos + 1
    if pos + 1 >= len(tokens):
        raise MalformedNumber(text, "(")
    op = tokens[pos + 1]
    args = []
    pos += 2
    while pos < len(tokens) and tokens[pos] != ")":
        arg, pos = _parse_term(tokens, pos, text)
        args.append(arg)
    if pos >= len(tokens):
        raise MalformedNumber(text, "missing ')'")
    inexact = any(a.inexact for a in args)
    if op == "-" and len(args) == 1:
        return ParsedDecimal(-args[0].value, inexact), pos + 1
    if op == "/" and len(args) == 2:
        if args[1].value == 0:
            raise MalformedNumber(text, "division by zero")
        return ParsedDecimal(args[0].value / args[1].value, inexact), pos + 1
    raise MalformedNumber(text, f"({op} ...)")


def parse_decimal(text: str) -> ParsedDecimal:
    """Parse a decimal literal or an SMT-LIB real term into an exact value.

    Accepted: ``[+-]digits[.digits][?]``, ``(/ a b)`` and ``(- t)`` where the
    operands are again accepted terms.  A trailing ``?`` (solver notation for
    a truncated expansion) keeps the printed digits and sets ``inexact``.
    """
    if not isinstance(text, str):
        raise MalformedNumber(repr(text))
    stripped = text.strip()
    if not stripped:
        raise MalformedNumber(text, "")
    if not stripped.startswith("("):
        return _parse_atom(stripped, text)
    tokens = _tokenize(stripped)
    result, pos = _parse_term(tokens, 0, text)
    if pos != len(tokens):
        raise MalformedNumber(text, " ".join(tokens[pos:]))
    return result


def parse_scalar(value: Scalar) -> Fraction:
    """Exact value of a model/DSL scalar: int, Fraction, decimal string or ``"a/b"``.

    Inexact (``?``-suffixed) decimals are refused here: stored models and
    queries must be exact.
    """
    if isinstance(value, bool):
        raise MalformedNumber(repr(value))
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if not isinstance(value, str):
        raise MalformedNumber(repr(value))
    text = value.strip()
    m = _RATIO_RE.fullmatch(text)
    if m is not None:
        den = int(m.group(2))
        if den == 0:
            raise MalformedNumber(value, "division by zero")
        return Fraction(int(m.group(1)), den)
    parsed = parse_decimal(text)
    if parsed.inexact:
        raise MalformedNumber(value, "'?' truncation marker not allowed here")
    return parsed.value


def is_finite_decimal(r: Fraction) -> bool:
    d = r.denominator
    for p in (2, 5):
        while d % p == 0:
            d //= p
    return d == 1


def render(r: Fraction) -> str:
    """Exact text form: a decimal when the expansion terminates, else ``a/b``."""
    r = Fraction(r)
    if not is_finite_decimal(r):
        return f"{r.numerator}/{r.denominator}"
    d = r.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    places = max(twos, fives)
    scaled = abs(r.numerator) * (10**places // r.denominator)
    sign = "-" if r < 0 else ""
    if places == 0:
        return f"{sign}{scaled}"
    digits = str(scaled).rjust(places + 1, "0")
    whole, frac = digits[:-places], digits[-places:].rstrip("0")
    return f"{sign}{whole}.{frac}" if frac else f"{sign}{whole}"


def to_float_flagged(r: Fraction) -> tuple[float, bool]:
    """Nearest binary64 to ``r`` plus a flag set when the value overflowed."""
    r = Fraction(r)
    try:
        # int / int true division is correctly rounded (ties to even)
        return r.numerator / r.denominator, False
    except OverflowError:
        return (math.inf if r > 0 else -math.inf), True


def to_float(r: Fraction) -> float:
    return to_float_flagged(r)[0]
