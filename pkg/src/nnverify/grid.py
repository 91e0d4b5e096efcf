"""Ladder falsification: evaluate a network on every grid point of a query.

Grid verdicts only speak about the grid.  ``Robust`` from :func:`grid_check`
means "no counterexample among the points checked"; it says something about
the whole region only when a :class:`~nnverify.exact.CoveringCertificate`
that certifies the query is supplied.
"""

from __future__ import annotations

import enum
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from .net import DimensionMismatch, Network, classify
from .numeric import ParsedDecimal, render, to_float
from .query import Expectation, RobustnessQuery, as_expectation, grid_points


class ArityMismatch(DimensionMismatch):
    pass


class WitnessError(AssertionError):
    """A claimed counterexample does not violate the expectation."""


class Outcome(enum.Enum):
    ROBUST = "Robust"
    COUNTEREXAMPLE = "CounterexampleFound"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    method: str
    witness: Optional[tuple[Fraction, ...]] = None
    witness_output: Optional[Union[int, Fraction]] = None
    points_checked: int = 0
    soundness_note: str = ""
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.outcome is Outcome.COUNTEREXAMPLE and self.witness is None:
            raise WitnessError("a counterexample verdict needs a witness")

    @property
    def robust(self) -> bool:
        return self.outcome is Outcome.ROBUST

    def to_dict(self) -> dict:
        d = {
            "outcome": self.outcome.value,
            "method": self.method,
            "witness": None if self.witness is None else [render(v) for v in self.witness],
            "witness_output": None if self.witness_output is None else render(Fraction(self.witness_output)),
            "points_checked": self.points_checked,
            "soundness_note": self.soundness_note,
        }
        for key, value in self.details.items():
            d[key] = _jsonable(value)
        return d


def _jsonable(value):
    if isinstance(value, Fraction):
        return render(value)
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def counterexample(net: Network, expect: Expectation, witness: Sequence, method: str, **kwargs) -> Verdict:
    """Build a CounterexampleFound verdict after re-checking the witness exactly."""
    witness = tuple(Fraction(v) for v in witness)
    observed = expect.observed(net, witness)
    if observed == expect.value:
        raise WitnessError(f"witness {[render(v) for v in witness]} satisfies expectation {expect}")
    return Verdict(Outcome.COUNTEREXAMPLE, method, witness, observed, **kwargs)


def _check_arity(net: Network, q: RobustnessQuery) -> None:
    if q.input_dim != net.input_dim:
        raise ArityMismatch(net.input_dim, q.input_dim, "query")


def _first_violation(net: Network, expect: Expectation, points: Sequence) -> Optional[int]:
    for i, p in enumerate(points):
        if not expect.holds(net, p):
            return i
    return None


def _chunks(iterable, size):
    it = iter(iterable)
    while chunk := list(itertools.islice(it, size)):
        yield chunk


def grid_check(net: Network, q: RobustnessQuery, certificate=None, jobs: int = 1,
               chunk_size: int = 4096) -> Verdict:
    """Evaluate every grid point; the first violation in enumeration order is the witness.

    ``points_checked`` counts points up to and including the witness, so the
    verdict is identical for any ``jobs`` value.
    """
    _check_arity(net, q)
    if q.expect is None:
        raise ValueError("query has no expectation")
    expect = q.expect
    points = grid_points(q)
    total = len(points)
    hit = None
    offset = 0
    if jobs > 1 and total > chunk_size:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(_chunks(points, chunk_size))
            for chunk, idx in zip(chunks, pool.map(_first_violation, itertools.repeat(net),
                                                    itertools.repeat(expect), chunks)):
                if idx is not None:
                    hit = offset + idx
                    witness = chunk[idx]
                    break
                offset += len(chunk)
    else:
        for i, p in enumerate(points):
            if not expect.holds(net, p):
                hit, witness = i, p
                break

    if hit is not None:
        return counterexample(net, expect, witness, "grid", points_checked=hit + 1,
                              soundness_note="witness re-checked with exact arithmetic")
    if total == 0:
        note = "vacuous: the grid has no points inside the region"
    elif certificate is not None and certificate.covered:
        note = "covering certified: no counterexample anywhere in the region"
    else:
        note = "no counterexample on the grid; region not certified covered"
    return Verdict(Outcome.ROBUST, "grid", points_checked=total, soundness_note=note)


def distance(a: Sequence[Fraction], b: Sequence[Fraction], norm) -> Fraction:
    """p-norm distance; for ``norm == 2`` the *squared* distance is returned."""
    diffs = [abs(Fraction(x) - Fraction(y)) for x, y in zip(a, b)]
    if norm == 1:
        return sum(diffs, Fraction(0))
    if norm == 2:
        return sum((d * d for d in diffs), Fraction(0))
    return max(diffs, default=Fraction(0))


@dataclass(frozen=True)
class AdversarialReport:
    witness: tuple[Fraction, ...]
    distance: Fraction
    norm: Union[int, float]
    reference_class: int
    witness_class: int

    @property
    def distance_float(self) -> float:
        d = to_float(self.distance)
        return math.sqrt(d) if self.norm == 2 else d

    def to_dict(self) -> dict:
        return {
            "witness": [render(v) for v in self.witness],
            "distance": render(self.distance),
            "distance_squared": self.norm == 2,
            "distance_float": self.distance_float,
            "norm": "inf" if self.norm == math.inf else self.norm,
            "reference_class": self.reference_class,
            "witness_class": self.witness_class,
        }


def nearest_adversarial(net: Network, q: RobustnessQuery) -> Optional[AdversarialReport]:
    """Grid point closest to the anchor whose class differs from the reference class.

    The reference class is the query's expected class when it has one,
    otherwise the anchor's own class.  Ties go to the lexicographically
    smallest witness.
    """
    _check_arity(net, q)
    if q.anchor is None:
        raise ValueError("query has no anchor")
    if q.expect is not None:
        reference = q.expect.value
    else:
        reference = classify(net, q.anchor)
    best = None
    for p in grid_points(q):
        cls = classify(net, p)
        if cls == reference:
            continue
        key = (distance(p, q.anchor, q.norm), p)
        if best is None or key < best[0]:
            best = (key, cls)
    if best is None:
        return None
    (dist, witness), cls = best
    return AdversarialReport(witness, dist, q.norm, reference, cls)


def replay(net: Network, candidate: Sequence[ParsedDecimal], expect: Union[Expectation, int]) -> Verdict:
    """Run an externally produced candidate through the exact network."""
    expect = as_expectation(expect)
    if len(candidate) != net.input_dim:
        raise ArityMismatch(net.input_dim, len(candidate), "candidate")
    values = tuple(c.value if isinstance(c, ParsedDecimal) else Fraction(c) for c in candidate)
    inexact = [i for i, c in enumerate(candidate) if isinstance(c, ParsedDecimal) and c.inexact]
    note = ""
    if inexact:
        note = ("warning: coordinates " + ", ".join(map(str, inexact))
                + " carried a truncation marker '?'; replayed the printed digits exactly")
    observed = expect.observed(net, values)
    if observed != expect.value:
        return counterexample(net, expect, values, "replay", points_checked=1, soundness_note=note)
    return Verdict(Outcome.ROBUST, "replay", witness_output=observed, points_checked=1, soundness_note=note)
