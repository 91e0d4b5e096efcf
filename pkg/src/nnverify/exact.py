"""Sound in-process verification over whole regions.

``corner_check`` is complete for a single threshold neuron: its potential is
affine, so over a box it is minimised (maximised) at the corner picked by the
weight signs.  ``check_covering`` uses the same corner to decide when a grid
verdict transfers to the whole region.  ``ibp_check`` propagates boxes through
deeper networks; it is sound but may answer Unknown.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .grid import ArityMismatch, Outcome, Verdict, WitnessError, counterexample
from .net import Network
from .query import Expectation, GridUnboundedError, Interval, RobustnessQuery, grid_points

__all__ = [
    "CoveringCertificate",
    "Interval",
    "UnsupportedShape",
    "check_covering",
    "corner_check",
    "ibp_check",
    "propagate_intervals",
]


class UnsupportedShape(ValueError):
    pass


def _single_threshold(net: Network):
    if len(net.layers) != 1 or net.output_dim != 1 or net.layers[0].activation.kind != "threshold":
        raise UnsupportedShape("corner reasoning needs one layer with a single threshold neuron")
    layer = net.layers[0]
    return layer.weights[0], layer.bias[0], layer.activation.theta


def _finite_point(iv: Interval) -> Fraction:
    """Some finite point of ``iv``: its lower bound if finite, else nearest to 0."""
    if not isinstance(iv.lo, float):
        return iv.lo
    if not isinstance(iv.hi, float):
        return min(iv.hi, Fraction(0))
    return Fraction(0)


def _corner(weights, region, minimize: bool) -> list:
    """Per-coordinate extremal choice; may contain infinities on deciding dims."""
    corner = []
    for w, iv in zip(weights, region):
        if w == 0:
            corner.append(_finite_point(iv))
        elif (w > 0) == minimize:
            corner.append(iv.lo)
        else:
            corner.append(iv.hi)
    return corner


def _extremum(weights, bias, corner):
    total = Fraction(bias)
    for w, c in zip(weights, corner):
        if isinstance(c, float):
            return c if w > 0 else -c
        total += w * c
    return total


def _worst_side(q: RobustnessQuery) -> bool:
    """True when the worst corner minimises the potential."""
    if q.expect is None:
        raise ValueError("query has no expectation")
    return q.expect.value != 0


def _escape_witness(weights, bias, theta, region, corner, minimize: bool) -> tuple[Fraction, ...]:
    """Finite point beyond the threshold crossing along the first unbounded deciding dim."""
    base = [c if not isinstance(c, float) else _finite_point(iv) for c, iv in zip(corner, region)]
    j = next(i for i, c in enumerate(corner) if isinstance(c, float) and weights[i] != 0)
    rest = bias + sum(w * x for i, (w, x) in enumerate(zip(weights, base)) if i != j)
    crossing = (theta - rest) / weights[j]
    step = -1 if minimize else 1
    if weights[j] < 0:
        step = -step
    value = crossing + step
    iv = region[j]
    value = max(value, iv.lo) if not isinstance(iv.lo, float) else value
    value = min(value, iv.hi) if not isinstance(iv.hi, float) else value
    base[j] = value
    return tuple(base)


def corner_check(net: Network, q: RobustnessQuery) -> Verdict:
    """Decide a single threshold neuron over the whole (possibly unbounded) region."""
    weights, bias, theta = _single_threshold(net)
    if q.input_dim != net.input_dim:
        raise ArityMismatch(net.input_dim, q.input_dim, "query")
    expect = q.expect
    if expect is None:
        raise ValueError("query has no expectation")
    inf_corner = _corner(weights, q.region, minimize=True)
    sup_corner = _corner(weights, q.region, minimize=False)
    infimum = _extremum(weights, bias, inf_corner)
    supremum = _extremum(weights, bias, sup_corner)
    details = {"infimum": infimum, "supremum": supremum, "theta": theta}
    note = "complete: holds for every real point of the region"

    if expect.value == 1:
        robust, minimize, corner = infimum >= theta, True, inf_corner
    elif expect.value == 0:
        robust, minimize, corner = supremum < theta, False, sup_corner
    else:
        robust, minimize, corner = False, True, inf_corner
    if robust:
        details["worst_corner"] = corner
        return Verdict(Outcome.ROBUST, "corner", details=details, soundness_note=note)

    if any(isinstance(c, float) for c in corner):
        witness = _escape_witness(weights, bias, theta, q.region, corner, minimize)
    else:
        witness = tuple(corner)
        details["worst_corner"] = corner
    return counterexample(net, expect, witness, "corner", details=details, soundness_note=note)


@dataclass(frozen=True)
class CoveringCertificate:
    worst_corner: tuple[Fraction, ...]
    worst_corner_on_grid: bool
    verdict_forced: bool

    @property
    def covered(self) -> bool:
        return self.worst_corner_on_grid or self.verdict_forced

    def to_dict(self) -> dict:
        from .numeric import render

        return {
            "worst_corner": [render(c) for c in self.worst_corner],
            "worst_corner_on_grid": self.worst_corner_on_grid,
            "verdict_forced": self.verdict_forced,
            "covered": self.covered,
        }


def check_covering(net: Network, q: RobustnessQuery) -> CoveringCertificate:
    """Can a grid verdict for ``q`` be trusted on the whole region?

    Yes when the worst corner is itself a grid point (the grid then checks
    the point that decides the region), or when the potential is constant on
    the region and the grid is non-empty (every point, on or off grid, gives
    the same output).
    """
    weights, _, _ = _single_threshold(net)
    if q.input_dim != net.input_dim:
        raise ArityMismatch(net.input_dim, q.input_dim, "query")
    points = grid_points(q)  # raises GridUnboundedError for missing step / infinite bounds
    corner = tuple(_corner(weights, q.region, minimize=_worst_side(q)))
    constant = all(w == 0 or iv.lo == iv.hi for w, iv in zip(weights, q.region))
    return CoveringCertificate(corner, q.on_grid(corner), constant and len(points) > 0)


# -- interval bound propagation ---------------------------------------------


def _affine_bounds(layer, box: Sequence[Interval]) -> list[Interval]:
    out = []
    for row, b in zip(layer.weights, layer.bias):
        lo = hi = Fraction(b)
        for w, iv in zip(row, box):
            if w >= 0:
                lo += w * iv.lo
                hi += w * iv.hi
            else:
                lo += w * iv.hi
                hi += w * iv.lo
        out.append(Interval(lo, hi))
    return out


def _activate_bounds(act, iv: Interval) -> Interval:
    if act.kind == "relu":
        return Interval(max(iv.lo, Fraction(0)), max(iv.hi, Fraction(0)))
    if act.kind == "threshold":
        if iv.lo >= act.theta:
            return Interval(1, 1)
        if iv.hi < act.theta:
            return Interval(0, 0)
        return Interval(0, 1)
    return iv


def propagate_intervals(net: Network, box: Sequence[Interval]) -> list[tuple[list[Interval], list[Interval]]]:
    """Per-layer ``(pre-activation, activation)`` interval bounds for a finite box."""
    if len(box) != net.input_dim:
        raise ArityMismatch(net.input_dim, len(box), "box")
    if not all(iv.finite for iv in box):
        raise UnsupportedShape("interval propagation needs a bounded region")
    bounds = []
    current = list(box)
    for layer in net.layers:
        pre = _affine_bounds(layer, current)
        current = [_activate_bounds(layer.activation, iv) for iv in pre]
        bounds.append((pre, current))
    return bounds


def _decide(net: Network, expect: Expectation, out: list[Interval]):
    """Return True (forced), False (violation forced) or None (undecided)."""
    v = expect.value
    if expect.kind == "output" or net.binary_output:
        iv = out[0]
        if iv.lo == iv.hi == v:
            return True
        if not (iv.lo <= v <= iv.hi):
            return False
        return None
    if v >= len(out):
        return False
    k = out[v]
    # class v wins iff strictly above lower indices, at least equal to higher ones
    if all(k.lo > out[j].hi for j in range(v)) and all(k.lo >= out[j].hi for j in range(v + 1, len(out))):
        return True
    if any(out[j].lo >= k.hi for j in range(v)) or any(out[j].lo > k.hi for j in range(v + 1, len(out))):
        return False
    return None


def ibp_check(net: Network, q: RobustnessQuery) -> Verdict:
    if q.input_dim != net.input_dim:
        raise ArityMismatch(net.input_dim, q.input_dim, "query")
    if q.expect is None:
        raise ValueError("query has no expectation")
    bounds = propagate_intervals(net, q.region)
    out = bounds[-1][1]
    details = {"output_bounds": [[iv.lo, iv.hi] for iv in out]}
    decision = _decide(net, q.expect, out)
    if decision is True:
        return Verdict(Outcome.ROBUST, "ibp", details=details,
                       soundness_note="sound: output bounds force the expectation on the whole region")
    if decision is False:
        witness = tuple(iv.lo for iv in q.region)
        try:
            return counterexample(net, q.expect, witness, "ibp", details=details,
                                  soundness_note="output bounds exclude the expectation; witness at the lower corner")
        except WitnessError:  # pragma: no cover - bounds are sound, so unreachable
            pass
    return Verdict(Outcome.UNKNOWN, "ibp", details=details,
                   soundness_note="output bounds do not decide the expectation")
