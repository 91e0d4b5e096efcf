"""Feed-forward network representation and exact forward semantics.

A :class:`Network` is an ordered tuple of affine :class:`Layer` objects, each
followed by a componentwise :class:`Activation`.  All arithmetic is exact
(:class:`fractions.Fraction`); :func:`network_forward_float` is provided for
comparison only.

Two bias conventions are supported.  ``"signed-bias"`` folds a possibly
negative bias into the potential and thresholds at ``theta`` (usually 0).
``"positive-threshold"`` stores bias 0 and uses a positive ``theta`` as the
firing level.  Both fire on the weak inequality ``z >= theta``.

:class:`StatefulNeuron` implements the single-neuron step semantics with a
stored potential; see :func:`next_potential` and :func:`next_output`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .numeric import Scalar, parse_scalar

CONVENTIONS = ("signed-bias", "positive-threshold")


class DimensionMismatch(ValueError):
    def __init__(self, expected: int, got: int, what: str = "input"):
        self.expected = expected
        self.got = got
        super().__init__(f"{what} length mismatch: expected {expected}, got {got}")


class ShapeError(ValueError):
    def __init__(self, message: str, layer: int | None = None):
        self.layer = layer
        where = f"layer {layer}: " if layer is not None else ""
        super().__init__(where + message)


class NonBinaryInput(ValueError):
    pass


class InvalidNeuron(ValueError):
    pass


def _frac_vector(values: Iterable[Scalar]) -> tuple[Fraction, ...]:
    return tuple(parse_scalar(v) for v in values)


@dataclass(frozen=True)
class Activation:
    kind: str
    theta: Fraction = Fraction(0)

    KINDS = ("identity", "relu", "threshold")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown activation {self.kind!r}")
        object.__setattr__(self, "theta", parse_scalar(self.theta))
        if self.kind != "threshold" and self.theta != 0:
            raise ValueError(f"{self.kind} activation takes no theta")

    @classmethod
    def identity(cls) -> "Activation":
        return cls("identity")

    @classmethod
    def relu(cls) -> "Activation":
        return cls("relu")

    @classmethod
    def threshold(cls, theta: Scalar = 0) -> "Activation":
        return cls("threshold", parse_scalar(theta))

    def __call__(self, z: Fraction) -> Fraction:
        if self.kind == "relu":
            return z if z > 0 else Fraction(0)
        if self.kind == "threshold":
            return Fraction(1) if z >= self.theta else Fraction(0)
        return z

    def __str__(self) -> str:
        if self.kind == "threshold":
            return f"threshold({self.theta})"
        return self.kind


@dataclass(frozen=True)
class Layer:
    """Affine map ``W x + b`` followed by ``activation`` (componentwise)."""

    weights: tuple[tuple[Fraction, ...], ...]
    bias: tuple[Fraction, ...]
    activation: Activation = field(default_factory=Activation.identity)

    def __post_init__(self):
        rows = tuple(_frac_vector(row) for row in self.weights)
        bias = _frac_vector(self.bias)
        if not rows:
            raise ShapeError("layer has no neurons")
        width = len(rows[0])
        for i, row in enumerate(rows):
            if len(row) != width:
                raise ShapeError(f"ragged weights: row {i} has {len(row)} columns, row 0 has {width}")
        if len(bias) != len(rows):
            raise ShapeError(f"bias length {len(bias)} != {len(rows)} weight rows")
        object.__setattr__(self, "weights", rows)
        object.__setattr__(self, "bias", bias)

    @property
    def in_dim(self) -> int:
        return len(self.weights[0])

    @property
    def out_dim(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class Network:
    layers: tuple[Layer, ...]
    convention: str = "signed-bias"
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ShapeError("network needs at least one layer")
        if self.convention not in CONVENTIONS:
            raise ValueError(f"unknown convention {self.convention!r}")
        if layers[0].in_dim < 1:
            raise ShapeError("input dimension must be positive", 0)
        for i in range(1, len(layers)):
            if layers[i].in_dim != layers[i - 1].out_dim:
                raise ShapeError(
                    f"expects {layers[i].in_dim} inputs but layer {i - 1} produces {layers[i - 1].out_dim}", i
                )
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def binary_output(self) -> bool:
        return self.output_dim == 1 and self.layers[-1].activation.kind == "threshold"


def single_layer(weights: Sequence[Scalar], bias: Scalar, theta: Scalar = 0,
                 convention: str = "signed-bias") -> Network:
    """One threshold neuron: fires when ``w . x + bias >= theta``."""
    return Network((Layer((tuple(weights),), (bias,), Activation.threshold(theta)),), convention)


def neuron_potential(weights: Sequence[Fraction], inputs: Sequence[Fraction], bias: Fraction) -> Fraction:
    if len(weights) != len(inputs):
        raise DimensionMismatch(len(weights), len(inputs))
    return sum((Fraction(w) * Fraction(x) for w, x in zip(weights, inputs)), Fraction(bias))


def layer_preactivation(layer: Layer, x: Sequence[Fraction]) -> tuple[Fraction, ...]:
    if len(x) != layer.in_dim:
        raise DimensionMismatch(layer.in_dim, len(x))
    return tuple(neuron_potential(row, x, b) for row, b in zip(layer.weights, layer.bias))


def layer_forward(layer: Layer, x: Sequence[Fraction]) -> tuple[Fraction, ...]:
    return tuple(layer.activation(z) for z in layer_preactivation(layer, x))


def layer_trace(net: Network, x: Sequence[Scalar]) -> list[tuple[tuple[Fraction, ...], tuple[Fraction, ...]]]:
    """Per-layer ``(pre-activation, activation)`` pairs for input ``x``."""
    if len(x) != net.input_dim:
        raise DimensionMismatch(net.input_dim, len(x))
    a = _frac_vector(x)
    trace = []
    for layer in net.layers:
        z = layer_preactivation(layer, a)
        a = tuple(layer.activation(v) for v in z)
        trace.append((z, a))
    return trace


def network_forward(net: Network, x: Sequence[Scalar]) -> tuple[Fraction, ...]:
    return layer_trace(net, x)[-1][1]


def network_forward_float(net: Network, x: Sequence[float]) -> np.ndarray:
    """Float64 forward pass, for drift comparison against the exact path."""
    if len(x) != net.input_dim:
        raise DimensionMismatch(net.input_dim, len(x))
    a = np.asarray(x, dtype=float)
    for layer in net.layers:
        w = np.array([[float(v) for v in row] for row in layer.weights])
        z = w @ a + np.array([float(v) for v in layer.bias])
        act = layer.activation
        if act.kind == "relu":
            a = np.maximum(z, 0.0)
        elif act.kind == "threshold":
            a = np.where(z >= float(act.theta), 1.0, 0.0)
        else:
            a = z
    return a


def argmax_lowest(values: Sequence[Fraction]) -> int:
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    return best


def classify(net: Network, x: Sequence[Scalar]) -> int:
    y = network_forward(net, x)
    if net.binary_output:
        return int(y[0])
    return argmax_lowest(y)


# -- well-formedness ---------------------------------------------------------


@dataclass
class ValidationReport:
    output_binary: bool
    bias_positive: bool
    weights_in_range: bool
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _check_weights(rows, where: str, violations: list[str]) -> bool:
    ok = True
    for j, row in enumerate(rows):
        for k, w in enumerate(row):
            if not -1 <= w <= 1:
                ok = False
                violations.append(f"{where}, neuron {j}, weight {k}: {w} outside [-1, 1]")
    return ok


def _validate_network(net: Network) -> ValidationReport:
    violations: list[str] = []
    weights_ok = True
    bias_ok = True
    for i, layer in enumerate(net.layers):
        weights_ok &= _check_weights(layer.weights, f"layer {i}", violations)
        act = layer.activation
        for j, b in enumerate(layer.bias):
            if act.kind == "threshold":
                if net.convention == "positive-threshold" and b != 0:
                    bias_ok = False
                    violations.append(f"layer {i}, neuron {j}: positive-threshold convention requires bias 0, got {b}")
                # firing level: w.x >= theta - b
                level = act.theta - b
                if level <= 0:
                    bias_ok = False
                    violations.append(f"layer {i}, neuron {j}: firing level {level} is not positive")
            elif net.convention == "positive-threshold" and b <= 0:
                bias_ok = False
                violations.append(f"layer {i}, neuron {j}: bias {b} is not positive")
    return ValidationReport(net.binary_output, bias_ok, weights_ok, violations)


def _validate_neuron(n: "StatefulNeuron") -> ValidationReport:
    violations: list[str] = []
    weights_ok = _check_weights([n.weights], "neuron", violations)
    bias_ok = n.bias > 0
    if not bias_ok:
        violations.append(f"neuron: bias {n.bias} is not positive")
    binary = all(o in (0, 1) for o in n.output_trace)
    if not binary:
        violations.append("neuron: output trace is not binary")
    return ValidationReport(binary, bias_ok, weights_ok, violations)


def validate(obj: Union[Network, "StatefulNeuron"]) -> ValidationReport:
    """Check weight range, bias positivity and binary outputs.

    Works on a :class:`Network` or a :class:`StatefulNeuron`.  Findings are
    reported, never raised.
    """
    if isinstance(obj, StatefulNeuron):
        return _validate_neuron(obj)
    return _validate_network(obj)


# -- stateful single neuron --------------------------------------------------


@dataclass(frozen=True)
class StatefulNeuron:
    weights: tuple[Fraction, ...]
    bias: Fraction
    potential: Fraction = Fraction(0)
    output_trace: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "weights", _frac_vector(self.weights))
        object.__setattr__(self, "bias", parse_scalar(self.bias))
        object.__setattr__(self, "potential", parse_scalar(self.potential))
        object.__setattr__(self, "output_trace", tuple(self.output_trace))
        if self.bias <= 0:
            raise InvalidNeuron(f"bias must be positive, got {self.bias}")
        if any(o not in (0, 1) for o in self.output_trace):
            raise InvalidNeuron(f"output trace must be binary, got {self.output_trace}")


def _active_sum(weights: Sequence[Fraction], inputs: Sequence[int]) -> Fraction:
    if len(weights) != len(inputs):
        raise DimensionMismatch(len(weights), len(inputs))
    total = Fraction(0)
    for w, x in zip(weights, inputs):
        if x not in (0, 1):
            raise NonBinaryInput(f"input {x!r} is not 0 or 1")
        if x == 1:
            total += w
    return total


def next_potential(n: StatefulNeuron, inputs: Sequence[int]) -> Fraction:
    # no bias inside the sum; stored potential is carried only while below bias
    p = _active_sum(n.weights, inputs)
    if n.bias <= n.potential:
        return p
    return p + n.potential


def next_output(n: StatefulNeuron, inputs: Sequence[int]) -> tuple[int, StatefulNeuron]:
    """Fire if ``bias <= next_potential``; return the output and the stepped neuron."""
    p = next_potential(n, inputs)
    out = 1 if n.bias <= p else 0
    return out, replace(n, potential=p, output_trace=(out,) + n.output_trace)
