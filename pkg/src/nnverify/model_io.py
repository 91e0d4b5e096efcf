"""JSON model files and the single-layer perceptron trainer.

Model document::

    {
      "convention": "signed-bias",
      "layers": [
        {"weights": [["0.5", "0.5"]], "bias": ["-0.9"], "activation": "threshold", "theta": "0"}
      ],
      "meta": {"name": "and-gate"}
    }

Scalars may be JSON numbers, decimal strings or ``"a/b"`` strings and are
read exactly (JSON numbers through their decimal text, never via float).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import IO, Sequence, Union

from .net import Activation, Layer, Network, ShapeError, neuron_potential
from .numeric import MalformedNumber, Scalar, parse_scalar, render

PathOrStream = Union[str, os.PathLike, IO[str]]

_TOP_KEYS = {"convention", "layers", "meta"}
_LAYER_KEYS = {"weights", "bias", "activation", "theta"}


class ParseError(ValueError):
    def __init__(self, location: str, message: str):
        self.location = location
        super().__init__(f"{location}: {message}")


class EmptyData(ValueError):
    pass


class ArityMismatch(ValueError):
    pass


def _scalar(value, where: str) -> Fraction:
    if isinstance(value, Decimal):
        if not value.is_finite():
            raise ParseError(where, f"non-finite number {value}")
        return Fraction(value)
    try:
        return parse_scalar(value)
    except MalformedNumber as exc:
        raise ParseError(where, str(exc)) from None


def _vector(value, where: str) -> tuple[Fraction, ...]:
    if not isinstance(value, list):
        raise ParseError(where, "expected an array")
    return tuple(_scalar(v, f"{where}[{i}]") for i, v in enumerate(value))


def network_from_dict(doc) -> Network:
    if not isinstance(doc, dict):
        raise ParseError("$", "top level must be an object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ParseError("$", f"unknown keys {sorted(unknown)}")
    for key in ("convention", "layers"):
        if key not in doc:
            raise ParseError("$", f"missing key {key!r}")
    convention = doc["convention"]
    if convention not in ("signed-bias", "positive-threshold"):
        raise ParseError("$.convention", f"unknown convention {convention!r}")
    layers_doc = doc["layers"]
    if not isinstance(layers_doc, list) or not layers_doc:
        raise ParseError("$.layers", "expected a non-empty array")
    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise ParseError("$.meta", "expected an object")

    layers = []
    for i, ld in enumerate(layers_doc):
        where = f"$.layers[{i}]"
        if not isinstance(ld, dict):
            raise ParseError(where, "expected an object")
        unknown = set(ld) - _LAYER_KEYS
        if unknown:
            raise ParseError(where, f"unknown keys {sorted(unknown)}")
        for key in ("weights", "bias", "activation"):
            if key not in ld:
                raise ParseError(where, f"missing key {key!r}")
        if not isinstance(ld["weights"], list):
            raise ParseError(f"{where}.weights", "expected an array of rows")
        weights = tuple(_vector(row, f"{where}.weights[{j}]") for j, row in enumerate(ld["weights"]))
        bias = _vector(ld["bias"], f"{where}.bias")
        kind = ld["activation"]
        if kind not in Activation.KINDS:
            raise ParseError(f"{where}.activation", f"unknown activation {kind!r}")
        if "theta" in ld and kind != "threshold":
            raise ParseError(f"{where}.theta", f"theta given for {kind} activation")
        theta = _scalar(ld.get("theta", 0), f"{where}.theta")
        try:
            layers.append(Layer(weights, bias, Activation(kind, theta)))
        except ShapeError as exc:
            raise ShapeError(str(exc), i) from None
    return Network(tuple(layers), convention, _plain(meta))


def _plain(value):
    """Undo ``parse_float=Decimal`` inside free-form meta."""
    if isinstance(value, Decimal):
        return float(value)
    if isinstance(value, list):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


def network_to_dict(net: Network) -> dict:
    layers = []
    for layer in net.layers:
        ld = {
            "weights": [[render(w) for w in row] for row in layer.weights],
            "bias": [render(b) for b in layer.bias],
            "activation": layer.activation.kind,
        }
        if layer.activation.kind == "threshold":
            ld["theta"] = render(layer.activation.theta)
        layers.append(ld)
    doc = {"convention": net.convention, "layers": layers}
    if net.meta:
        doc["meta"] = net.meta
    return doc


def loads_model(text: str) -> Network:
    try:
        doc = json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}", exc.msg) from None
    return network_from_dict(doc)


def dumps_model(net: Network) -> str:
    return json.dumps(network_to_dict(net), indent=2) + "\n"


def load_model(source: PathOrStream) -> Network:
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return loads_model(fh.read())
    return loads_model(source.read())


def save_model(net: Network, target: PathOrStream) -> None:
    text = dumps_model(net)
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        target.write(text)


# -- trainer -----------------------------------------------------------------

LCG_MODULUS = 2**31 - 1
LCG_MULTIPLIER = 48271


def lcg_weights(seed: int, count: int, scale: int = 10_000, denominator: int = 10**6) -> list[Fraction]:
    """``count`` values uniform on ``[-scale, scale] / denominator`` from a MINSTD generator."""
    state = seed % LCG_MODULUS or 1  # 0 is a fixed point of the recurrence
    out = []
    for _ in range(count):
        state = (LCG_MULTIPLIER * state) % LCG_MODULUS
        out.append(Fraction(state % (2 * scale + 1) - scale, denominator))
    return out


@dataclass(frozen=True)
class TrainerConfig:
    eta: Fraction = Fraction(1, 10)
    n_iter: int = 10
    seed: int = 1
    init: str = "lcg"  # or "zeros"

    def __post_init__(self):
        object.__setattr__(self, "eta", parse_scalar(self.eta))
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.n_iter < 1:
            raise ValueError("n_iter must be at least 1")
        if self.init not in ("lcg", "zeros"):
            raise ValueError(f"unknown init {self.init!r}")


AND_DATA = [((1, 1), 1), ((1, 0), 0), ((0, 1), 0), ((0, 0), 0)]


def train_perceptron(data: Sequence[tuple[Sequence[Scalar], int]], cfg: TrainerConfig = TrainerConfig()) -> Network:
    """Classic perceptron rule with a threshold at 0, exact arithmetic throughout.

    For each epoch and each sample in order: ``w += eta*(y - y_hat)*x`` and
    ``b += eta*(y - y_hat)``.  Initial ``[b, w_1, ..., w_n]`` come from
    :func:`lcg_weights` (or zeros).  Misclassification counts per epoch are
    kept in ``meta["errors"]``.
    """
    if not data:
        raise EmptyData("training data is empty")
    n = len(data[0][0])
    for i, (x, _) in enumerate(data):
        if len(x) != n:
            raise ArityMismatch(f"sample {i} has {len(x)} inputs, expected {n}")
    samples = [(tuple(parse_scalar(v) for v in x), int(y)) for x, y in data]

    if cfg.init == "zeros":
        init = [Fraction(0)] * (n + 1)
    else:
        init = lcg_weights(cfg.seed, n + 1)
    bias, weights = init[0], list(init[1:])
    errors = []
    for _ in range(cfg.n_iter):
        wrong = 0
        for x, y in samples:
            y_hat = 1 if neuron_potential(weights, x, bias) >= 0 else 0
            update = cfg.eta * (y - y_hat)
            if update:
                weights = [w + update * xi for w, xi in zip(weights, x)]
                bias += update
                wrong += 1
        errors.append(wrong)
    meta = {"trainer": {"eta": render(cfg.eta), "epochs": cfg.n_iter, "seed": cfg.seed, "init": cfg.init},
            "errors": errors}
    return Network((Layer((tuple(weights),), (bias,), Activation.threshold(0)),), "signed-bias", meta)
