"""Exact verification of small feed-forward networks.

Grid (ladder) falsification with counterexample replay, complete corner
checks for single threshold neurons, interval bound propagation, and
SMT-LIB2 encodings for an external solver.
"""

from .exact import CoveringCertificate, UnsupportedShape, check_covering, corner_check, ibp_check, propagate_intervals
from .grid import AdversarialReport, Outcome, Verdict, grid_check, nearest_adversarial, replay
from .model_io import TrainerConfig, load_model, loads_model, save_model, train_perceptron
from .net import (
    Activation,
    DimensionMismatch,
    Layer,
    Network,
    StatefulNeuron,
    classify,
    layer_forward,
    network_forward,
    neuron_potential,
    next_output,
    next_potential,
    validate,
)
from .numeric import MalformedNumber, ParsedDecimal, Rational, parse_decimal, render, to_float
from .query import Expectation, Interval, RobustnessQuery, grid_points, parse_query, render_query

__version__ = "0.1.0"
