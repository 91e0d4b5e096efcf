"""One test per acceptance criterion; each records a PASS/FAIL line for the summary."""

import itertools
import math
import random
from fractions import Fraction

import pytest

from conftest import ACCEPTANCE_RESULTS, solver_command
from nnverify import fixtures, smt
from nnverify.exact import check_covering, corner_check, propagate_intervals
from nnverify.grid import Outcome, grid_check, nearest_adversarial, replay
from nnverify.model_io import AND_DATA, TrainerConfig, train_perceptron
from nnverify.net import Activation, Layer, Network, StatefulNeuron, classify, layer_trace, network_forward, \
    next_output, single_layer
from nnverify.numeric import ParsedDecimal, parse_decimal
from nnverify.query import Expectation, Interval, RobustnessQuery, grid_points
from pathlib import Path

F = Fraction
GOLDEN = Path(__file__).parent / "golden"


def record(name, ok, detail=""):
    ACCEPTANCE_RESULTS.append((name, ok, detail))
    print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" ({detail})" if detail else ""))
    assert ok, detail


def test_01_ladder_fixture_robust():
    net = fixtures.model("trained_perceptron.json")
    layer = net.layers[0]
    exact = layer.bias == (F("-0.18375655"),) and layer.weights == ((F("0.19388244"), F("0.19471828")),)
    v = grid_check(net, fixtures.query("ladder_capped.nnv"))
    ok = exact and v.outcome is Outcome.ROBUST and v.points_checked == 36
    record("1 ladder fixture robust on 36 points", ok, f"{v.outcome.value}, points_checked={v.points_checked}")


def test_02_unbounded_corner_proof():
    net = fixtures.model("positive_threshold.json")
    v = corner_check(net, fixtures.query("quadrant.nnv"))
    inf = v.details["infimum"]
    record("2 corner proof over [0.7, inf)^2", v.robust and inf == F(2723, 10000), f"infimum={inf}")


def random_single(rng, dim):
    ws = [F(rng.randint(-20, 20), 10) for _ in range(dim)]
    return single_layer(ws, F(rng.randint(-20, 20), 10), theta=F(rng.randint(-5, 5), 10))


def test_03_covering():
    net = fixtures.model("trained_perceptron.json")
    cert = check_covering(net, fixtures.query("ladder_full.nnv"))
    fixture_ok = cert.covered and cert.worst_corner_on_grid and cert.worst_corner == (F(7, 10), F(7, 10))
    rng = random.Random(303)
    certified = disagreements = 0
    for _ in range(100):
        dim = rng.randint(1, 2)
        step = rng.choice([F(1, 10), F(1, 4), F(1, 5), F(1, 2)])
        region = []
        for _ in range(dim):
            lo = step * rng.randint(-6, 6) if rng.random() < 0.8 else F(rng.randint(-30, 30), 31)
            region.append(Interval(lo, lo + step * rng.randint(0, 8)))
        q = RobustnessQuery(tuple(region), grid_step=step, expect=Expectation("output", rng.randint(0, 1)))
        n = random_single(rng, dim)
        c = check_covering(n, q)
        if c.covered:
            certified += 1
            if grid_check(n, q, certificate=c).outcome is not corner_check(n, q).outcome:
                disagreements += 1
    record("3 covering certificate", fixture_ok and disagreements == 0 and certified > 0,
           f"fixture covered={cert.covered}, {certified}/100 certified, {disagreements} disagreements")


def test_04_nearest_adversarial():
    net = fixtures.model("and.json")
    q = fixtures.query("and_nearest.nnv")
    r = nearest_adversarial(net, q)
    # oracle: enumerate the 21 x 21 grid directly, no package enumeration involved
    pts = [(F(i, 20), F(j, 20)) for i in range(21) for j in range(21)]
    flipped = [p for p in pts if network_forward(net, p) != network_forward(net, (1, 1))]
    oracle = min(max(abs(1 - a), abs(1 - b)) for a, b in flipped)
    ok = len(pts) == 441 and r.distance == oracle == F(3, 20)
    record("4 nearest adversarial distance", ok, f"distance={r.distance}, oracle={oracle}")


def test_05_truncated_decimal():
    parsed = parse_decimal("0.9500000000?")
    v = replay(fixtures.model("trained_perceptron.json"), [parsed, parse_decimal("0.8")], 1)
    ok = parsed == ParsedDecimal(F(19, 20), True) and v.robust and "warning" in v.soundness_note
    record("5 truncated solver decimal replays", ok, v.soundness_note)


def test_06_stateful_outputs_binary():
    rng = random.Random(606)
    bad = 0
    steps = 0
    while steps < 10_000:
        n = StatefulNeuron([F(rng.randint(-100, 100), 10) for _ in range(rng.randint(1, 4))],
                           F(rng.randint(1, 100), 10), F(rng.randint(-100, 100), 10),
                           tuple(rng.randint(0, 1) for _ in range(rng.randint(0, 3))))
        for _ in range(rng.randint(1, 10)):
            out, n = next_output(n, [rng.randint(0, 1) for _ in n.weights])
            steps += 1
            if out not in (0, 1) or any(o not in (0, 1) for o in n.output_trace):
                bad += 1
    record("6 stateful neuron outputs stay binary", bad == 0, f"{steps} steps, {bad} violations")


def test_07_ibp_soundness():
    rng = random.Random(707)
    violations = 0
    for _ in range(200):
        in_dim = rng.randint(1, 4)
        layers, dim = [], in_dim
        for _ in range(rng.randint(1, 3)):
            out = rng.randint(1, 4)
            w = tuple(tuple(F(rng.randint(-100, 100), 100) for _ in range(dim)) for _ in range(out))
            b = tuple(F(rng.randint(-100, 100), 100) for _ in range(out))
            layers.append(Layer(w, b, Activation.relu()))
            dim = out
        net = Network(tuple(layers))
        region = []
        for _ in range(in_dim):
            lo = F(rng.randint(-100, 100), 100)
            region.append(Interval(lo, lo + F(rng.randint(0, 100), 100)))
        bounds = propagate_intervals(net, region)
        for _ in range(100):
            x = [iv.lo + (iv.hi - iv.lo) * F(rng.randint(0, 10**4), 10**4) for iv in region]
            for (pre, post), (z, a) in zip(bounds, layer_trace(net, x)):
                violations += sum(v not in iv for v, iv in zip(z, pre))
                violations += sum(v not in iv for v, iv in zip(a, post))
    record("7 interval bounds sound", violations == 0, f"{violations} violations")


def test_08_corner_completeness():
    rng = random.Random(808)
    disagreements = bogus = found = 0
    for _ in range(100):
        dim = rng.randint(1, 2)
        net = random_single(rng, dim)
        region = []
        for _ in range(dim):
            lo = F(rng.randint(-10, 10), 5)
            region.append(Interval(lo, lo + F(rng.randint(1, 10), 5)))
        target = rng.randint(0, 1)
        q = RobustnessQuery(tuple(region), expect=Expectation("output", target))
        v = corner_check(net, q)
        axes = [[iv.lo + (iv.hi - iv.lo) * F(k, 64) for k in range(65)] for iv in region]
        dense_bad = any(network_forward(net, p)[0] != target for p in itertools.product(*axes))
        if v.robust == dense_bad:
            disagreements += 1
        if not v.robust:
            found += 1
            if not q.contains(v.witness) or network_forward(net, v.witness)[0] == target:
                bogus += 1
    record("8 corner check complete against dense grid", disagreements == 0 and bogus == 0,
           f"{disagreements} disagreements, {found} witnesses, {bogus} bogus")


def test_09_grid_encoding():
    net = fixtures.model("trained_perceptron.json")
    q = fixtures.query("ladder_capped.nnv")
    first, second = smt.encode_grid(net, q).text, smt.encode_grid(net, q).text
    golden_ok = first == second == (GOLDEN / "ladder_capped_grid.smt2").read_text()
    pts = list(grid_points(q))
    on_ok = len(pts) == 36 and all(smt.satisfies(first, {"x_0": a, "x_1": b}) for a, b in pts)
    rng = random.Random(909)
    off = []
    while len(off) < 20:
        p = (F(rng.randint(7000, 15000), 10**4), F(rng.randint(7000, 15000), 10**4))
        if p not in pts:
            off.append(p)
    off_ok = not any(smt.satisfies(first, {"x_0": a, "x_1": b}) for a, b in off)
    record("9 grid encoding golden and faithful", golden_ok and on_ok and off_ok,
           f"golden={golden_ok}, on-grid={on_ok}, off-grid rejected={off_ok}")


def test_10_solver_roundtrip():
    cmd = solver_command()
    if cmd is None:
        ACCEPTANCE_RESULTS.append(("10 solver round trip", True, "skipped: no solver on PATH"))
        pytest.skip("no SMT solver on PATH")
    and_net = fixtures.model("and.json")
    s = smt.encode_full(and_net, fixtures.query("ladder_full.nnv"))
    r = smt.run_solver(s, cmd)
    confirmed = r.status == "sat" and replay(and_net, r.model.vector(s.input_vars), 1).outcome is Outcome.COUNTEREXAMPLE
    pt_net = fixtures.model("positive_threshold.json")
    q = fixtures.query("quadrant_finite.nnv")
    r2 = smt.run_solver(smt.encode_full(pt_net, q), cmd)
    agrees = r2.status == "unsat" and corner_check(pt_net, q).robust
    record("10 solver round trip", confirmed and agrees, f"and-gate {r.status}, perceptron {r2.status}")


def test_11_trainer_convergence():
    good = 0
    for seed in range(1, 101):
        net = train_perceptron(AND_DATA, TrainerConfig(eta="0.1", n_iter=100, seed=seed))
        good += all(classify(net, x) == y for x, y in AND_DATA)
    record("11 perceptron learns the and-gate", good >= 90, f"{good}/100 seeds")
