import random
from fractions import Fraction
from pathlib import Path

import pytest

from nnverify import fixtures, smt
from nnverify.exact import corner_check
from nnverify.grid import Outcome, replay
from nnverify.net import Activation, Layer, Network, classify, layer_trace, single_layer
from nnverify.numeric import ParsedDecimal
from nnverify.query import Expectation, GridUnboundedError, Interval, RobustnessQuery, grid_points

F = Fraction
GOLDEN = Path(__file__).parent / "golden"


def box(*pairs):
    return tuple(Interval(lo, hi) for lo, hi in pairs)


class TestGridEncoding:
    def test_golden_bytes(self, trained_net, ladder_capped):
        text = smt.encode_grid(trained_net, ladder_capped).text
        assert text == (GOLDEN / "ladder_capped_grid.smt2").read_text()

    def test_disjunction_sizes(self, trained_net, ladder_capped, ladder_full):
        for q, n in ((ladder_capped, 6), (ladder_full, 17)):
            s = smt.encode_grid(trained_net, q)
            ors = [a for a in smt.assertions(s) if a[0] == "or"]
            assert [len(a) - 1 for a in ors] == [n, n]
            assert "(assert (<= (/ 7 10) x_0))" in s.text and "(assert (<= x_1 (/ 3 2)))" in s.text
            assert s.input_vars == ("x_0", "x_1")

    def test_points_satisfy_and_off_grid_do_not(self, trained_net, ladder_capped):
        s = smt.encode_grid(trained_net, ladder_capped)
        pts = list(grid_points(ladder_capped))
        assert len(pts) == 36
        for p in pts:
            assert smt.satisfies(s, {"x_0": p[0], "x_1": p[1]})
        rng = random.Random(5)
        off = 0
        while off < 20:
            p = (F(rng.randint(700, 1500), 1000), F(rng.randint(700, 1500), 1000))
            if p in pts:
                continue
            assert not smt.satisfies(s, {"x_0": p[0], "x_1": p[1]})
            off += 1

    def test_empty_grid(self, and_net):
        q = RobustnessQuery(box((F(1, 100), F(1, 100)), (0, 1)), grid_step=F(1, 10))
        s = smt.encode_grid(and_net, q)
        assert "(assert false)" in s.text
        assert not smt.satisfies(s, {"x_0": F(1, 100), "x_1": 0})

    def test_single_point(self, and_net):
        q = RobustnessQuery(box((F(1, 2), F(1, 2)), (0, 0)), grid_step=F(1, 2))
        s = smt.encode_grid(and_net, q)
        assert "(assert (= x_0 (/ 1 2)))" in s.text and "(assert (= x_1 0.0))" in s.text
        assert "(or" not in s.text

    def test_unbounded(self, and_net):
        with pytest.raises(GridUnboundedError):
            smt.encode_grid(and_net, RobustnessQuery(box((0, float("inf")), (0, 1)), grid_step=1))


def test_constants_are_exact():
    assert smt.const(F(-19, 20)) == "(- (/ 19 20))"
    assert smt.const(F(3)) == "3.0" and smt.const(F(0)) == "0.0"
    assert "e" not in smt.const(F(1, 10**30))


def random_net(rng, in_dim):
    layers, dim = [], in_dim
    depth = rng.randint(1, 3)
    for i in range(depth):
        out = 1 if i == depth - 1 else rng.randint(1, 3)
        kind = rng.choice(["relu", "identity", "threshold"])
        w = tuple(tuple(F(rng.randint(-20, 20), 10) for _ in range(dim)) for _ in range(out))
        b = tuple(F(rng.randint(-20, 20), 10) for _ in range(out))
        layers.append(Layer(w, b, Activation(kind, F(rng.randint(-5, 5), 10) if kind == "threshold" else 0)))
        dim = out
    return Network(tuple(layers))


def test_full_encoding_faithful():
    rng = random.Random(99)
    for _ in range(100):
        in_dim = rng.randint(1, 3)
        net = random_net(rng, in_dim)
        q = RobustnessQuery(box(*[(-1, 1)] * in_dim), expect=Expectation("class", 0))
        s = smt.encode_full(net, q)
        assert len(smt.assertions(s)) == 2 * in_dim + 2 * sum(l.out_dim for l in net.layers) + 1
        for _ in range(5):
            x = [F(rng.randint(-100, 100), 100) for _ in range(in_dim)]
            env = {f"x_{i}": v for i, v in enumerate(x)}
            for li, (z, a) in enumerate(layer_trace(net, x), start=1):
                env.update({f"z_{li}_{j}": v for j, v in enumerate(z)})
                env.update({f"a_{li}_{j}": v for j, v in enumerate(a)})
            results = smt.evaluate_assertions(s, env)
            assert all(ok for _, ok in results[:-1]), [t for t, ok in results if not ok]
            # the final assertion is the negated expectation
            assert results[-1][1] == (classify(net, x) != 0)


def test_impossible_class_is_tautology():
    net = Network((Layer(((1,), (2,)), (0, 0), Activation.identity()),))
    s = smt.encode_full(net, RobustnessQuery(box((0, 1)), expect=Expectation("class", 5)))
    assert s.text.splitlines()[-3] == "(assert true)"


def test_unsupported_activation():
    net = Network((Layer(((1,),), (0,), Activation.identity()),))
    object.__setattr__(net.layers[0].activation, "kind", "tanh")
    with pytest.raises(smt.UnsupportedActivation):
        smt.encode_full(net, RobustnessQuery(box((0, 1)), expect=Expectation("class", 0)))


class TestParseModel:
    def test_ratio(self):
        m = smt.parse_model("(model (define-fun x_0 () Real (/ 7 10)))", ["x_0"])
        assert m.assignments["x_0"] == ParsedDecimal(F(7, 10), False) and not m.inexact

    def test_truncated(self):
        m = smt.parse_model("((define-fun x_1 () Real 0.9500000000?))")
        assert m.assignments["x_1"] == ParsedDecimal(F(19, 20), True) and m.inexact

    def test_negative_forms(self):
        raw = "(\n  (define-fun x_0 () Real (- (/ 19.0 20.0)))\n  (define-fun x_1 () Real (- 2.0))\n  (define-fun f ((y Real)) Real y)\n)"
        m = smt.parse_model(raw, ["x_0", "x_1"])
        assert m.vector(["x_0", "x_1"]) == [ParsedDecimal(F(-19, 20)), ParsedDecimal(F(-2))]
        assert m.raw == raw

    def test_bare_definitions(self):
        m = smt.parse_model("(define-fun x_0 () Real 1.0)\n(define-fun x_1 () Real 0.0)")
        assert set(m.assignments) == {"x_0", "x_1"}

    def test_missing_variable(self):
        with pytest.raises(smt.SolverProtocolError) as info:
            smt.parse_model("(model (define-fun x_0 () Real 1.0))", ["x_0", "x_1"])
        assert "x_1" in str(info.value) and info.value.raw

    @pytest.mark.parametrize("raw", ["(model (define-fun x_0 () Real abc))", "(model (foo))",
                                     "(model (define-fun x_0 () Bool true))", "(model (define-fun x_0 () Real"])
    def test_garbage(self, raw):
        with pytest.raises((smt.SolverProtocolError, ValueError)):
            smt.parse_model(raw, ["x_0"])


def test_missing_binary():
    with pytest.raises(smt.SolverLaunchError):
        smt.run_solver("(check-sat)\n", "definitely-not-a-solver-binary-xyz")


@pytest.mark.solver
class TestWithSolver:
    def test_forced_assignment(self, solver):
        script = smt.HEADER + "(declare-const x_0 Real)\n(assert (<= 0.0 x_0))\n(assert (<= x_0 2.0))\n" \
                              "(assert (= x_0 1.0))\n" + smt.FOOTER
        r = smt.run_solver(script, solver)
        assert r.status == "sat" and r.model.assignments["x_0"].value == 1

    def test_contradiction(self, solver):
        r = smt.run_solver(smt.HEADER + "(assert false)\n" + smt.FOOTER, solver)
        assert r.status == "unsat" and r.model is None

    def test_protocol_error_is_reported(self, solver):
        r = smt.run_solver("(set-logic QF_LRA)\n(assert (= x_9 1.0))\n(check-sat)\n", solver)
        assert r.status in ("solver-error", "sat", "unknown") and (r.status != "sat" or r.model is not None)

    def test_grid_script_models_are_grid_points(self, solver, trained_net, ladder_capped):
        s = smt.encode_grid(trained_net, ladder_capped)
        r = smt.run_solver(s, solver)
        assert r.status == "sat"
        x = tuple(v.value for v in r.model.vector(s.input_vars))
        assert x in set(grid_points(ladder_capped))
        assert replay(trained_net, r.model.vector(s.input_vars), 1).robust

    def test_and_gate_counterexample(self, solver, and_net, ladder_full):
        s = smt.encode_full(and_net, ladder_full)
        r = smt.run_solver(s, solver)
        assert r.status == "sat"
        v = replay(and_net, r.model.vector(s.input_vars), 1)
        assert v.outcome is Outcome.COUNTEREXAMPLE
        assert F(1, 2) * v.witness[0] + F(1, 2) * v.witness[1] < F(9, 10)

    def test_quadrant_finite_unsat(self, solver, pt_net):
        q = fixtures.query("quadrant_finite.nnv")
        assert smt.run_solver(smt.encode_full(pt_net, q), solver).status == "unsat"

    def test_impossible_class_sat(self, solver):
        net = Network((Layer(((1,), (2,)), (0, 0), Activation.identity()),))
        q = RobustnessQuery(box((0, 1)), expect=Expectation("class", 5))
        s = smt.encode_full(net, q)
        r = smt.run_solver(s, solver)
        assert r.status == "sat" and q.contains([v.value for v in r.model.vector(s.input_vars)])

    def test_roundtrip_and_corner_agreement(self, solver):
        rng = random.Random(17)
        for _ in range(25):
            ws = [F(rng.randint(-20, 20), 10) for _ in range(2)]
            net = single_layer(ws, F(rng.randint(-20, 20), 10), theta=F(rng.randint(-5, 5), 10))
            lo = [F(rng.randint(-10, 10), 10) for _ in range(2)]
            q = RobustnessQuery(tuple(Interval(l, l + F(rng.randint(0, 10), 10)) for l in lo),
                                expect=Expectation("class", rng.randint(0, 1)))
            s = smt.encode_full(net, q)
            r = smt.run_solver(s, solver)
            assert r.status in ("sat", "unsat")
            corner = corner_check(net, q)
            assert (r.status == "unsat") == corner.robust
            if r.status == "sat":
                assert replay(net, r.model.vector(s.input_vars), q.expect).outcome is Outcome.COUNTEREXAMPLE

    def test_timeout_is_unknown(self, solver):
        r = smt.run_solver(smt.HEADER + "(assert false)\n" + smt.FOOTER, "sh -c 'sleep 5'", timeout=0.2)
        assert r.status == "unknown" and "timed out" in r.note
