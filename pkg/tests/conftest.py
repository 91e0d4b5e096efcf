import shlex
import shutil
from fractions import Fraction

import pytest

from nnverify import fixtures
from nnverify.smt import DEFAULT_SOLVER

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def solver_command():
    for cmd in (DEFAULT_SOLVER, "cvc5 --lang smt2"):
        if shutil.which(shlex.split(cmd)[0]):
            return cmd
    return None


@pytest.fixture(scope="session")
def solver():
    cmd = solver_command()
    if cmd is None:
        pytest.skip("no SMT solver on PATH")
    return cmd


@pytest.fixture
def and_net():
    return fixtures.model("and.json")


@pytest.fixture
def trained_net():
    return fixtures.model("trained_perceptron.json")


@pytest.fixture
def pt_net():
    return fixtures.model("positive_threshold.json")


@pytest.fixture
def ladder_capped():
    return fixtures.query("ladder_capped.nnv")


@pytest.fixture
def ladder_full():
    return fixtures.query("ladder_full.nnv")


def F(s):
    return Fraction(s)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] {name}" + (f" ({detail})" if detail else ""))
