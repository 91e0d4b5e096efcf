# %% [markdown]
# Encode a query for an SMT solver, run it, and replay the model it returns.
# Needs `z3` (or another SMT-LIB2 solver reading stdin) on PATH.

# %%
import shutil

from nnverify import fixtures, smt
from nnverify.grid import replay
from nnverify.numeric import parse_decimal

and_gate = fixtures.model("and.json")
script = smt.encode_full(and_gate, fixtures.query("ladder_full.nnv"))
print(script.text)

# %%
if shutil.which("z3"):
    result = smt.run_solver(script)
    print(result.status)
    candidate = result.model.vector(script.input_vars)
    print(replay(and_gate, candidate, 1).to_dict())
else:
    print("z3 not found; skipping the solver call")

# %%
# Solvers sometimes print truncated decimals. They are read exactly and flagged.
value = parse_decimal("0.9500000000?")
print(value)
print(replay(fixtures.model("trained_perceptron.json"), [value, parse_decimal("0.8")], 1).soundness_note)
