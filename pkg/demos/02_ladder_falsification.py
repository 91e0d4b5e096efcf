# %% [markdown]
# Ladder search: enumerate grid points in a box, look for an input that changes
# the output, and rank counterexamples by distance from an anchor.

# %%
from nnverify import fixtures
from nnverify.grid import grid_check, nearest_adversarial
from nnverify.numeric import render
from nnverify.query import grid_points, render_query

net = fixtures.model("trained_perceptron.json")
capped = fixtures.query("ladder_capped.nnv")
print(render_query(capped))
print("points per axis:", [render(v) for v in grid_points(capped).axes[0]])

v = grid_check(net, capped)
print(v.outcome.value, v.points_checked, "-", v.soundness_note)

# %%
# The same search on the and-gate weights fails immediately.
and_gate = fixtures.model("and.json")
bad = grid_check(and_gate, fixtures.query("ladder_full.nnv"))
print(bad.outcome.value, "at", [render(c) for c in bad.witness], "after", bad.points_checked, "points")

# %%
# Smallest perturbation of (1, 1) that flips the and-gate, in the max norm.
report = nearest_adversarial(and_gate, fixtures.query("and_nearest.nnv"))
print(report.to_dict())
