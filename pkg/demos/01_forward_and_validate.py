# %% [markdown]
# Exact forward passes and structural checks on small threshold networks.

# %%
from fractions import Fraction

import numpy as np

from nnverify import fixtures
from nnverify.net import classify, network_forward, network_forward_float, validate

and_gate = fixtures.model("and.json")
for x in [(1, 1), (1, 0), (0, 1), (0, 0)]:
    print(x, "->", network_forward(and_gate, x))

# %%
# The trained perceptron sits very close to its decision boundary at (0.7, 0.7).
# Exact arithmetic gives the margin without rounding; the float path is only for display.
# The boundary on the diagonal is near 0.4727.
net = fixtures.model("trained_perceptron.json")
w, b = net.layers[0].weights[0], net.layers[0].bias[0]
margin = b + Fraction(7, 10) * (w[0] + w[1])
print("margin at (0.7, 0.7):", margin, "=", float(margin))

xs = np.linspace(0.4, 0.6, 5)
for x in xs:
    print(f"x = ({x:.2f}, {x:.2f})  float out = {network_forward_float(net, [x, x])}  exact class = "
          f"{classify(net, [Fraction(x).limit_denominator(1000)] * 2)}")

# %%
report = validate(fixtures.model("positive_threshold.json"))
print(report)
print("ok:", report.ok)
