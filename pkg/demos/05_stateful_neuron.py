# %% [markdown]
# A neuron that keeps its potential between steps and fires on binary inputs.

# %%
from fractions import Fraction

from nnverify.net import StatefulNeuron, next_output

n = StatefulNeuron(weights=[Fraction(1, 2), Fraction(1, 4)], bias=Fraction(1))
for inputs in [(1, 0), (1, 0), (0, 1), (1, 1), (0, 0)]:
    out, n = next_output(n, inputs)
    print(inputs, "->", out, " potential", n.potential, " trace", n.output_trace)

# %%
# Training the single-layer perceptron on the and-gate table.
from nnverify.model_io import AND_DATA, TrainerConfig, train_perceptron
from nnverify.net import classify

net = train_perceptron(AND_DATA, TrainerConfig(eta="0.1", n_iter=20, seed=7))
print("errors per epoch:", net.meta["errors"])
print([classify(net, x) for x, _ in AND_DATA])
