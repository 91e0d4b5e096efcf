# %% [markdown]
# Whole-region answers. A single threshold neuron is decided by one corner of the box;
# deeper networks get interval bounds, which are sound but can be inconclusive.

# %%
from fractions import Fraction

from nnverify import fixtures
from nnverify.exact import check_covering, corner_check, ibp_check, propagate_intervals
from nnverify.net import Activation, Layer, Network
from nnverify.query import Expectation, Interval, RobustnessQuery

pt_net = fixtures.model("positive_threshold.json")
v = corner_check(pt_net, fixtures.query("quadrant.nnv"))
print(v.outcome.value, "infimum", v.details["infimum"], "theta", v.details["theta"])

# %%
# When does a clean grid run say something about every real point?
net = fixtures.model("trained_perceptron.json")
print(check_covering(net, fixtures.query("ladder_full.nnv")).to_dict())
coarse = RobustnessQuery((Interval(Fraction(7, 10), Fraction(3, 2)),) * 2, grid_step=Fraction(3, 10),
                         expect=Expectation("class", 1))
print(check_covering(net, coarse).to_dict())

# %%
# |x| written with two ReLUs: the true range on [-1, 1] is [0, 1], the bounds say [0, 2].
absnet = Network((Layer(((1,), (-1,)), (0, 0), Activation.relu()),
                  Layer(((1, 1),), (0,), Activation.identity())))
print(propagate_intervals(absnet, [Interval(-1, 1)])[-1][1])

q = RobustnessQuery((Interval(0, 1),) * 2, expect=Expectation("class", 1))
print(ibp_check(fixtures.model("and.json"), q).outcome.value)
