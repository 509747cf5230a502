# %% [markdown]
# # Checking the formulas with the event simulator
#
# The simulator runs the actual message schedule.  For most strategies it
# reproduces the closed form exactly; binomial trees agree only when P is
# a power of two.

# %%
from pathlib import Path

from collperf import load_profile, predict_broadcast, simulate

net = load_profile(Path(__file__).parent / "data" / "fast_ethernet_like.json")
m = 4000

for strategy, s in (("chain", None), ("chain-segmented", 500), ("flat-segmented", 1000), ("binomial", None)):
    for P in (4, 5, 8):
        sim = simulate(net, "broadcast", strategy, P, m, s).completion
        model = predict_broadcast(net, strategy, P, m, s).total
        print(f"{strategy:<16} P={P}  sim={sim:9.1f}  formula={model:9.1f}  diff={sim - model:+.1f}")

# %%
# All-to-All: the two simulator modes land on the two limits
for semantics in ("one-port-overlap", "serialized"):
    print(semantics, simulate(net, "alltoall", "direct-exchange", 8, m, semantics=semantics).completion)
