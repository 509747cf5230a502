# %% [markdown]
# # Comparing broadcast strategies
#
# Every strategy has a closed-form cost.  Each prediction keeps its
# additive terms so you can see where the time goes.

# %%
from pathlib import Path

from collperf import BROADCAST_STRATEGIES, load_profile, predict_broadcast, rank_strategies

net = load_profile(Path(__file__).parent / "data" / "fast_ethernet_like.json")
P, m = 16, 64 * 1024

for strategy in BROADCAST_STRATEGIES:
    s = m // 8 if strategy.endswith("segmented") else None
    pred = predict_broadcast(net, strategy, P, m, s)
    terms = ", ".join(f"{label}={value:.1f}" for label, value in pred.terms)
    flag = " (upper bound)" if pred.is_upper_bound else ""
    print(f"{strategy:<20} {pred.total:12.1f} us{flag}   {terms}")

# %%
# Ranking with automatic segment sizes
for strategy, pred in rank_strategies(net, "broadcast", P, m):
    print(f"{strategy:<20} {pred.total:12.1f}")
