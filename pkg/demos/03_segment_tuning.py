# %% [markdown]
# # Choosing a segment size
#
# Pipelined strategies trade per-segment latency against overlap.  The
# optimizer scans s = ceil(m / 2^i) and can then hill-climb from the best
# grid point.

# %%
from pathlib import Path

from collperf import dyadic_candidates, load_profile, optimize_segment, predict_broadcast

net = load_profile(Path(__file__).parent / "data" / "fast_ethernet_like.json")
P, m = 40, 1 << 20

for s in dyadic_candidates(m):
    print(f"s={s:>8}  chain-segmented={predict_broadcast(net, 'chain-segmented', P, m, s).total:14.1f}")

# %%
coarse = optimize_segment(net, "broadcast", "chain-segmented", P, m)
fine = optimize_segment(net, "broadcast", "chain-segmented", P, m, refine=True)
print("grid best:", coarse.segment_bytes, round(coarse.predicted.total, 1))
print("refined:  ", fine.segment_bytes, round(fine.predicted.total, 1), f"({fine.candidates_examined} evaluated)")
print("binomial: ", round(predict_broadcast(net, "binomial", P, m).total, 1))
