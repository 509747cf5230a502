# %% [markdown]
# # Scatter: flat versus binomial
#
# The binomial cost only changes when ceil(log2 P) does, so it is flat
# between powers of two while the flat tree grows by g(m) per process.

# %%
from collperf import NetworkProfile, PLogPSample, predict_scatter

# gap barely depends on size, latency dominates
net = NetworkProfile.from_samples("cheap-bw", 100.0, [PLogPSample(1, 10.0, 5.0, 5.0), PLogPSample(1 << 30, 10.5, 5.2, 5.2)])
m = 1 << 20

print(" P      flat  binomial  winner")
for P in range(2, 35):
    f = predict_scatter(net, "flat", P, m).total
    b = predict_scatter(net, "binomial", P, m).total
    print(f"{P:2d} {f:9.1f} {b:9.1f}  {'flat' if f <= b else 'binomial'}")
