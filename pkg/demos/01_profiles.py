# %% [markdown]
# # Network profiles
#
# A profile stores g, os and or at a handful of message sizes plus the
# latency L.  Anything between two samples is interpolated linearly,
# anything past the largest sample is extrapolated with the last slope.

# %%
from pathlib import Path

from collperf import load_profile

here = Path(__file__).parent
net = load_profile(here / "data" / "fast_ethernet_like.json")
print(net.name, "L =", net.latency, "us")
print("sampled sizes:", net.sizes)

# %%
# Exact at the samples, linear in between
for m in (1, 250, 600, 1000, 4000, 16000):
    print(f"m={m:>6}  g={net.g(m):9.3f}  os={net.os(m):9.3f}  or={net.or_(m):9.3f}")

# %%
# The column format holds the same data
same = load_profile(here / "data" / "fast_ethernet_like.dat")
print("json == columns:", same.samples == net.samples and same.latency == net.latency)
