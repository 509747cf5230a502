# %% [markdown]
# # All-to-All congestion factor
#
# Direct exchange sits between an overlap-friendly lower limit and a
# fully serialized upper limit.  A single factor gamma places measurements
# on that range; we plant one, add 1% noise and fit it back.

# %%
from pathlib import Path

import numpy as np

from collperf import Measurement, MeasurementSet, alltoall_bounds, fit_gamma, load_profile, predict_alltoall

net = load_profile(Path(__file__).parent / "data" / "fast_ethernet_like.json")
rng = np.random.default_rng(7)
planted = 0.2

records = []
for P in (8, 16, 24):
    for m in (1024, 1 << 16, 1 << 20):
        lo, hi = alltoall_bounds(net, P, m)
        t = lo.total + (hi.total - lo.total) * planted
        records.append(Measurement(P, m, t * (1 + rng.uniform(-0.01, 0.01))))

model = fit_gamma(net, MeasurementSet(tuple(records), "synthetic"))
print(f"planted {planted}, fitted {model.gamma:.4f}, rms residual {model.residual:.1f} us")

# %%
for P in (4, 32, 64):
    print(P, round(predict_alltoall(net, P, 1 << 16, model.gamma).total, 1))
