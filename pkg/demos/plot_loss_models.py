"""
Loss models from expert ratings
===============================

Turn a handful of ratings on a 1..10 scale into a smoothed loss
distribution and watch the smoothing fade as the bandwidth shrinks.
"""

import numpy as np

from riskgame import build_empirical, loss_distribution, silverman_bandwidth, smooth, sup_distance

rng = np.random.default_rng(20161016)
ratings = rng.integers(1, 11, size=40)

# raw histogram of the answers
raw = build_empirical(ratings, 10)
print("histogram      ", np.round(raw.masses, 3))

# Silverman's rule picks a bandwidth from the spread of the answers
h = silverman_bandwidth(ratings)
print(f"bandwidth       {h:.3f}")
d = loss_distribution(ratings, 10)
print("smoothed       ", np.round(d.masses, 3))

# every category gets some mass once the answers are smoothed
print("all positive   ", bool(np.all(d.masses > 0)))

# shrinking h recovers the histogram
for bw in (2, 1, 0.5, 0.25, 0.1):
    print(f"  h={bw:<5} sup-distance {sup_distance(smooth(raw, bw), raw):.2e}")

# summary statistics
print(f"mean {d.mean():.2f}, variance {d.variance():.2f}, 95% quantile {d.quantile(0.95)}")
