"""
Comparing loss distributions
============================

The preference looks at the worst category first and prefers the
distribution with less mass there, moving down only on ties.
"""

from riskgame import LossDistribution, prefer, prefer_multi, sort_by_preference, truncate

f = LossDistribution([0.1, 0.2, 0.3, 0.3, 0.1])
g = LossDistribution([0.3, 0.1, 0.1, 0.3, 0.2])

r = prefer(f, g)
print(f"verdict {r.verdict} (1 = first preferred), decided at category {r.decided_at_category}")

# a lower cutoff ignores the extreme tail
r = prefer(truncate(f, 4), truncate(g, 4))
print(f"cutoff 4: verdict {r.verdict}, decided at category {r.decided_at_category}")

# two goals, the second weighted twice as much
f2 = LossDistribution([0.5, 0.3, 0.1, 0.05, 0.05])
g2 = LossDistribution([0.2, 0.2, 0.2, 0.2, 0.2])
print("two goals:", prefer_multi([f, f2], [g, g2], [1, 2]).verdict)

# sort from most to least preferred
ds = [g, f, g2, f2]
print("order:", sort_by_preference(ds))
