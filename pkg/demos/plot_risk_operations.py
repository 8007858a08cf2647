"""
Risk matrix, controls, schedules and validation
===============================================

From threat ratings to a risk matrix, a minimal set of controls, random
repetition times for a dynamic control, and a check that incidents fell.
"""

import numpy as np

from riskgame import (
    ControlRelation,
    loss_distribution,
    minimal_hitting_set,
    rank_threats,
    rate_ratio_test,
    schedule_actions,
)

rng = np.random.default_rng(7)
threats = ["phishing", "malware", "insider", "ddos"]
impact = [loss_distribution(rng.integers(lo, lo + 3, 8), 6, bandwidth=0.7) for lo in (1, 4, 3, 2)]
likelihood = [loss_distribution(rng.integers(lo, lo + 3, 8), 6, bandwidth=0.7) for lo in (4, 3, 1, 2)]
for t in rank_threats(impact, likelihood, threats):
    print(f"{t.id:9s} impact {t.impact_rank} likelihood {t.likelihood_rank} {t.zone}")

# which controls work against which threats
rel = ControlRelation.from_pairs([
    ("training", "phishing"), ("mail filter", "phishing"), ("mail filter", "malware"),
    ("antivirus", "malware"), ("access review", "insider"), ("cdn", "ddos"), ("training", "insider"),
])
print("controls:", minimal_hitting_set(rel))

# training played with frequency 0.6 per week
s = schedule_actions(0.6, horizon=20, seed=1, action="training", time_unit="week")
print("training at weeks", np.round(s.event_times, 1))

# 20 severe incidents before, 2 after
r = rate_ratio_test(20, 2)
print(f"p-value {r.p_value:.3e}, rejected: {r.rejected}")
