"""
Security strategy and the cutoff
================================

A 2x2 game between two defenses and two attacks. With the full scale the
first defense wins outright; cutting the scale at category 6 makes the
middle categories decide and the optimum becomes a mix.
"""

import numpy as np

from riskgame import LossDistribution, assemble_game, fictitious_play, interpret_equilibrium


def cell(top, six):
    m = np.zeros(10)
    m[9], m[5] = top, six
    m[:5] = (1 - m.sum()) / 5
    return LossDistribution(m)


game = assemble_game(
    [[cell(0.02, 0.5), cell(0.01, 0.1)], [cell(0.2, 0.1), cell(0.3, 0.5)]],
    defense_labels=["firewall", "passwords"],
    attack_labels=["malware", "phishing"],
)

for cutoff in (10, 6):
    eq = fictitious_play(game, T=1000, cutoff=cutoff)
    print(f"cutoff {cutoff:2d}: defense {eq.optimal_defense}, attack {eq.optimal_attack}")

# the mixed optimum as an action plan; passwords are changed at random times
plan = interpret_equilibrium(eq, {"firewall": "static", "passwords": "dynamic"})
print("implement:", plan["implement"])
print("repeat:   ", plan["dynamic"])
print("assurance:", {k: round(v, 4) for k, v in plan["assurances"]["g1"].items()})
