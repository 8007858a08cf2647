"""
Attack paths and stages of an APT
=================================

Enumerate the attack paths of a small exploit graph, split a network into
rings around the asset, and solve the sequential stage games.
"""

from riskgame import AttackGraph, LossDistribution, build_stages, enumerate_attack_paths, solve_sequential_apt

# each node is an exploit; the attacker starts outside the network
links = [
    ("execute(0)", "ftp_rhosts(0,1)"), ("execute(0)", "ftp_rhosts(0,2)"), ("execute(0)", "rsh(0,1)"),
    ("execute(0)", "rsh(0,2)"), ("execute(0)", "sshd_bof(0,1)"),
    ("ftp_rhosts(0,1)", "rsh(0,1)"), ("ftp_rhosts(0,2)", "rsh(0,2)"),
    ("rsh(0,1)", "ftp_rhosts(1,2)"), ("rsh(0,1)", "rsh(1,2)"),
    ("ftp_rhosts(1,2)", "sshd_bof(0,1)"), ("ftp_rhosts(1,2)", "rsh(0,1)"),
    ("sshd_bof(0,1)", "rsh(1,2)"), ("sshd_bof(0,1)", "ftp_rhosts(1,2)"),
    ("rsh(0,2)", "local_bof(2)"), ("rsh(1,2)", "local_bof(2)"),
    ("local_bof(2)", "full_access(2)"),
]
nodes = ["attacker"] + sorted({v for e in links for v in e})
edges = [("attacker", "execute(0)", "execute(0)")] + [(a, b, b) for a, b in links]
graph = AttackGraph(tuple(nodes), tuple(edges), "attacker", "full_access(2)")

for k, path in enumerate(enumerate_attack_paths(graph), start=1):
    print(k, " -> ".join(path))

network = [
    ("machine 2", "router"),
    ("router", "file server (machine 1)"),
    ("router", "firewall"),
    ("firewall", "workstation (machine 0)"),
]
for k, ring in enumerate(build_stages(network, "machine 2").stages, start=1):
    print(f"stage {k}: {sorted(ring)}")

# full damage at the asset, coin-flip chances at both stages
for sol in solve_sequential_apt([(0.5, 0.5), (0.5, 0.5)], LossDistribution.point_mass(5, 5)):
    print(f"I({sol.stage_index}) = {sol.distribution.masses}, {sol.rounds} round(s)")
