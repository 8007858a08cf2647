"""Advanced persistent threat models over attack graphs.

Covers three pieces: enumerating attack paths in an exploit graph,
partitioning an infrastructure into stages by hop distance to the target
asset, and the stage games. In the sequential model each stage is a 2x2
game (defend / not defend against penetrate / stay) whose payoff refers to
the stage's own equilibrium distribution, which is resolved by fixed-point
iteration. The static model is an ordinary game whose loss categories are
stage indices.
"""

from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgument, NoConvergence, NoPath, SupportMismatch
from .gamecore import DEFAULT_ITERATIONS, Equilibrium, Game, assemble_game, fictitious_play
from .lossdist import LossDistribution, sup_distance

DEFENSE_LABELS = ("defend", "not defend")
ATTACK_LABELS = ("penetrate", "stay")

DEFAULT_FIXPOINT_TOL = 1e-6
DEFAULT_FIXPOINT_ROUNDS = 100


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    label: str


@dataclass(frozen=True)
class AttackGraph:
    nodes: tuple
    edges: tuple
    source: str
    target: str

    def __post_init__(self):
        nodes = tuple(str(v) for v in self.nodes)
        edges = tuple(e if isinstance(e, Edge) else Edge(*(str(p) for p in e)) for e in self.edges)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)
        known = set(nodes)
        if len(known) != len(nodes):
            raise InvalidArgument("duplicate node identifiers")
        for v in (self.source, self.target):
            if v not in known:
                raise InvalidArgument(f"node {v!r} is not in the graph")
        for e in edges:
            if e.source not in known or e.target not in known:
                raise InvalidArgument(f"edge {e.source!r} -> {e.target!r} references an unknown node")

    def to_dict(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "edges": [{"from": e.source, "to": e.target, "label": e.label} for e in self.edges],
            "source": self.source,
            "target": self.target,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AttackGraph":
        try:
            edges = [(e["from"], e["to"], e.get("label", f"{e['from']}->{e['to']}")) for e in data["edges"]]
            return cls(tuple(data["nodes"]), tuple(edges), data["source"], data["target"])
        except (KeyError, TypeError) as exc:
            raise InvalidArgument(f"malformed attack graph: missing {exc}") from exc


def enumerate_attack_paths(g: AttackGraph) -> list:
    """All simple source-to-target paths as tuples of exploit labels.

    Paths are ordered lexicographically by their node sequence (ties between
    parallel edges by label sequence).
    """
    out_edges = {v: [] for v in g.nodes}
    for e in g.edges:
        out_edges[e.source].append(e)

    found = []
    stack = [(g.source, (g.source,), ())]
    while stack:
        node, nodes, labels = stack.pop()
        if node == g.target:
            found.append((nodes, labels))
            continue
        for e in out_edges[node]:
            if e.target not in nodes:
                stack.append((e.target, nodes + (e.target,), labels + (e.label,)))
    if not found:
        raise NoPath(f"target {g.target!r} is unreachable from {g.source!r}")
    found.sort()
    return [labels for _, labels in found]


@dataclass(frozen=True)
class StagePartition:
    """``stages[i]`` holds the nodes at hop distance ``i + 1`` from the target."""

    stages: tuple
    unreachable: frozenset = frozenset()

    def stage_of(self, node) -> Optional[int]:
        for i, s in enumerate(self.stages, start=1):
            if node in s:
                return i
        return None


def build_stages(edges, target, nodes: Sequence = ()) -> StagePartition:
    """Breadth-first distance layers around ``target`` in an undirected graph.

    ``edges`` is an iterable of node pairs (extra tuple fields are ignored);
    ``nodes`` may list isolated nodes so they are reported as unreachable.
    """
    adj = {v: set() for v in nodes}
    for e in edges:
        a, b = e[0], e[1]
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    adj.setdefault(target, set())

    dist = {target: 0}
    queue = deque([target])
    while queue:
        v = queue.popleft()
        for w in sorted(adj[v], key=str):
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)

    depth = max(dist.values())
    stages = tuple(frozenset(v for v, k in dist.items() if k == i) for i in range(1, depth + 1))
    return StagePartition(stages, frozenset(v for v in adj if v not in dist))


def reflect(d: LossDistribution) -> LossDistribution:
    """Mirror the categories ``k -> a + 1 - k``; stands in for a negated payoff."""
    return LossDistribution(d.masses[::-1], bandwidth=d.bandwidth, kind=d.kind, observation_count=d.observation_count)


def _mix2(w, f: LossDistribution, g: LossDistribution) -> LossDistribution:
    m = w * f.masses + (1 - w) * g.masses
    return LossDistribution(m / m.sum(), bandwidth=min(f.bandwidth, g.bandwidth), kind=f.kind)


@dataclass(frozen=True)
class AptStageSpec:
    """One stage of the sequential model.

    ``p`` is the success chance of penetrating to the next stage inwards,
    ``q`` the success chance of staying undetected; ``I_prev`` is the payoff
    distribution one stage closer to the asset and ``I_init`` the current
    guess for this stage's own payoff distribution.
    """

    stage_index: int
    p: float
    q: float
    I_prev: LossDistribution
    I_init: LossDistribution

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise InvalidArgument(f"{name} must lie in [0, 1], got {v}")
        if self.I_prev.support_max != self.I_init.support_max or self.I_prev.kind != self.I_init.kind:
            raise SupportMismatch("stage distributions must share their support")


def stage_game_matrix(spec: AptStageSpec) -> Game:
    """The 2x2 stage game (rows: defend, not defend; columns: penetrate, stay)."""
    prev, cur = spec.I_prev, spec.I_init
    payoffs = [
        [_mix2(spec.p, prev, cur), _mix2(spec.q, cur, reflect(cur))],
        [prev, cur],
    ]
    return assemble_game(payoffs, DEFENSE_LABELS, ATTACK_LABELS, (f"stage{spec.stage_index}",))


@dataclass(frozen=True, eq=False)
class StageSolution:
    stage_index: int
    distribution: LossDistribution
    equilibrium: Equilibrium
    rounds: int
    residuals: tuple = field(repr=False)

    @property
    def residual(self) -> float:
        return self.residuals[-1] if self.residuals else 0.0

    @property
    def monotone_tail(self) -> bool:
        """Whether the last three residuals are non-increasing (diagnostic only)."""
        tail = self.residuals[-3:]
        return all(b <= a for a, b in zip(tail, tail[1:]))


def _stage_params(s):
    if isinstance(s, dict):
        return float(s["p"]), float(s["q"])
    p, q = s
    return float(p), float(q)


def solve_sequential_apt(
    stages,
    I0: LossDistribution,
    fp_iters: int = DEFAULT_ITERATIONS,
    fixpoint_tol: float = DEFAULT_FIXPOINT_TOL,
    max_fixpoint_rounds: int = DEFAULT_FIXPOINT_ROUNDS,
) -> list:
    """Solve the stage games from the asset outwards.

    ``stages`` lists ``(p, q)`` pairs (or ``{"p": .., "q": ..}``) starting at
    the stage adjacent to the asset; ``I0`` is the payoff at the asset. For
    each stage the guess for its payoff starts at the previous stage's
    result and is replaced by the stage game's assurance distribution until
    two successive guesses are within ``fixpoint_tol`` in sup-distance.

    Raises:
        NoConvergence: a stage did not settle within ``max_fixpoint_rounds``;
            the exception carries the last iterate and residual.
    """
    if len(stages) == 0:
        raise InvalidArgument("need at least one stage")
    results = []
    prev = I0
    for n, s in enumerate(stages, start=1):
        p, q = _stage_params(s)
        cur = prev
        residuals = []
        for rounds in range(1, max_fixpoint_rounds + 1):
            spec = AptStageSpec(n, p, q, prev, cur)
            eq = fictitious_play(stage_game_matrix(spec), fp_iters)
            nxt = eq.assurances[0]
            residuals.append(sup_distance(nxt, cur))
            cur = nxt
            if residuals[-1] < fixpoint_tol:
                break
        else:
            raise NoConvergence(
                f"stage {n} did not converge in {max_fixpoint_rounds} rounds (residual {residuals[-1]:.3g})",
                last_iterate=cur,
                residual=residuals[-1],
            )
        results.append(StageSolution(n, cur, eq, rounds, tuple(residuals)))
        prev = cur
    return results


def static_apt_game(
    stage_payoffs,
    stage_count: Optional[int] = None,
    defense_labels=None,
    attack_labels=None,
) -> Game:
    """Game whose loss categories are stage indices ``1..N``.

    Stage 1 is the outermost perimeter and stage N borders the asset, so
    the defender (minimizing) pushes probability mass outwards.
    """
    game = assemble_game(stage_payoffs, defense_labels, attack_labels, ("stage",))
    if stage_count is not None and game.support_max != stage_count:
        raise SupportMismatch(f"payoffs are on 1..{game.support_max}, but there are {stage_count} stages")
    return game


def classical_game_value(matrix, T: int = DEFAULT_ITERATIONS) -> float:
    """Value of a 0/1 success matrix (rows: defender, columns: attacker).

    Entries are embedded as point masses on categories 1 (failure) and 2
    (success); the value is the success probability at the computed
    equilibrium. Useful for deriving a stage's ``p`` or ``q``.
    """
    a = np.asarray(matrix)
    if a.ndim != 2 or not np.all(np.isin(a, (0, 1))):
        raise InvalidArgument("expected a 2-d matrix of 0/1 entries")
    payoffs = [[LossDistribution.point_mass(int(v) + 1, 2) for v in row] for row in a]
    eq = fictitious_play(assemble_game(payoffs), T)
    return float(eq.assurances[0].masses[1])
