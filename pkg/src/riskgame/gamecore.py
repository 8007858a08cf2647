"""Matrix games whose payoffs are loss distributions.

The defender picks a row, the attacker a column, and every cell holds one
loss distribution per security goal. Multi-goal games are reduced to a
single goal by a weighted mixture, payoffs are truncated at a cutoff
category, and equilibria are approximated by fictitious play where each
player best-responds under the tail-lexicographic preference: the defender
seeks the least severe row, the attacker the most severe column.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, IncompleteGrid, InvalidArgument, InvalidCutoff, InvalidWeights, SupportMismatch
from .lossdist import LossDistribution, mixture, truncate
from .ordering import DEFAULT_TOL, FIRST, SECOND, compare_masses

DEFAULT_ITERATIONS = 1000


def _default_labels(prefix, k):
    return tuple(f"{prefix}{i + 1}" for i in range(k))


@dataclass(frozen=True, eq=False)
class Game:
    """An n x m x d grid of loss distributions.

    ``payoffs[i][j][g]`` is the loss under defense ``i``, attack ``j`` for
    goal ``g``. Use :func:`assemble_game` to build one from user input.
    """

    payoffs: tuple
    defense_labels: tuple
    attack_labels: tuple
    goal_labels: tuple
    goal_weights: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.payoffs)

    @property
    def m(self) -> int:
        return len(self.payoffs[0])

    @property
    def d(self) -> int:
        return len(self.payoffs[0][0])

    @property
    def support_max(self) -> int:
        return self.payoffs[0][0][0].support_max

    def payoff(self, i: int, j: int, goal: int = 0) -> LossDistribution:
        return self.payoffs[i][j][goal]

    def tensor(self, goal: int = 0) -> np.ndarray:
        """Masses as an ``(n, m, support_max)`` array for one goal."""
        return np.array([[self.payoffs[i][j][goal].masses for j in range(self.m)] for i in range(self.n)])

    def __eq__(self, other):
        if not isinstance(other, Game):
            return NotImplemented
        return (
            self.defense_labels == other.defense_labels
            and self.attack_labels == other.attack_labels
            and self.goal_labels == other.goal_labels
            and np.array_equal(self.goal_weights, other.goal_weights)
            and self.payoffs == other.payoffs
        )

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "d": self.d,
            "defense_labels": list(self.defense_labels),
            "attack_labels": list(self.attack_labels),
            "goal_labels": list(self.goal_labels),
            "goal_weights": [float(w) for w in self.goal_weights],
            "payoffs": [[[f.to_dict() for f in cell] for cell in row] for row in self.payoffs],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Game":
        payoffs = [[[LossDistribution.from_dict(f) for f in cell] for cell in row] for row in data["payoffs"]]
        game = assemble_game(
            payoffs,
            defense_labels=data.get("defense_labels"),
            attack_labels=data.get("attack_labels"),
            goal_labels=data.get("goal_labels"),
            goal_weights=data.get("goal_weights"),
        )
        for key in ("n", "m", "d"):
            if key in data and data[key] != getattr(game, key):
                raise IncompleteGrid(f"declared {key}={data[key]} but payoff grid has {getattr(game, key)}")
        return game


def assemble_game(
    payoffs,
    defense_labels: Optional[Sequence[str]] = None,
    attack_labels: Optional[Sequence[str]] = None,
    goal_labels: Optional[Sequence[str]] = None,
    goal_weights: Optional[Sequence[float]] = None,
) -> Game:
    """Validate a payoff grid and wrap it in a :class:`Game`.

    ``payoffs[i][j]`` may be a single LossDistribution (one goal) or a
    sequence of them (one per goal). All cells must share support and kind.
    """
    if len(payoffs) == 0 or any(len(row) == 0 for row in payoffs):
        raise IncompleteGrid("payoff grid needs at least one defense and one attack")
    n, m = len(payoffs), len(payoffs[0])
    grid = []
    d = None
    for i, row in enumerate(payoffs):
        if len(row) != m:
            raise IncompleteGrid(f"row {i} has {len(row)} entries, expected {m}")
        cells = []
        for j, cell in enumerate(row):
            cell = (cell,) if isinstance(cell, LossDistribution) else tuple(cell)
            if d is None:
                d = len(cell)
            if len(cell) != d or d == 0:
                raise IncompleteGrid(f"cell ({i}, {j}) has {len(cell)} goals, expected {d}")
            for g, f in enumerate(cell):
                if not isinstance(f, LossDistribution):
                    raise IncompleteGrid(f"cell ({i}, {j}, {g}) is not a loss distribution")
            cells.append(cell)
        grid.append(tuple(cells))

    ref = grid[0][0][0]
    for i in range(n):
        for j in range(m):
            for g, f in enumerate(grid[i][j]):
                if f.support_max != ref.support_max or f.kind != ref.kind:
                    raise SupportMismatch(
                        f"payoff ({i}, {j}, {g}) is on 1..{f.support_max} ({f.kind}), "
                        f"expected 1..{ref.support_max} ({ref.kind}); all payoffs must share categories"
                    )

    labels = []
    for given, prefix, k, what in (
        (defense_labels, "C", n, "defense"),
        (attack_labels, "T", m, "attack"),
        (goal_labels, "g", d, "goal"),
    ):
        if given is None:
            labels.append(_default_labels(prefix, k))
        elif len(given) != k:
            raise DimensionMismatch(f"expected {k} {what} labels, got {len(given)}")
        else:
            labels.append(tuple(str(s) for s in given))

    if goal_weights is None:
        w = np.full(d, 1.0 / d)
    else:
        w = np.asarray(goal_weights, dtype=float)
        if w.shape != (d,) or np.any(w < 0) or not w.sum() > 0:
            raise InvalidWeights(f"need {d} nonnegative goal weights, not all zero; got {list(goal_weights)}")
        w = w / w.sum()
    w.setflags(write=False)
    return Game(tuple(grid), *labels, w)


def scalarize(g: Game) -> Game:
    """Collapse the goals into one weighted-mixture payoff per cell."""
    if g.d == 1:
        return g
    payoffs = [[(mixture(g.payoffs[i][j], g.goal_weights),) for j in range(g.m)] for i in range(g.n)]
    return assemble_game(payoffs, g.defense_labels, g.attack_labels, ("+".join(g.goal_labels),))


def truncate_game(g: Game, cutoff: int) -> Game:
    if int(cutoff) != cutoff or not 1 <= cutoff <= g.support_max:
        raise InvalidCutoff(f"cutoff {cutoff} outside 1..{g.support_max}")
    if cutoff == g.support_max:
        return g
    payoffs = [[[truncate(f, cutoff) for f in cell] for cell in row] for row in g.payoffs]
    return assemble_game(payoffs, g.defense_labels, g.attack_labels, g.goal_labels, g.goal_weights)


def _check_mix(v, k, name):
    v = np.asarray(v, dtype=float)
    if v.shape != (k,):
        raise DimensionMismatch(f"{name} mix has shape {v.shape}, expected ({k},)")
    if np.any(v < -1e-12) or abs(v.sum() - 1) > 1e-9:
        raise DimensionMismatch(f"{name} mix is not a probability vector: {list(v)}")
    return np.clip(v, 0, None)


def mixture_payoff(g: Game, x, y, goal: int = 0) -> LossDistribution:
    """Loss distribution of goal ``goal`` when both players randomize."""
    x = _check_mix(x, g.n, "defense")
    y = _check_mix(y, g.m, "attack")
    if not 0 <= goal < g.d:
        raise DimensionMismatch(f"goal index {goal} outside 0..{g.d - 1}")
    masses = np.einsum("i,j,ijk->k", x, y, g.tensor(goal))
    masses = np.clip(masses, 0, None)
    cells = [g.payoffs[i][j][goal] for i in range(g.n) for j in range(g.m)]
    return LossDistribution(
        masses / masses.sum(),
        bandwidth=min(f.bandwidth for f in cells),
        kind=cells[0].kind,
    )


@dataclass(frozen=True, eq=False)
class Equilibrium:
    """Output of an equilibrium computation.

    ``optimal_attack`` is one worst case for the defender, not necessarily
    the only one. ``assurances[g]`` is the loss distribution of goal ``g``
    the defender can guarantee, on categories ``1..cutoff``.
    """

    optimal_defense: np.ndarray
    optimal_attack: np.ndarray
    assurances: tuple
    iterations: int
    cutoff: int
    defense_labels: tuple = ()
    attack_labels: tuple = ()
    goal_labels: tuple = ()

    def assurance(self, goal) -> LossDistribution:
        if isinstance(goal, str):
            goal = self.goal_labels.index(goal)
        return self.assurances[goal]

    def to_dict(self) -> dict:
        return {
            "optimal_defense": [float(v) for v in self.optimal_defense],
            "optimal_attack": [float(v) for v in self.optimal_attack],
            "assurances": [a.to_dict() for a in self.assurances],
            "iterations": self.iterations,
            "cutoff": self.cutoff,
            "defense_labels": list(self.defense_labels),
            "attack_labels": list(self.attack_labels),
            "goal_labels": list(self.goal_labels),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Equilibrium":
        return cls(
            np.asarray(data["optimal_defense"], dtype=float),
            np.asarray(data["optimal_attack"], dtype=float),
            tuple(LossDistribution.from_dict(a) for a in data["assurances"]),
            int(data["iterations"]),
            int(data["cutoff"]),
            tuple(data.get("defense_labels", ())),
            tuple(data.get("attack_labels", ())),
            tuple(data.get("goal_labels", ())),
        )


def best_index(rows: np.ndarray, minimize: bool, tol: float = DEFAULT_TOL) -> int:
    """Index of the preferred (``minimize``) or most severe row of mass vectors.

    Ties go to the lowest index.
    """
    best = 0
    want = FIRST if minimize else SECOND
    for k in range(1, rows.shape[0]):
        if compare_masses(rows[k], rows[best], tol)[0] == want:
            best = k
    return best


def _resolve_cutoff(g: Game, cutoff):
    if cutoff is None:
        return g.support_max
    if int(cutoff) != cutoff or not 1 <= cutoff <= g.support_max:
        raise InvalidCutoff(f"cutoff {cutoff} outside 1..{g.support_max}")
    return int(cutoff)


def _equilibrium(g: Game, x, y, T, cutoff) -> Equilibrium:
    truncated = truncate_game(g, cutoff)
    assurances = tuple(mixture_payoff(truncated, x, y, goal) for goal in range(g.d))
    x.setflags(write=False)
    y.setflags(write=False)
    return Equilibrium(x, y, assurances, T, cutoff, g.defense_labels, g.attack_labels, g.goal_labels)


def fictitious_play(
    g: Game,
    T: int = DEFAULT_ITERATIONS,
    cutoff: Optional[int] = None,
    tol: float = DEFAULT_TOL,
) -> Equilibrium:
    """Approximate a security strategy by alternating fictitious play.

    The game is scalarized and truncated at ``cutoff`` (default: the full
    support). The defender opens with its first strategy; afterwards each
    round the attacker best-responds to the defender's empirical play and
    the defender to the attacker's. Best responses compare average payoff
    distributions under the tail-lexicographic preference with ties broken
    by lowest index, so the result is deterministic. The returned mixes are
    the empirical frequencies over ``T`` rounds.
    """
    if int(T) != T or T < 1:
        raise InvalidArgument(f"iteration count must be a positive integer, got {T}")
    T = int(T)
    cutoff = _resolve_cutoff(g, cutoff)
    A = truncate_game(scalarize(g), cutoff).tensor(0)
    n, m, _ = A.shape

    x_counts = np.zeros(n)
    y_counts = np.zeros(m)
    row_acc = np.zeros((n, A.shape[2]))
    col_acc = np.zeros((m, A.shape[2]))
    i = 0
    for t in range(1, T + 1):
        x_counts[i] += 1
        col_acc += A[i]
        j = best_index(col_acc / t, minimize=False, tol=tol)
        y_counts[j] += 1
        row_acc += A[:, j]
        i = best_index(row_acc / t, minimize=True, tol=tol)

    return _equilibrium(g, x_counts / T, y_counts / T, T, cutoff)


def solve_degenerate(g: Game, cutoff: Optional[int] = None, tol: float = DEFAULT_TOL) -> Equilibrium:
    """Exact solution of a 1 x m or n x 1 game by a single preference scan.

    With one defense the attacker simply picks the most severe column; with
    one attack the defender picks the least severe row.
    """
    if g.n != 1 and g.m != 1:
        raise DimensionMismatch(f"degenerate solver needs n=1 or m=1, got {g.n}x{g.m}")
    cutoff = _resolve_cutoff(g, cutoff)
    A = truncate_game(scalarize(g), cutoff).tensor(0)
    x = np.zeros(g.n)
    y = np.zeros(g.m)
    if g.n == 1:
        x[0] = 1.0
        y[best_index(A[0], minimize=False, tol=tol)] = 1.0
    else:
        y[0] = 1.0
        x[best_index(A[:, 0], minimize=True, tol=tol)] = 1.0
    return _equilibrium(g, x, y, 1, cutoff)


def solve(g: Game, T: int = DEFAULT_ITERATIONS, cutoff: Optional[int] = None) -> Equilibrium:
    """Use the exact scan for degenerate games, fictitious play otherwise."""
    if g.n == 1 or g.m == 1:
        return solve_degenerate(g, cutoff)
    return fictitious_play(g, T, cutoff)
