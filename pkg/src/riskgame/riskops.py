"""Risk treatment utilities built on top of the game machinery.

Threat ranking into a rank-scaled risk matrix, control selection by
minimal hitting sets, turning equilibrium frequencies into randomized
action schedules, and an exact one-sided rate-ratio test for checking
whether a new risk management regime reduced severe incidents.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, Optional, Sequence

import numpy as np
from scipy import stats

from .errors import (
    InvalidAlpha,
    InvalidArgument,
    InvalidFrequency,
    InvalidPeriod,
    UncoverableThreat,
)
from .gamecore import Equilibrium
from .ordering import ranks

ACCEPTABLE = "acceptable"
CRITICAL = "critical"

EXACT_HITSET_LIMIT = 20


# -- threat ranking ----------------------------------------------------------


@dataclass(frozen=True)
class ThreatRank:
    id: str
    impact_rank: int
    likelihood_rank: int
    zone: str


@dataclass(frozen=True)
class ThreatRanking:
    threats: tuple

    def __iter__(self):
        return iter(self.threats)

    def __len__(self):
        return len(self.threats)

    def by_id(self, threat_id) -> ThreatRank:
        for t in self.threats:
            if t.id == threat_id:
                return t
        raise KeyError(threat_id)

    def to_dict(self) -> dict:
        return {
            "threats": [
                {"id": t.id, "impact_rank": t.impact_rank, "likelihood_rank": t.likelihood_rank, "zone": t.zone}
                for t in self.threats
            ]
        }


def default_critical(impact_rank: int, likelihood_rank: int, m: int) -> bool:
    return impact_rank + likelihood_rank > m


def rank_threats(
    impacts,
    likelihoods,
    ids: Optional[Sequence[str]] = None,
    critical: Optional[Callable[[int, int, int], bool]] = None,
) -> ThreatRanking:
    """Place threats on a risk matrix whose axes are preference ranks 1..m.

    Each axis is sorted separately (rank 1 = least severe). ``critical`` is
    called as ``critical(impact_rank, likelihood_rank, m)``; by default a
    threat is critical when the two ranks sum to more than ``m``.
    """
    m = len(impacts)
    if m == 0 or len(likelihoods) != m:
        raise InvalidArgument(f"need one impact and one likelihood per threat, got {m} and {len(likelihoods)}")
    if ids is None:
        ids = [f"T{k + 1}" for k in range(m)]
    if len(ids) != m:
        raise InvalidArgument(f"expected {m} threat ids, got {len(ids)}")
    critical = critical or default_critical
    ri = ranks(impacts)
    rl = ranks(likelihoods)
    return ThreatRanking(
        tuple(
            ThreatRank(str(ids[k]), ri[k], rl[k], CRITICAL if critical(ri[k], rl[k], m) else ACCEPTABLE)
            for k in range(m)
        )
    )


# -- control selection -------------------------------------------------------


@dataclass(frozen=True)
class ControlRelation:
    """Which defenses are effective against which threats."""

    defenses: tuple
    threats: tuple
    effective: frozenset

    def __post_init__(self):
        object.__setattr__(self, "defenses", tuple(self.defenses))
        object.__setattr__(self, "threats", tuple(self.threats))
        object.__setattr__(self, "effective", frozenset(tuple(p) for p in self.effective))
        ds, ts = set(self.defenses), set(self.threats)
        for d, t in self.effective:
            if d not in ds:
                raise InvalidArgument(f"unknown defense {d!r}")
            if t not in ts:
                raise InvalidArgument(f"unknown threat {t!r}")

    @classmethod
    def from_pairs(cls, pairs) -> "ControlRelation":
        pairs = [tuple(p) for p in pairs]
        defenses = list(dict.fromkeys(d for d, _ in pairs))
        threats = list(dict.fromkeys(t for _, t in pairs))
        return cls(defenses, threats, frozenset(pairs))

    def candidates(self) -> Dict[str, frozenset]:
        """Per threat, the set of defenses effective against it."""
        out = {t: set() for t in self.threats}
        for d, t in self.effective:
            out[t].add(d)
        return {t: frozenset(s) for t, s in out.items()}


def is_hitting_set(chosen, family) -> bool:
    chosen = set(chosen)
    return all(chosen & set(c) for c in family)


def _exact_min_hitting_set(sets: list, order: dict) -> frozenset:
    best = [None]

    def branch(chosen: frozenset, remaining: list):
        if best[0] is not None and len(chosen) >= len(best[0]):
            return
        open_sets = [s for s in remaining if not (s & chosen)]
        if not open_sets:
            best[0] = chosen
            return
        # lower bound: disjoint open sets each need their own element
        disjoint, used = 0, set()
        for s in sorted(open_sets, key=len):
            if not (s & used):
                disjoint += 1
                used |= s
        if best[0] is not None and len(chosen) + disjoint >= len(best[0]):
            return
        pivot = min(open_sets, key=lambda s: (len(s), sorted(order[e] for e in s)))
        for e in sorted(pivot, key=order.__getitem__):
            branch(chosen | {e}, open_sets)

    branch(frozenset(), sets)
    return best[0]


def _greedy_hitting_set(sets: list, order: dict) -> frozenset:
    chosen = set()
    open_sets = list(sets)
    while open_sets:
        counts = {}
        for s in open_sets:
            for e in s:
                counts[e] = counts.get(e, 0) + 1
        e = min(counts, key=lambda k: (-counts[k], order[k]))
        chosen.add(e)
        open_sets = [s for s in open_sets if e not in s]
    return frozenset(chosen)


def _reduce(chosen, sets, order) -> frozenset:
    """Drop redundant elements until no single removal keeps the hitting property."""
    chosen = set(chosen)
    for e in sorted(chosen, key=order.__getitem__, reverse=True):
        if is_hitting_set(chosen - {e}, sets):
            chosen.discard(e)
    return frozenset(chosen)


def minimal_hitting_set(rel: ControlRelation, mode: str = "cardinality") -> list:
    """Smallest selection of defenses covering every threat.

    ``mode="cardinality"`` returns a minimum-size hitting set, found by
    branch and bound when there are at most ``EXACT_HITSET_LIMIT`` defenses
    and by greedy selection plus reduction above that. ``mode="subset_minimal"``
    returns a set from which no element can be removed. Output follows the
    declared defense order.
    """
    cands = rel.candidates()
    empty = [t for t, c in cands.items() if not c]
    if empty:
        raise UncoverableThreat(f"no effective defense against threat(s): {', '.join(map(str, empty))}")
    order = {d: k for k, d in enumerate(rel.defenses)}
    sets = [cands[t] for t in rel.threats]
    if mode == "cardinality":
        if len(rel.defenses) <= EXACT_HITSET_LIMIT:
            chosen = _exact_min_hitting_set(sets, order)
        else:
            chosen = _reduce(_greedy_hitting_set(sets, order), sets, order)
    elif mode == "subset_minimal":
        chosen = _reduce(_greedy_hitting_set(sets, order), sets, order)
    else:
        raise InvalidArgument(f"unknown hitting-set mode {mode!r}")
    return sorted(chosen, key=order.__getitem__)


# -- scheduling --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Schedule:
    action: str
    p: float
    time_unit: str
    horizon: float
    seed: Optional[int]
    event_times: np.ndarray = field(repr=False)

    def __eq__(self, other):
        if not isinstance(other, Schedule):
            return NotImplemented
        return (self.action, self.p, self.time_unit, self.horizon, self.seed) == (
            other.action, other.p, other.time_unit, other.horizon, other.seed
        ) and np.array_equal(self.event_times, other.event_times)

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "action": self.action,
            "p": self.p,
            "time_unit": self.time_unit,
            "horizon": self.horizon,
            "seed": self.seed,
            "event_times": [float(t) for t in self.event_times],
        }


def schedule_actions(
    p: float,
    horizon: float,
    seed: Optional[int] = None,
    action: str = "action",
    time_unit: str = "day",
) -> Schedule:
    """Random times at which to repeat an action played with frequency ``p``.

    Repetitions form a Poisson process with rate ``p`` per time unit: gaps are
    ``-ln(U) / p`` with ``U`` uniform on (0, 1), accumulated until the horizon
    is passed.
    """
    if not 0 <= p <= 1:
        raise InvalidFrequency(f"frequency must lie in [0, 1], got {p}")
    if not horizon > 0:
        raise InvalidArgument(f"horizon must be positive, got {horizon}")
    rng = np.random.default_rng(seed)
    times = []
    t = 0.0
    if p > 0:
        batch = max(16, int(p * horizon * 1.2) + 16)
        while True:
            u = rng.random(batch)
            u = u[u > 0]
            gaps = -np.log(u) / p
            ts = t + np.cumsum(gaps)
            inside = ts[ts <= horizon]
            times.append(inside)
            if inside.size < ts.size:
                break
            t = float(ts[-1])
    event_times = np.concatenate(times) if times else np.zeros(0)
    event_times.setflags(write=False)
    return Schedule(action, float(p), time_unit, float(horizon), seed, event_times)


# -- validation --------------------------------------------------------------


@dataclass(frozen=True)
class RateTestResult:
    past_count: int
    new_count: int
    past_period: float
    new_period: float
    p_value: float
    alpha: float
    rejected: bool

    def to_dict(self) -> dict:
        return asdict(self)


def rate_ratio_test(
    past_count: int,
    new_count: int,
    past_period: float = 1.0,
    new_period: float = 1.0,
    alpha: float = 0.05,
) -> RateTestResult:
    """Exact one-sided test of H0: past rate <= new rate.

    Conditional on the total count K, the past count is Binomial(K, pi0) at
    the null boundary with ``pi0 = past_period / (past_period + new_period)``.
    The p-value is the upper tail ``P(X >= past_count)``; rejecting H0 is
    evidence that incidents became rarer.
    """
    for name, v in (("past_count", past_count), ("new_count", new_count)):
        if int(v) != v or v < 0:
            raise InvalidArgument(f"{name} must be a nonnegative integer, got {v}")
    if not past_period > 0 or not new_period > 0 or not math.isfinite(past_period + new_period):
        raise InvalidPeriod(f"observation periods must be positive, got {past_period} and {new_period}")
    if not 0 < alpha < 1:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha}")
    past_count, new_count = int(past_count), int(new_count)
    k = past_count + new_count
    if k == 0:
        p_value = 1.0
    else:
        pi0 = past_period / (past_period + new_period)
        p_value = float(min(1.0, max(0.0, stats.binom.sf(past_count - 1, k, pi0))))
    return RateTestResult(
        past_count, new_count, float(past_period), float(new_period), p_value, float(alpha), p_value < alpha
    )


# -- equilibrium interpretation ---------------------------------------------

STATIC = "static"
DYNAMIC = "dynamic"


def assurance_summary(d, high_category: int = 4) -> dict:
    """Mean, variance, 95% quantile and ``P(loss >= high_category)``."""
    high = min(max(1, high_category), d.support_max)
    return {
        "mean": d.mean(),
        "variance": d.variance(),
        "quantile_95": d.quantile(0.95),
        "tail_category": high,
        "tail_probability": 1.0 - d.cdf(high - 1) if high > 1 else 1.0,
    }


def interpret_equilibrium(
    eq: Equilibrium,
    control_kinds: Dict[str, str],
    threshold: float = 1e-6,
    time_unit: str = "day",
    high_category: int = 4,
) -> dict:
    """Turn an equilibrium into an implementation plan.

    Static controls played with positive frequency must be implemented and
    are listed by decreasing frequency (more frequent means more important).
    Dynamic controls are repeated at random with their frequency as the rate
    per ``time_unit``.
    """
    labels = eq.defense_labels or tuple(f"C{i + 1}" for i in range(len(eq.optimal_defense)))
    missing = [l for l in labels if l not in control_kinds]
    if missing:
        raise InvalidArgument(f"no control kind given for: {', '.join(missing)}")
    implement, dynamic = [], []
    order = sorted(range(len(labels)), key=lambda i: (-eq.optimal_defense[i], i))
    for i in order:
        freq = float(eq.optimal_defense[i])
        kind = control_kinds[labels[i]]
        if kind == STATIC:
            if freq > threshold:
                implement.append({"control": labels[i], "frequency": freq})
        elif kind == DYNAMIC:
            if freq > threshold:
                dynamic.append({"control": labels[i], "frequency": freq, "schedule": {"p": freq, "time_unit": time_unit}})
        else:
            raise InvalidArgument(f"control kind must be 'static' or 'dynamic', got {kind!r}")
    goals = eq.goal_labels or tuple(f"g{k + 1}" for k in range(len(eq.assurances)))
    return {
        "implement": implement,
        "dynamic": dynamic,
        "worst_case_attack": {
            (eq.attack_labels[j] if eq.attack_labels else f"T{j + 1}"): float(v)
            for j, v in enumerate(eq.optimal_attack)
        },
        "assurances": {g: assurance_summary(a, high_category) for g, a in zip(goals, eq.assurances)},
    }
