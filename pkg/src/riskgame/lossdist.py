"""Categorical loss distributions built from expert ratings.

A loss distribution is a probability mass function over the integer loss
categories ``1..support_max``. Raw survey answers are turned into an
empirical histogram, optionally smoothed with a discretized Gaussian kernel
(which fills empty categories and gives every distribution the full common
support), and optionally truncated at a cutoff category.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import ndtr

from .errors import (
    CategoryOutOfRange,
    DegenerateRange,
    DegenerateSample,
    EmptyObservations,
    InvalidArgument,
    InvalidBandwidth,
    InvalidCutoff,
    InvalidWeights,
    SupportMismatch,
    ZeroMassBelowCutoff,
)

DISCRETE = "discrete-categorical"
DISCRETIZED = "discretized-continuous"
KINDS = (DISCRETE, DISCRETIZED)

# Bandwidth used when Silverman's rule has no spread to work with.
FALLBACK_BANDWIDTH = 0.5

# Tail level used to align continuous loss ranges (mu + 3 sigma covers ~99.73%).
RESCALE_EPS = 0.027

_NORMALIZATION_TOL = 1e-9
_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class Observations:
    """Expert ratings for one (defense, attack, goal) cell."""

    values: tuple
    goal_id: Optional[str] = None
    scenario: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


ObsLike = Union[Observations, Sequence[int], np.ndarray]


def _values(obs: ObsLike) -> np.ndarray:
    if isinstance(obs, Observations):
        return np.asarray(obs.values, dtype=float)
    return np.asarray(list(obs), dtype=float)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LossDistribution:
    """Probability masses over loss categories ``1..support_max``.

    ``masses[k - 1]`` is the probability of category ``k``. Instances are
    immutable; the mass array is read-only.
    """

    masses: np.ndarray
    bandwidth: float = 0.0
    kind: str = DISCRETE
    observation_count: int = 0

    def __post_init__(self):
        m = _frozen(self.masses)
        if m.ndim != 1 or m.size < 1:
            raise InvalidArgument("masses must be a non-empty 1-d sequence")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise InvalidArgument("masses must be finite and nonnegative")
        if abs(m.sum() - 1.0) > _NORMALIZATION_TOL:
            raise InvalidArgument(f"masses sum to {m.sum()!r}, expected 1")
        if self.bandwidth < 0:
            raise InvalidBandwidth(f"bandwidth must be >= 0, got {self.bandwidth}")
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown kind {self.kind!r}")
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "bandwidth", float(self.bandwidth))
        object.__setattr__(self, "observation_count", int(self.observation_count))

    @property
    def support_max(self) -> int:
        return int(self.masses.size)

    @property
    def categories(self) -> np.ndarray:
        return np.arange(1, self.support_max + 1)

    def __eq__(self, other):
        if not isinstance(other, LossDistribution):
            return NotImplemented
        return (
            np.array_equal(self.masses, other.masses)
            and self.bandwidth == other.bandwidth
            and self.kind == other.kind
            and self.observation_count == other.observation_count
        )

    __hash__ = None

    def __repr__(self):
        masses = np.array2string(self.masses, precision=4, separator=", ")
        return (
            f"LossDistribution(masses={masses}, bandwidth={self.bandwidth}, "
            f"kind={self.kind!r}, observation_count={self.observation_count})"
        )

    @classmethod
    def point_mass(cls, category: int, support_max: int, kind: str = DISCRETE):
        if not 1 <= category <= support_max:
            raise CategoryOutOfRange(f"category {category} outside 1..{support_max}")
        m = np.zeros(support_max)
        m[category - 1] = 1.0
        return cls(m, kind=kind)

    # statistics -----------------------------------------------------------

    def density(self, x: int) -> float:
        self._check_category(x)
        return float(self.masses[x - 1])

    def cdf(self, x: int) -> float:
        self._check_category(x)
        # running sum keeps cdf monotone; pairwise np.sum need not be
        return float(min(1.0, np.cumsum(self.masses)[int(x) - 1]))

    def moment(self, k: int = 1) -> float:
        if int(k) != k or k < 1:
            raise InvalidArgument(f"moment order must be an integer >= 1, got {k}")
        return float(np.dot(self.masses, self.categories.astype(float) ** int(k)))

    def mean(self) -> float:
        return self.moment(1)

    def variance(self) -> float:
        mu = self.mean()
        return float(np.dot(self.masses, (self.categories - mu) ** 2))

    def quantile(self, q: float) -> int:
        """Smallest category whose cumulative mass reaches ``q``."""
        if not 0 < q <= 1:
            raise InvalidArgument(f"quantile level must lie in (0, 1], got {q}")
        cum = np.cumsum(self.masses)
        # absorb rounding in the running sum so that q=1 hits the last occupied bin
        idx = np.nonzero(cum >= q - 1e-12)[0]
        return int(idx[0] + 1) if idx.size else self.support_max

    def tail_probability(self, category: int) -> float:
        """P(loss >= category)."""
        self._check_category(category)
        return float(self.masses[category - 1:].sum())

    def _check_category(self, x):
        if int(x) != x or not 1 <= x <= self.support_max:
            raise InvalidArgument(f"category {x} outside 1..{self.support_max}")

    # serialization ----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "support_max": self.support_max,
            "masses": [float(v) for v in self.masses],
            "bandwidth": self.bandwidth,
            "kind": self.kind,
            "observation_count": self.observation_count,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LossDistribution":
        masses = data["masses"]
        if "support_max" in data and int(data["support_max"]) != len(masses):
            raise InvalidArgument(
                f"support_max {data['support_max']} does not match {len(masses)} masses"
            )
        return cls(
            masses,
            bandwidth=data.get("bandwidth", 0.0),
            kind=data.get("kind", DISCRETE),
            observation_count=data.get("observation_count", 0),
        )


STAT_KINDS = ("mean", "variance", "moment", "quantile", "cdf", "density")


def stat(d: LossDistribution, kind: str, arg=None) -> float:
    """Evaluate a summary statistic by name (``moment`` takes the order as ``arg``)."""
    if kind == "mean":
        return d.mean()
    if kind == "variance":
        return d.variance()
    if kind not in STAT_KINDS:
        raise InvalidArgument(f"unknown statistic {kind!r}")
    if arg is None:
        raise InvalidArgument(f"statistic {kind!r} needs an argument")
    return getattr(d, kind)(arg)


def build_empirical(obs: ObsLike, support_max: int, kind: str = DISCRETE) -> LossDistribution:
    """Relative-frequency histogram of the ratings over ``1..support_max``."""
    values = _values(obs)
    if values.size == 0:
        raise EmptyObservations("cannot build a distribution from zero observations")
    if np.any(values != np.round(values)):
        raise CategoryOutOfRange("ratings must be integers")
    bad = values[(values < 1) | (values > support_max)]
    if bad.size:
        raise CategoryOutOfRange(
            f"rating {int(bad[0])} outside 1..{support_max} (category 0 is not allowed)"
        )
    counts = np.bincount(values.astype(int) - 1, minlength=support_max)
    return LossDistribution(counts / values.size, kind=kind, observation_count=values.size)


@dataclass(frozen=True, eq=False)
class KernelWeights:
    """Discretized Gaussian kernel on the integer offsets ``-r..r``."""

    bandwidth: float
    window_radius: int
    weights: np.ndarray = field(repr=False)

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.window_radius, self.window_radius + 1)

    def __call__(self, n: int) -> float:
        if abs(n) > self.window_radius:
            return 0.0
        return float(self.weights[n + self.window_radius])


def default_window_radius(h: float, support_max: int = 1) -> int:
    return max(int(support_max), int(math.ceil(6 * h)), 1)


def discrete_kernel(h: float, window_radius: Optional[int] = None) -> KernelWeights:
    """Kernel weights ``K_h(n) = Phi((n + 1/2)/h) - Phi((n - 1/2)/h)``.

    Each weight is the mass a N(0, h^2) variable puts on ``[n - 1/2, n + 1/2]``.
    Positive offsets are evaluated through upper-tail differences so that
    small weights keep their relative precision.
    """
    if not h > 0 or not math.isfinite(h):
        raise InvalidBandwidth(f"bandwidth must be positive, got {h}")
    r = default_window_radius(h) if window_radius is None else int(window_radius)
    if r < 1:
        raise InvalidArgument(f"window_radius must be >= 1, got {window_radius}")
    n = np.arange(0, r + 1, dtype=float)
    right = np.empty(r + 1)
    right[0] = ndtr(0.5 / h) - ndtr(-0.5 / h)
    right[1:] = ndtr(-(n[1:] - 0.5) / h) - ndtr(-(n[1:] + 0.5) / h)
    weights = np.concatenate([right[:0:-1], right])
    return KernelWeights(float(h), r, _frozen(weights))


def smooth(d: LossDistribution, h: float, window_radius: Optional[int] = None) -> LossDistribution:
    """Convolve an unsmoothed histogram with the discrete kernel.

    The result is restricted to ``1..support_max`` and renormalized. Masses
    that underflow to zero in double precision are raised to the smallest
    normal float so that every category keeps positive mass.
    """
    if d.bandwidth > 0:
        raise InvalidArgument("distribution is already smoothed")
    a = d.support_max
    kernel = discrete_kernel(h, window_radius or default_window_radius(h, a))
    r = kernel.window_radius
    out = np.zeros(a)
    for j in np.nonzero(d.masses)[0]:
        lo, hi = max(0, j - r), min(a, j + r + 1)
        offsets = np.arange(lo, hi) - j
        out[lo:hi] += d.masses[j] * kernel.weights[offsets + r]
    out = np.maximum(out, _TINY)
    out /= out.sum()
    return LossDistribution(out, bandwidth=h, kind=d.kind, observation_count=d.observation_count)


def silverman_bandwidth(obs: ObsLike) -> float:
    """Rule-of-thumb bandwidth ``0.9 * min(sd, IQR/1.34) * n**(-1/5)``.

    A zero IQR with positive standard deviation falls back to the standard
    deviation alone.
    """
    x = _values(obs)
    if x.size < 2:
        raise DegenerateSample("need at least two ratings to estimate a bandwidth")
    sd = float(np.std(x, ddof=1))
    if sd == 0:
        raise DegenerateSample("all ratings are identical; supply a bandwidth explicitly")
    q1, q3 = np.percentile(x, [25, 75])
    iqr = float(q3 - q1)
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    return 0.9 * spread * x.size ** (-0.2)


def truncate(d: LossDistribution, cutoff: int) -> LossDistribution:
    """Restrict to categories ``1..cutoff`` and renormalize."""
    if int(cutoff) != cutoff or not 1 <= cutoff <= d.support_max:
        raise InvalidCutoff(f"cutoff {cutoff} outside 1..{d.support_max}")
    cutoff = int(cutoff)
    if cutoff == d.support_max:
        return d
    kept = d.masses[:cutoff]
    total = kept.sum()
    if total <= 0:
        raise ZeroMassBelowCutoff(f"no probability mass at or below category {cutoff}")
    return LossDistribution(
        kept / total, bandwidth=d.bandwidth, kind=d.kind, observation_count=d.observation_count
    )


def remove_outliers(obs: ObsLike, policy: str = "none", multiplier: float = 1.5):
    """Drop ratings outside the Tukey fences ``[Q1 - c*IQR, Q3 + c*IQR]``.

    ``policy`` is ``"none"`` or ``"iqr"``. The result is never empty: if every
    rating would be dropped the input comes back unchanged with a warning.
    Returns the same type as the input (Observations or a list).
    """
    if policy == "none":
        return obs
    if policy != "iqr":
        raise InvalidArgument(f"unknown outlier policy {policy!r}")
    x = _values(obs)
    if x.size <= 1:
        return obs
    q1, q3 = np.percentile(x, [25, 75])
    spread = multiplier * (q3 - q1)
    keep = (x >= q1 - spread) & (x <= q3 + spread)
    if not keep.any():
        warnings.warn("outlier removal would drop every rating; keeping input", stacklevel=2)
        return obs
    kept = [int(v) for v in x[keep]]
    if isinstance(obs, Observations):
        return Observations(kept, goal_id=obs.goal_id, scenario=obs.scenario)
    return kept


def rescale_factors(samples, target_max: float, eps: float = RESCALE_EPS) -> list:
    factors = []
    for i, s in enumerate(samples):
        s = np.asarray(s, dtype=float)
        if s.size == 0:
            raise DegenerateRange(f"sample {i} is empty")
        q = float(np.quantile(s, 1 - eps))
        if not q > 0:
            raise DegenerateRange(f"sample {i} has non-positive (1-eps)-quantile {q}")
        factors.append(target_max / q)
    return factors


def rescale_to_common_range(samples, target_max: float, eps: float = RESCALE_EPS) -> list:
    """Scale each continuous sample so its ``(1 - eps)``-quantile lands on ``target_max``."""
    return [np.asarray(s, dtype=float) * f for s, f in zip(samples, rescale_factors(samples, target_max, eps))]


def discretize(values, lower: float, upper: float, resolution: int) -> list:
    """Map continuous values on ``[lower, upper]`` onto categories ``1..resolution``.

    The interval is cut into ``resolution`` equal bins; values outside are
    clipped into the end bins.
    """
    if not upper > lower:
        raise DegenerateRange(f"empty range [{lower}, {upper}]")
    if resolution < 1:
        raise InvalidArgument("resolution must be >= 1")
    x = np.asarray(values, dtype=float)
    cat = np.floor((x - lower) / (upper - lower) * resolution).astype(int) + 1
    return [int(c) for c in np.clip(cat, 1, resolution)]


def loss_distribution(
    obs: ObsLike,
    support_max: int,
    bandwidth: Optional[float] = None,
    smoothed: bool = True,
    outliers: str = "none",
    kind: str = DISCRETE,
) -> LossDistribution:
    """Survey answers to a (by default smoothed) loss distribution.

    Without an explicit ``bandwidth`` Silverman's rule is used, falling back
    to ``FALLBACK_BANDWIDTH`` when the ratings have no spread.
    """
    obs = remove_outliers(obs, outliers)
    emp = build_empirical(obs, support_max, kind=kind)
    if not smoothed:
        return emp
    if bandwidth is None:
        try:
            bandwidth = silverman_bandwidth(obs)
        except DegenerateSample:
            bandwidth = FALLBACK_BANDWIDTH
    return smooth(emp, bandwidth)


def mixture(dists: Sequence[LossDistribution], weights) -> LossDistribution:
    """Category-wise convex combination; weights are normalized to sum 1."""
    if len(dists) == 0 or len(dists) != len(weights):
        raise InvalidWeights("need one weight per distribution")
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or not w.sum() > 0:
        raise InvalidWeights(f"weights must be nonnegative and not all zero: {list(w)}")
    a = dists[0].support_max
    if any(d.support_max != a for d in dists):
        raise SupportMismatch("mixture components have different supports")
    w = w / w.sum()
    m = np.zeros(a)
    for wi, d in zip(w, dists):
        m += wi * d.masses
    m = np.maximum(m, 0)
    return LossDistribution(
        m / m.sum(),
        bandwidth=min(d.bandwidth for wi, d in zip(w, dists) if wi > 0),
        kind=dists[0].kind,
        observation_count=sum(d.observation_count for d in dists),
    )


def sup_distance(f: LossDistribution, g: LossDistribution) -> float:
    return float(np.max(np.abs(f.masses - g.masses)))
