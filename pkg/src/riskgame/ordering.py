"""Tail-lexicographic preference between loss distributions.

Two distributions on the same categories are compared from the highest
category downward. At the first category where their masses differ by more
than ``tol``, the one with the smaller mass is preferred (it puts less
weight on the most severe losses). Identical distributions are indifferent.
"""

from dataclasses import dataclass
from functools import cmp_to_key
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidWeights, SupportMismatch
from .lossdist import LossDistribution, mixture

DEFAULT_TOL = 1e-9

INDIFFERENT = 0
FIRST = 1
SECOND = 2


@dataclass(frozen=True)
class PreferenceResult:
    """``verdict`` is 0 (indifferent), 1 (first preferred) or 2 (second preferred)."""

    verdict: int
    decided_at_category: Optional[int] = None

    def __int__(self):
        return self.verdict


def compare_masses(f: np.ndarray, g: np.ndarray, tol: float = DEFAULT_TOL):
    """Raw verdict on two equally long mass vectors; returns ``(verdict, category)``."""
    differs = np.nonzero(np.abs(f - g) > tol)[0]
    if differs.size == 0:
        return INDIFFERENT, None
    k = differs[-1]
    return (FIRST if f[k] < g[k] else SECOND), int(k + 1)


def _check_pair(f: LossDistribution, g: LossDistribution):
    if f.support_max != g.support_max:
        raise SupportMismatch(f"supports differ: 1..{f.support_max} vs 1..{g.support_max}")
    if f.kind != g.kind:
        raise SupportMismatch(f"kinds differ: {f.kind} vs {g.kind}")


def prefer(f: LossDistribution, g: LossDistribution, tol: float = DEFAULT_TOL) -> PreferenceResult:
    _check_pair(f, g)
    return PreferenceResult(*compare_masses(f.masses, g.masses, tol))


def prefer_multi(
    fs: Sequence[LossDistribution],
    gs: Sequence[LossDistribution],
    weights: Optional[Sequence[float]] = None,
    tol: float = DEFAULT_TOL,
) -> PreferenceResult:
    """Compare weighted mixtures of per-goal distributions.

    ``weights`` defaults to equal importance for all goals; it is normalized
    before mixing, so only the ratios matter.
    """
    d = len(fs)
    if d == 0 or len(gs) != d:
        raise InvalidWeights(f"need equally many goals on both sides, got {len(fs)} and {len(gs)}")
    if weights is None:
        weights = [1.0] * d
    if len(weights) != d:
        raise InvalidWeights(f"expected {d} weights, got {len(weights)}")
    for f, g in zip(fs, gs):
        _check_pair(f, g)
    return prefer(mixture(fs, weights), mixture(gs, weights), tol)


def sort_by_preference(ds: Sequence[LossDistribution], tol: float = DEFAULT_TOL) -> list:
    """Indices of ``ds`` in ascending preference order (least severe first).

    The sort is stable, so indifferent distributions keep their input order.
    """
    if len(ds) == 0:
        return []
    for d in ds[1:]:
        _check_pair(ds[0], d)

    def cmp(i, j):
        v = compare_masses(ds[i].masses, ds[j].masses, tol)[0]
        return -1 if v == FIRST else (1 if v == SECOND else 0)

    return sorted(range(len(ds)), key=cmp_to_key(cmp))


def ranks(ds: Sequence[LossDistribution], tol: float = DEFAULT_TOL) -> list:
    """Rank (1 = least severe) of each distribution, in input order."""
    order = sort_by_preference(ds, tol)
    r = [0] * len(ds)
    for pos, idx in enumerate(order, start=1):
        r[idx] = pos
    return r
