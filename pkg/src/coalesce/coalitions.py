"""Coalition enumeration, weighted sampling and membership matrices.

A coalition is a bitmask over the p features: bit i set means feature i is
treated as known. Every plan lists the empty coalition first and the full
coalition last, both carrying a large anchor weight so the downstream
weighted least-squares fit interpolates them. Exhaustive plans follow
binary counting order, which fixes coalition identity for golden files and
chunk boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PlanSizeError

DEFAULT_ANCHOR_WEIGHT = 1.0e6
DEFAULT_EXHAUSTIVE_CAP = 20

EXHAUSTIVE = "exhaustive"
SAMPLED = "sampled"

#: Bitmask arithmetic is done in int64; popcount supports up to 32 features.
MAX_FEATURES = 32


@dataclass(frozen=True)
class Coalition:
    """A feature subset: bitmask plus its cached popcount."""

    mask: int
    size: int

    def __post_init__(self):
        if self.mask < 0:
            raise ValueError("coalition mask must be nonnegative")
        if self.size != int(self.mask).bit_count():
            raise ValueError(
                f"size {self.size} does not match popcount of mask {self.mask:#b}")

    @classmethod
    def from_mask(cls, mask: int) -> "Coalition":
        return cls(mask=mask, size=int(mask).bit_count())

    def contains(self, feature: int) -> bool:
        return bool((self.mask >> feature) & 1)


@dataclass(frozen=True)
class CoalitionPlan:
    """An ordered set of coalitions with their least-squares weights.

    ``masks``, ``sizes`` and ``weights`` are parallel arrays. For sampled
    plans the weight of a non-anchor coalition is the number of times it was
    drawn; duplicates are merged so masks never repeat.
    """

    p: int
    masks: np.ndarray
    sizes: np.ndarray
    weights: np.ndarray
    mode: str
    seed: int | None = None
    n_draws: int | None = None

    def __len__(self) -> int:
        return int(self.masks.shape[0])

    def coalition(self, index: int) -> Coalition:
        return Coalition(mask=int(self.masks[index]), size=int(self.sizes[index]))

    def __iter__(self):
        for index in range(len(self)):
            yield self.coalition(index)

    @property
    def full_mask(self) -> int:
        return (1 << self.p) - 1


def popcount(masks: np.ndarray) -> np.ndarray:
    """Vectorized popcount for int64 masks with at most 32 usable bits."""
    v = np.asarray(masks, dtype=np.int64)
    if np.any(v < 0) or np.any(v >= (1 << MAX_FEATURES)):
        raise ValueError(f"masks must lie in [0, 2^{MAX_FEATURES})")
    v = v - ((v >> 1) & 0x55555555)
    v = (v & 0x33333333) + ((v >> 2) & 0x33333333)
    v = (v + (v >> 4)) & 0x0F0F0F0F
    return ((v * 0x01010101) >> 24) & 0x3F


def shapley_kernel_weight(p: int, s: int,
                          anchor_weight: float = DEFAULT_ANCHOR_WEIGHT) -> float:
    """Least-squares weight of a coalition of size s among p features.

    Interior sizes get (p - 1) / (C(p, s) * s * (p - s)); the empty and full
    coalitions get the anchor weight, 1e6 by default.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if s < 0 or s > p:
        raise ValueError(f"coalition size {s} out of range [0, {p}]")
    if s == 0 or s == p:
        return float(anchor_weight)
    return (p - 1) / (math.comb(p, s) * s * (p - s))


def _weights_by_size(p: int, anchor_weight: float) -> np.ndarray:
    return np.array([shapley_kernel_weight(p, s, anchor_weight)
                     for s in range(p + 1)], dtype=np.float64)


def enumerate_all(p: int, *, cap: int = DEFAULT_EXHAUSTIVE_CAP,
                  anchor_weight: float = DEFAULT_ANCHOR_WEIGHT) -> CoalitionPlan:
    """All 2^p coalitions in binary counting order.

    Raises :class:`PlanSizeError` when p exceeds ``cap`` (memory guard);
    sample instead for larger p.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if p > cap:
        raise PlanSizeError(
            f"exhaustive enumeration of 2^{p} coalitions exceeds the cap of "
            f"2^{cap}; use sampled coalitions instead")
    masks = np.arange(1 << p, dtype=np.int64)
    sizes = popcount(masks)
    weights = _weights_by_size(p, anchor_weight)[sizes]
    return CoalitionPlan(p=p, masks=masks, sizes=sizes, weights=weights,
                         mode=EXHAUSTIVE)


def sample_coalitions(p: int, n_draws: int, seed: int, *,
                      anchor_weight: float = DEFAULT_ANCHOR_WEIGHT) -> CoalitionPlan:
    """Draw coalitions with replacement, weighted by the kernel weights.

    Sizes are drawn with probability proportional to k(p, s) * C(p, s) and a
    uniform subset of that size is then chosen, which makes every individual
    mask of size s equally likely with probability proportional to k(p, s).
    Duplicate draws are merged and their count becomes the coalition weight.
    The empty and full coalitions are always included, first and last, with
    the anchor weight. The result is a pure function of (p, n_draws, seed).

    For p = 1 no interior coalition exists and the plan is just the two
    anchors.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if p > MAX_FEATURES:
        raise ValueError(f"sampling supports at most {MAX_FEATURES} features")
    if n_draws < 1:
        raise ValueError(f"n_draws must be >= 1, got {n_draws}")
    full = (1 << p) - 1
    if p == 1:
        masks = np.array([0, full], dtype=np.int64)
    else:
        rng = np.random.default_rng(seed)
        interior = np.arange(1, p)
        size_probs = (p - 1) / (interior * (p - interior))
        size_probs /= size_probs.sum()
        size_draws = rng.choice(interior, size=n_draws, p=size_probs)
        drawn = np.empty(n_draws, dtype=np.int64)
        for index, size in enumerate(size_draws):
            members = rng.choice(p, size=int(size), replace=False)
            drawn[index] = sum(1 << int(feature) for feature in members)
        unique, counts = np.unique(drawn, return_counts=True)
        masks = np.concatenate(([0], unique, [full])).astype(np.int64)
    sizes = popcount(masks)
    weights = np.empty(masks.shape[0], dtype=np.float64)
    weights[0] = weights[-1] = float(anchor_weight)
    if masks.shape[0] > 2:
        weights[1:-1] = counts.astype(np.float64)
    return CoalitionPlan(p=p, masks=masks, sizes=sizes, weights=weights,
                         mode=SAMPLED, seed=seed, n_draws=n_draws)


def build_Z(plan: CoalitionPlan, p: int | None = None) -> np.ndarray:
    """Binary membership matrix: |plan| x (p + 1), intercept column of ones.

    Entry (j, i + 1) is 1 exactly when feature i belongs to coalition j.
    """
    if p is None:
        p = plan.p
    elif p != plan.p:
        raise ValueError(f"plan was built for p = {plan.p}, got p = {p}")
    if len(plan) == 0:
        raise ValueError("plan is empty")
    Z = np.ones((len(plan), p + 1), dtype=np.float64)
    bits = (plan.masks[:, np.newaxis] >> np.arange(p, dtype=np.int64)) & 1
    Z[:, 1:] = bits
    return Z
