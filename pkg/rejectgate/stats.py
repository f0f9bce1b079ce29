"""Mean absolute error, percentile bootstrap intervals and common-language effect size.

Bootstrap resampling draws multinomial counts over the distinct values of a
sample, which is distributed exactly like drawing the same number of items
with replacement but costs O(distinct values) per resample.
"""

from dataclasses import dataclass, replace
from typing import Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from .errors import DataValidationError, DegenerateComputationError, DegeneratePartitionError


@dataclass(frozen=True)
class BootstrapConfig:
    resamples: int = 1000
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.resamples < 1:
            raise DataValidationError(f"resamples must be >= 1, got {self.resamples}")
        if not 0.0 < self.alpha < 1.0:
            raise DataValidationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 <= self.seed < 2**64:
            raise DataValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def derive(self, *keys: int) -> "BootstrapConfig":
        """Same settings with a seed derived from ``(seed, *keys)``."""
        return replace(self, seed=derive_seed(self.seed, *keys))


@dataclass(frozen=True)
class IntervalEstimate:
    point: float
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"Interval bounds out of order: [{self.lo}, {self.hi}]")

    def excludes(self, value: float) -> bool:
        return value < self.lo or value > self.hi


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 64-bit seed for stream ``keys`` under ``seed``."""
    state = np.random.SeedSequence([seed, *keys]).generate_state(1, dtype=np.uint64)
    return int(state[0])


def mean_absolute_error(aes: Sequence[int]) -> float:
    if len(aes) == 0:
        raise DegenerateComputationError("MAE of an empty selection is undefined (no accepted images)")
    return float(np.mean(np.asarray(aes, dtype=float)))


def _histogram(values: Sequence[float], support: np.ndarray) -> np.ndarray:
    positions = np.searchsorted(support, np.asarray(values, dtype=float))
    return np.bincount(positions, minlength=len(support))


def _resample_counts(rng: np.random.Generator, counts: np.ndarray, resamples: int) -> np.ndarray:
    n = int(counts.sum())
    return rng.multinomial(n, counts / n, size=resamples)


def _percentile_bounds(stats: np.ndarray, alpha: float) -> Tuple[float, float]:
    lo, hi = np.percentile(stats, [100 * alpha / 2, 100 * (1 - alpha / 2)])
    return float(lo), float(hi)


def bootstrap_mean_ci(values: Sequence[float], cfg: BootstrapConfig) -> IntervalEstimate:
    """Sample mean with a percentile bootstrap interval."""
    if len(values) == 0:
        raise DegenerateComputationError("Cannot bootstrap the mean of an empty sample")
    support = np.unique(np.asarray(values, dtype=float))
    counts = _histogram(values, support)
    rng = np.random.default_rng(cfg.seed)
    draws = _resample_counts(rng, counts, cfg.resamples)
    means = draws @ support / len(values)
    # Constant samples would otherwise pick up rounding noise from the dot product.
    if len(support) == 1:
        means = np.full(cfg.resamples, support[0])
    lo, hi = _percentile_bounds(means, cfg.alpha)
    return IntervalEstimate(point=float(np.mean(np.asarray(values, dtype=float))), lo=lo, hi=hi)


def common_language_effect_size(accepted_aes: Sequence[float], rejected_aes: Sequence[float]) -> float:
    """Probability that an accepted AE is lower than a rejected AE, ties counting half.

    Rank-sum form of the pair count: the rejected sample's Mann-Whitney U
    equals the number of (a, r) pairs with a < r plus half the ties.
    """
    m, n = len(rejected_aes), len(accepted_aes)
    if m == 0 or n == 0:
        raise DegeneratePartitionError("Effect size needs non-empty accepted and rejected partitions")
    ranks = rankdata(np.concatenate([np.asarray(rejected_aes, dtype=float), np.asarray(accepted_aes, dtype=float)]))
    r1 = float(np.sum(ranks[:m]))
    return (2 * r1 - m * (m + 1)) / (2 * n * m)


def _effect_from_counts(accepted: np.ndarray, rejected: np.ndarray) -> np.ndarray:
    """Row-wise effect size from histograms over a shared ascending support."""
    n_accepted = accepted.sum(axis=-1)
    n_rejected = rejected.sum(axis=-1)
    # Rejected items strictly above each support value.
    above = n_rejected[..., None] - np.cumsum(rejected, axis=-1)
    wins = np.sum(accepted * above, axis=-1)
    ties = np.sum(accepted * rejected, axis=-1)
    return (wins + 0.5 * ties) / (n_accepted * n_rejected)


def bootstrap_effect_size_ci(
    accepted_aes: Sequence[float], rejected_aes: Sequence[float], cfg: BootstrapConfig
) -> IntervalEstimate:
    """Exact effect size with an interval from resampling both partitions independently."""
    point = common_language_effect_size(accepted_aes, rejected_aes)
    support = np.unique(np.concatenate([np.asarray(accepted_aes, dtype=float), np.asarray(rejected_aes, dtype=float)]))
    rng = np.random.default_rng(cfg.seed)
    accepted = _resample_counts(rng, _histogram(accepted_aes, support), cfg.resamples)
    rejected = _resample_counts(rng, _histogram(rejected_aes, support), cfg.resamples)
    effects = _effect_from_counts(accepted.astype(float), rejected.astype(float))
    lo, hi = _percentile_bounds(effects, cfg.alpha)
    return IntervalEstimate(point=point, lo=lo, hi=hi)
