"""Confidence intervals: Killworth's model-based interval and percentile
bootstrap intervals built from the resamplers in :mod:`gnsum.sampling`.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Literal

import numpy as np
import numpy.typing as npt
from scipy.special import ndtri

from .datamodel import Estimate, FrameSurvey, HiddenSurvey, Interval, combine_digests
from .errors import DegenerateDenominator, ValidationError
from .rng import derive_seed
from .sampling import (
    multiplicities,
    rds_two_group_bootstrap,
    rescaled_bootstrap,
    simple_bootstrap,
    two_sample_replicates,
)

FloatArray = npt.NDArray[np.float64]
EstFn = Callable[[FrameSurvey, "HiddenSurvey | None"], float]

MAX_EXCLUDED_SHARE = 0.01


class IntervalMethod(str, Enum):
    KILLWORTH = "killworth"
    SIMPLE_BOOT = "simple_boot"
    RESCALED_BOOT = "rescaled_boot"
    TWO_SAMPLE_BOOT = "two_sample_boot"


@dataclass(frozen=True)
class IntervalSpec:
    level: float = 0.95
    method: IntervalMethod = IntervalMethod.SIMPLE_BOOT

    def __post_init__(self) -> None:
        if not 0 < self.level < 1:
            raise ValidationError("level must lie in (0, 1)")
        object.__setattr__(self, "method", IntervalMethod(self.method))


def z_quantile(level: float) -> float:
    """Two-sided standard normal critical value for confidence ``level``."""
    if not 0 < level < 1:
        raise ValidationError("level must lie in (0, 1)")
    return float(ndtri(1.0 - (1.0 - level) / 2.0))


@dataclass(frozen=True)
class KillworthInterval:
    se: float
    low: float
    high: float


def killworth_interval(
    n_hat: float, sum_degree_hat: float, N: int, level: float = 0.95
) -> KillworthInterval:
    """Symmetric interval with se = sqrt(N * n_hat / sum of estimated degrees)."""
    if not sum_degree_hat > 0:
        raise DegenerateDenominator("sum of estimated degrees must be positive")
    if n_hat < 0:
        raise ValidationError("size estimate must be non-negative")
    se = math.sqrt(N * n_hat / sum_degree_hat)
    z = z_quantile(level)
    return KillworthInterval(se, n_hat - z * se, n_hat + z * se)


def nearest_rank(sorted_values: FloatArray, p: float) -> float:
    """The smallest value with at least a share ``p`` of values at or below it."""
    B = len(sorted_values)
    rank = math.ceil(p * B - 1e-9)
    return float(sorted_values[min(max(rank, 1), B) - 1])


def percentile_interval(replicates: Sequence[float] | FloatArray, level: float = 0.95
                        ) -> tuple[float, float]:
    """Nearest-rank percentile interval; endpoints are replicate values."""
    r = np.asarray(replicates, dtype=np.float64)
    if r.ndim != 1 or len(r) < 2:
        raise ValidationError("percentile interval needs at least two replicates")
    if not np.isfinite(r).all():
        raise ValidationError("replicates must be finite")
    if not 0 < level < 1:
        raise ValidationError("level must lie in (0, 1)")
    s = np.sort(r)
    alpha = (1.0 - level) / 2.0
    return nearest_rank(s, alpha), nearest_rank(s, 1.0 - alpha)


def frame_replicate_weights(
    frame: FrameSurvey, method: Literal["simple", "rescaled"], B: int, seed: int
) -> FloatArray:
    """A ``(B, n)`` matrix of frame replicate weights."""
    if method == "simple":
        idx = simple_bootstrap(len(frame), B, seed)
        return multiplicities(idx, len(frame)) * frame.weight
    if method == "rescaled":
        return rescaled_bootstrap(frame, B, seed)
    raise ValidationError(f"unknown frame resampler {method!r}")


def hidden_replicate_weights(
    hidden: HiddenSurvey, method: Literal["simple", "rds"], B: int, seed: int
) -> FloatArray:
    """A ``(B, n)`` matrix of hidden-sample replicate relative weights."""
    if method == "simple":
        idx = simple_bootstrap(len(hidden), B, seed)
    elif method == "rds":
        idx = rds_two_group_bootstrap(hidden, B, seed)
    else:
        raise ValidationError(f"unknown hidden resampler {method!r}")
    return multiplicities(idx, len(hidden)) * hidden.rel_weight


def _frame_method(spec: IntervalSpec, frame: FrameSurvey,
                  frame_resampler: str | None) -> Literal["simple", "rescaled"]:
    if spec.method is IntervalMethod.SIMPLE_BOOT:
        return "simple"
    if spec.method is IntervalMethod.RESCALED_BOOT:
        return "rescaled"
    if spec.method is IntervalMethod.TWO_SAMPLE_BOOT:
        if frame_resampler is not None:
            return frame_resampler  # type: ignore[return-value]
        return "simple" if frame.design.design_kind.value == "srs" else "rescaled"
    raise ValidationError("Killworth intervals are not bootstrap intervals")


def bootstrap_estimate(
    est_fn: EstFn,
    frame: FrameSurvey,
    hidden: HiddenSurvey | None,
    spec: IntervalSpec,
    B: int,
    seed: int,
    *,
    hidden_resampler: Literal["simple", "rds"] = "simple",
    frame_resampler: Literal["simple", "rescaled"] | None = None,
    threads: int = 1,
    method_name: str = "estimate",
) -> Estimate:
    """Percentile bootstrap of ``est_fn(frame, hidden)``.

    Frame replicates come from the resampler named by ``spec.method``.  When
    a hidden survey is given it is resampled independently and the b-th
    hidden replicate is paired with the b-th frame replicate.  Replicates on
    which the estimator hits a zero denominator are dropped and counted;
    more than 1% dropped is an error.
    """
    if B < 2:
        raise ValidationError("bootstrap needs B >= 2")
    fm = _frame_method(spec, frame, frame_resampler)
    point = est_fn(frame, hidden)
    fw = frame_replicate_weights(frame, fm, B, derive_seed(seed, 10))
    if hidden is not None:
        hw = hidden_replicate_weights(hidden, hidden_resampler, B, derive_seed(seed, 11))
        pairs = two_sample_replicates(list(fw), list(hw))
    else:
        pairs = [(w, None) for w in fw]

    def one(pair):
        w_f, w_h = pair
        f = frame.with_weights(w_f)
        h = None if w_h is None else hidden.with_weights(w_h)
        try:
            return est_fn(f, h)
        except DegenerateDenominator:
            return math.nan

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            values = list(ex.map(one, pairs))
    else:
        values = [one(p) for p in pairs]
    reps = np.array(values, dtype=np.float64)
    bad = ~np.isfinite(reps)
    excluded = int(bad.sum())
    if excluded > MAX_EXCLUDED_SHARE * B:
        raise DegenerateDenominator(
            f"{excluded} of {B} bootstrap replicates were degenerate (limit 1%)"
        )
    kept = reps[~bad]
    low, high = percentile_interval(kept, spec.level)
    digest = combine_digests(frame.digest(), "" if hidden is None else hidden.digest())
    return Estimate(
        value=float(point),
        method=method_name,
        inputs_digest=digest,
        replicates=tuple(kept),
        interval=Interval(low, high, spec.level),
        metadata={
            "interval_method": spec.method.value,
            "frame_resampler": fm,
            "hidden_resampler": None if hidden is None else hidden_resampler,
            "replicates_requested": B,
            "replicates_excluded": excluded,
            "seed": seed,
        },
    )
