import numpy as np
import pytest

from gnsum.errors import DegenerateDenominator, ValidationError
from gnsum.estimators import basic_scaleup, generalized_scaleup
from gnsum.rng import derive_seed
from gnsum.variance import (
    IntervalMethod,
    IntervalSpec,
    bootstrap_estimate,
    frame_replicate_weights,
    hidden_replicate_weights,
    killworth_interval,
    nearest_rank,
    percentile_interval,
    z_quantile,
)


def test_z_quantile():
    assert z_quantile(0.95) == pytest.approx(1.959963984540054, abs=1e-12)
    assert z_quantile(0.90) == pytest.approx(1.6448536269514722, abs=1e-12)
    with pytest.raises(ValidationError):
        z_quantile(1.0)


def test_killworth_by_hand():
    k = killworth_interval(50.0, 2000.0, 1000, 0.95)
    assert k.se == pytest.approx(5.0)
    assert (k.low, k.high) == (pytest.approx(50 - 5 * 1.959963984540054),
                               pytest.approx(50 + 5 * 1.959963984540054))
    with pytest.raises(DegenerateDenominator):
        killworth_interval(50.0, 0.0, 1000)


def test_percentile_nearest_rank():
    reps = np.arange(1, 101, dtype=float)
    assert percentile_interval(reps, 0.95) == (3.0, 98.0)
    assert percentile_interval(reps[::-1], 0.90) == (5.0, 95.0)
    assert nearest_rank(np.array([1.0, 2.0, 3.0, 4.0]), 0.5) == 2.0
    with pytest.raises(ValidationError):
        percentile_interval([1.0], 0.95)
    with pytest.raises(ValidationError):
        percentile_interval([1.0, np.nan], 0.95)


def test_interval_spec():
    assert IntervalSpec(0.9, "rescaled_boot").method is IntervalMethod.RESCALED_BOOT
    with pytest.raises(ValidationError):
        IntervalSpec(1.5)


def test_replicate_weight_builders(frame, hidden):
    fw = frame_replicate_weights(frame, "simple", 20, seed=1)
    assert fw.shape == (20, 4)
    assert np.allclose((fw / frame.weight).sum(axis=1), 4)
    rw = frame_replicate_weights(frame, "rescaled", 20, seed=1)
    # two PSUs per stratum: each stratum keeps one PSU at double weight
    ratio = rw / frame.weight
    assert set(np.unique(ratio)) <= {0.0, 2.0}
    assert np.allclose(ratio[:, :2].sum(axis=1), 2) and np.allclose(ratio[:, 2:].sum(axis=1), 2)
    hw = hidden_replicate_weights(hidden, "rds", 20, seed=1)
    assert hw.shape == (20, 3)
    with pytest.raises(ValidationError):
        frame_replicate_weights(frame, "jackknife", 5, seed=1)


def test_bootstrap_is_deterministic_and_thread_invariant(frame, hidden, registry):
    def fn(f, h):
        return generalized_scaleup(f, h, registry)

    spec = IntervalSpec(0.9, IntervalMethod.TWO_SAMPLE_BOOT)
    a = bootstrap_estimate(fn, frame, hidden, spec, 200, seed=3, frame_resampler="simple")
    b = bootstrap_estimate(fn, frame, hidden, spec, 200, seed=3, frame_resampler="simple",
                           threads=4)
    assert a.replicates == b.replicates
    assert a.interval == b.interval
    assert a.value == pytest.approx(30 * 130 / 180)
    assert a.metadata["hidden_resampler"] == "simple"
    assert a.interval.low <= a.interval.high


def test_rescaled_bootstrap_interval(frame, registry):
    def fn(f, h):
        return basic_scaleup(f, registry, "classic")

    est = bootstrap_estimate(fn, frame, None, IntervalSpec(0.95, "rescaled_boot"), 64, seed=1)
    assert est.metadata["frame_resampler"] == "rescaled"
    # with two PSUs per stratum there are only four distinct replicates
    assert len(set(est.replicates)) <= 4


def test_excluded_replicates_are_counted(frame, registry):
    B, seed = 400, 11
    w = frame_replicate_weights(frame, "simple", B, derive_seed(seed, 10))
    degenerate = (w[:, 0] / frame.weight[0]) >= 4
    assert 0 < degenerate.sum() <= 4

    def fn(f, h):
        if f.weight[0] >= 4 * frame.weight[0]:
            raise DegenerateDenominator("synthetic")
        return basic_scaleup(f, registry, "classic")

    est = bootstrap_estimate(fn, frame, None, IntervalSpec(0.95, "simple_boot"), B, seed)
    assert est.metadata["replicates_excluded"] == int(degenerate.sum())
    assert len(est.replicates) == B - int(degenerate.sum())


def test_too_many_excluded_replicates_fail(frame, registry):
    def fn(f, h):
        if f.weight[0] == 0:
            raise DegenerateDenominator("synthetic")
        return 1.0

    with pytest.raises(DegenerateDenominator, match="limit 1%"):
        bootstrap_estimate(fn, frame, None, IntervalSpec(0.95, "simple_boot"), 100, seed=1)


def test_killworth_is_not_a_bootstrap(frame):
    with pytest.raises(ValidationError):
        bootstrap_estimate(lambda f, h: 1.0, frame, None, IntervalSpec(0.95, "killworth"), 10, 1)
