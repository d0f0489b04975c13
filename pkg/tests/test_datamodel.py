import numpy as np
import pytest

from gnsum.datamodel import (
    DesignKind,
    Estimate,
    FrameSurvey,
    HiddenSurvey,
    Interval,
    KnownPopulationRegistry,
    ProbeGroup,
)
from gnsum.errors import (
    EmptySample,
    NonpositiveWeight,
    SchemaError,
    UnknownGroup,
    ValidationError,
    VisibilityExceedsTies,
)


def _frame(**kw):
    base = dict(
        ids=("r1", "r2"), weight=np.array([1.0, 2.0]), stratum=("s", "s"), psu=("p1", "p2"),
        y_hidden=np.array([0, 1]), group_ids=("a",), y_probe=np.array([[1], [2]]),
    )
    base.update(kw)
    return FrameSurvey(**base)


def test_probe_group_rules():
    with pytest.raises(ValidationError):
        ProbeGroup("a", 10, 11)
    with pytest.raises(ValidationError):
        ProbeGroup("hidden", 10, 5)
    with pytest.raises(ValidationError):
        ProbeGroup("", 1, 1)


def test_registry_totals_and_lookup(registry):
    assert registry.total_size() == 150
    assert registry.total_on_frame(["a"]) == 80
    assert registry.subset(["b"]).group_ids == ("b",)
    assert registry.without("a").group_ids == ("b",)
    with pytest.raises(UnknownGroup):
        registry.group("zzz")


def test_registry_rejects_frame_larger_than_universe():
    with pytest.raises(ValidationError):
        KnownPopulationRegistry((), frame_size=10, universe_size=5)


def test_registry_dict_roundtrip(registry):
    assert KnownPopulationRegistry.from_dict(registry.to_dict()) == registry
    with pytest.raises(SchemaError):
        KnownPopulationRegistry.from_dict({"groups": []})


def test_nonpositive_weight_names_the_row():
    with pytest.raises(NonpositiveWeight, match=r"NonpositiveWeight\(r2\)"):
        _frame(weight=np.array([1.0, 0.0]))
    with pytest.raises(NonpositiveWeight):
        _frame(weight=np.array([1.0, np.nan]))


def test_zero_weights_allowed_for_replicates():
    s = _frame().with_weights([0.0, 3.0])
    assert s.weight.tolist() == [0.0, 3.0]
    with pytest.raises(NonpositiveWeight):
        _frame().with_weights([-1.0, 3.0])


def test_frame_shape_checks():
    with pytest.raises(ValidationError):
        _frame(y_probe=np.array([[1, 2], [3, 4]]))
    with pytest.raises(ValidationError):
        _frame(ids=("r1", "r1"))
    with pytest.raises(ValidationError):
        _frame(y_hidden=np.array([0, -1]))


def test_empty_surveys_rejected():
    with pytest.raises(EmptySample):
        _frame(ids=(), weight=np.array([]), stratum=(), psu=(), y_hidden=np.array([]),
               y_probe=np.zeros((0, 1)))


def test_arrays_are_read_only(frame):
    with pytest.raises(ValueError):
        frame.weight[0] = 5.0


def test_rows_view(frame):
    r = frame.rows[3]
    assert r.id == "r4" and r.weight == 20.0 and r.y_probe == {"a": 3, "b": 0}
    assert r.probe_membership == {"a": True, "b": True}


def test_design_inference(frame):
    assert frame.design.design_kind is DesignKind.STRATIFIED_MULTISTAGE
    assert dict(frame.design.strata) == {"s1": 2, "s2": 2}
    assert _frame().design.design_kind is DesignKind.SRS
    clustered = _frame(psu=("p1", "p1"))
    assert clustered.design.design_kind is DesignKind.STRATIFIED_MULTISTAGE


def test_visibility_cannot_exceed_ties():
    with pytest.raises(VisibilityExceedsTies, match=r"VisibilityExceedsTies\(h2\)"):
        HiddenSurvey(("h1", "h2"), np.array([1.0, 1.0]), ("a",), np.array([[2], [1]]),
                     np.array([[2], [2]]))


def test_digest_changes_with_weights(frame):
    assert frame.digest() == frame.with_weights(frame.weight).digest()
    assert frame.digest() != frame.with_weights(frame.weight * 2).digest()


def test_estimate_roundtrip():
    e = Estimate(1.5, "generalized", "abc", (1.0, 2.0), Interval(1.0, 2.0, 0.95), {"seed": 3})
    d = e.to_dict()
    assert d["schema_version"] == 1
    assert Estimate.from_dict(d) == e
    with pytest.raises(SchemaError):
        Estimate.from_dict({"value": 1})


def test_interval_validation():
    with pytest.raises(ValidationError):
        Interval(2.0, 1.0, 0.95)
    with pytest.raises(ValidationError):
        Interval(1.0, 2.0, 1.0)
