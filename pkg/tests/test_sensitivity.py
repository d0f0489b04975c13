import itertools

import numpy as np
import pytest

from gnsum.errors import ValidationError
from gnsum.netsim import census_quantities
from gnsum.sensitivity import (
    GRID_ROW_CAP,
    NONSAMPLING_ROWS,
    DecompositionMismatch,
    RatioBiasInputs,
    RatioStructure,
    SensitivityScenario,
    adjust_generalized,
    adjust_modified_basic,
    decompose,
    double_ratio_bias,
    generalized_multiplier,
    k_index,
    modified_basic_multiplier,
    nonsampling_multiplier,
    scenario_grid,
    srs_ratio_bias_inputs,
)


def test_decompose_toy_graph(toy_graph):
    d = decompose(census_quantities(toy_graph))
    assert d.basic_estimand == pytest.approx(10 / 3)
    assert d.product == pytest.approx(5 / 3)
    assert d.generalized_estimand == 2.0


def test_decompose_detects_inconsistent_factors(toy_graph):
    cq = census_quantities(toy_graph).with_(tau=0.9)
    with pytest.raises(DecompositionMismatch):
        decompose(cq)


def test_k_index_by_hand():
    # means 2 and 2, population covariance 1
    assert k_index([1, 2, 3], [1, 1, 4]) == pytest.approx(0.25)
    assert k_index([1, 2, 3], [3, 3, 12]) == pytest.approx(0.25)
    assert k_index([1, 2, 3], [2, 2, 2]) == 0.0


def test_neutral_scenario_has_unit_multipliers():
    sc = SensitivityScenario()
    assert generalized_multiplier(sc) == 1.0
    assert modified_basic_multiplier(sc) == 1.0


def test_generalized_multiplier_by_hand():
    sc = SensitivityScenario(c1=1.2, c2=1.1, c3=0.9, eps_bar=1.1, k_reports=0.1,
                             k_hidden=-0.05, eta=0.9)
    expected = 0.95 / (1.1 * 1.1) * (0.9 * 1.1 / 1.2) * 0.9
    assert adjust_generalized(100.0, sc) == pytest.approx(100 * expected)


def test_modified_multiplier_ignores_eps_bar():
    sc = SensitivityScenario(c1=0.8, eps_bar=1.7, k_reports=0.2, k_probes=-0.1,
                             delta=0.5, tau=0.8)
    expected = 0.9 / 1.2 * (1 / 0.8) / (0.5 * 0.8)
    assert adjust_modified_basic(10.0, sc) == pytest.approx(10 * expected)


@pytest.mark.parametrize("bad", [{"c1": 0}, {"tau": 1.5}, {"eta": 0}, {"k_reports": -1.0}])
def test_scenario_validation(bad):
    with pytest.raises(ValidationError):
        SensitivityScenario(**bad)


def test_scenario_from_dict():
    assert SensitivityScenario.from_dict({"c1": "2"}).c1 == 2.0
    with pytest.raises(ValidationError):
        SensitivityScenario.from_dict({"c9": 1})


def test_nonsampling_table():
    c1, c2, c3 = 2.0, 3.0, 5.0
    expected = {
        "d_bar_FF": 7.5, "d_bar_UF": 7.5, "phi": 2 / 3, "v_bar_HF": 7.5,
        "delta": 2 / 3, "tau": 2 / 3, "generalized": 0.5, "adjusted": 1 / 30,
    }
    assert set(NONSAMPLING_ROWS) == set(expected)
    for row, val in expected.items():
        assert nonsampling_multiplier(row, c1, c2, c3) == pytest.approx(val)
    assert all(nonsampling_multiplier(r) == 1.0 for r in NONSAMPLING_ROWS)
    with pytest.raises(ValidationError):
        nonsampling_multiplier("bogus")


def test_double_ratio_full_by_hand():
    inp = RatioBiasInputs(0.1, 0.1, 0.1, 0.1, cor={k: 0.0 for k in itertools.combinations(
        ("x0", "x1", "y0", "y1"), 2)})
    assert double_ratio_bias(inp) == pytest.approx(0.02)
    cor = dict(inp.cor)
    cor[("y0", "x0")] = 0.5
    assert double_ratio_bias(RatioBiasInputs(0.1, 0.1, 0.1, 0.1, cor=cor)) == pytest.approx(0.015)


def test_double_ratio_structures_drop_terms():
    cor = {("x0", "y0"): 0.5, ("x0", "y1"): 0.9, ("y0", "y1"): 0.9}
    gen = RatioBiasInputs(cv_x0=0.2, cv_y0=0.1, cv_y1=0.3, cor=cor,
                          structure=RatioStructure.GENERALIZED)
    # y1 is from the frame sample, x0 and y0 from the hidden sample
    assert double_ratio_bias(gen) == pytest.approx(0.1**2 - 0.5 * 0.2 * 0.1)
    tau = RatioBiasInputs(cv_x0=0.2, cv_x1=0.1, cor={("x0", "x1"): 0.8},
                          structure=RatioStructure.TAU)
    assert double_ratio_bias(tau) == pytest.approx(0.1**2 - 0.8 * 0.2 * 0.1)


def test_double_ratio_missing_correlation():
    with pytest.raises(ValidationError, match="correlation"):
        double_ratio_bias(RatioBiasInputs(0.1, 0.1, 0.1, 0.1))


def test_srs_inputs_use_finite_population_correction():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    inp = srs_ratio_bias_inputs({"y0": x, "x0": 2 * x}, n=2, structure=RatioStructure.PHI)
    # S^2 = 5/3, kappa = 1/2 - 1/4, mean 2.5
    assert inp.cv_y0 == pytest.approx(np.sqrt(0.25 * 5 / 3) / 2.5)
    assert inp.cor[("x0", "y0")] == pytest.approx(1.0)
    assert double_ratio_bias(inp) == pytest.approx(0.0)


def test_scenario_grid():
    rows = scenario_grid({"c1": [0.8, 1.0, 1.2], "tau": [0.5, 1.0]})
    assert len(rows) == 6
    assert rows[0] == SensitivityScenario(c1=0.8, tau=0.5)
    assert scenario_grid({}) == [SensitivityScenario()]
    with pytest.raises(ValidationError):
        scenario_grid({"zeta": [1]})


def test_scenario_grid_cap():
    big = list(np.linspace(0.5, 1.5, 1001))
    with pytest.raises(ValidationError, match="cap"):
        scenario_grid({"c1": big, "c2": big})
    assert GRID_ROW_CAP == 1_000_000
