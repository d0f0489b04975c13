import csv

import numpy as np
import pytest

from gnsum.errors import InfeasibleConfiguration, ValidationError
from gnsum.estimators import (
    basic_scaleup,
    degree_ratio,
    generalized_scaleup,
    probe_alter_check,
    true_positive_rate,
    visibility_mean,
)
from gnsum.netsim import SimConfig, apply_transmission_error, census_quantities, generate_population
from gnsum.rng import derive_seed
from gnsum.sampling import DrawnSample
from gnsum.simharness import (
    VillageDesign,
    assign_probe_groups,
    census_sample,
    coverage_study,
    default_grid,
    expand_grid,
    run_cell,
    run_grid,
    synthesize_surveys,
    write_table,
)


@pytest.fixture(scope="module")
def degraded():
    g = generate_population(SimConfig(n=1200, p_frame=0.6, p_hidden=0.05, rho=0.5, seed=4))
    return apply_transmission_error(g, 0.7, rng_seed=2)


def _census_surveys(g, probes):
    return synthesize_surveys(g, census_sample(g, "frame"), census_sample(g, "hidden"), probes)


def test_census_synthesis_reproduces_census_quantities(degraded):
    g = degraded
    cq = census_quantities(g)
    probes = assign_probe_groups(g, seed=1)
    f, h = _census_surveys(g, probes)
    reg = probes.registry
    fg, ug = probes.family("f"), probes.family("u")
    assert basic_scaleup(f, reg, "classic", groups=ug) == pytest.approx(cq.basic_estimand, rel=1e-12)
    assert basic_scaleup(f, reg, "modified", groups=fg) == pytest.approx(
        cq.modified_basic_estimand, rel=1e-12)
    assert generalized_scaleup(f, h, reg) == pytest.approx(cq.n_h, rel=1e-12)
    assert visibility_mean(h, reg) == pytest.approx(cq.v_bar_HF, rel=1e-12)
    assert degree_ratio(h, f, reg, groups=fg) == pytest.approx(cq.delta, rel=1e-12)
    assert true_positive_rate(h) == pytest.approx(cq.tau, rel=1e-12)


def test_toy_graph_person_five_rows(toy_graph):
    probes = assign_probe_groups(toy_graph, seed=3, n_frame_groups=2, n_universe_groups=2)
    f, h = _census_surveys(toy_graph, probes)
    row = f.rows[f.ids.index("n5")]
    assert row.y_hidden == 1
    hrow = h.rows[h.ids.index("n5")]
    assert sum(v for gid, v in hrow.vis_probe_on_frame.items() if gid.startswith("f")) == 3


def test_perfect_reporting_gives_visibility_equal_to_ties():
    g = generate_population(SimConfig(n=600, p_frame=0.7, p_hidden=0.05, seed=9))
    f, h = _census_surveys(g, assign_probe_groups(g, seed=2))
    assert np.array_equal(h.vis, h.y_probe)


def test_partition_probes_satisfy_probe_alter_condition(degraded):
    probes = assign_probe_groups(degraded, seed=5)
    f, _ = synthesize_surveys(degraded, census_sample(degraded, "frame"), None, probes)
    fcols = [f.group_ids.index(x) for x in probes.family("f")]
    f_only = type(f)(f.ids, f.weight, f.stratum, f.psu, f.y_hidden,
                     tuple(f.group_ids[j] for j in fcols), f.y_probe[:, fcols],
                     f.membership[:, fcols])
    assert probe_alter_check(f_only).difference == pytest.approx(0.0, abs=1e-12)


def test_probe_designs(degraded):
    g = degraded
    part = assign_probe_groups(g, seed=1)
    assert part.registry.total_size(part.family("f")) == g.n_frame
    assert part.registry.total_size(part.family("u")) == g.n
    assert part.membership[:, :10].sum(axis=1).tolist() == g.in_frame.astype(int).tolist()
    uni = assign_probe_groups(g, seed=1, design="uniform", share=0.5)
    assert all(grp.size_total == 36 for grp in uni.registry.groups[:10])
    biased = assign_probe_groups(g, seed=1, design="biased")
    deg = g.degree
    mean_deg = lambda p: deg[p.membership[:, 0]].mean()
    assert mean_deg(biased) > mean_deg(part)
    with pytest.raises(ValidationError):
        assign_probe_groups(g, seed=1, design="nope")


def test_samples_outside_population_rejected(degraded):
    g = degraded
    probes = assign_probe_groups(g, seed=1)
    off_frame = np.flatnonzero(~g.in_frame)[:3]
    not_hidden = np.flatnonzero(~g.in_hidden)[:3]
    with pytest.raises(ValidationError):
        synthesize_surveys(g, DrawnSample(off_frame, np.ones(3), False), None, probes)
    with pytest.raises(ValidationError):
        synthesize_surveys(g, census_sample(g, "frame"),
                           DrawnSample(not_hidden, np.ones(3), True), probes)


def test_run_cell_shapes_and_truth():
    cfg = SimConfig(n=800, p_frame=0.5, p_hidden=0.05, rho=0.5, tau=0.5)
    r = run_cell(cfg, n_networks=2, n_surveys=5, frame_n=100, hidden_n=10, seed=3)
    assert len(r.rows) == 10 and len(r.networks) == 2
    for t in r.networks:
        assert t.predicted_bias == pytest.approx(t.census.basic_estimand - t.census.n_h)
    assert r.n_hidden == 40
    rows = r.summary_rows()
    assert [x["estimator"] for x in rows] == ["basic", "generalized"]
    assert rows[0]["bias"] == pytest.approx(r.mean("basic") - 40)


def test_run_cell_is_thread_invariant():
    cfg = SimConfig(n=600, p_hidden=0.05, rho=0.7)
    a = run_cell(cfg, 3, 4, 80, 10, seed=8)
    b = run_cell(cfg, 3, 4, 80, 10, seed=8, threads=3)
    assert a.rows == b.rows


def test_single_cell_grid_equals_run_cell():
    base = SimConfig(n=600, p_hidden=0.05)
    results, table = run_grid([{"rho": 0.5}], base, n_networks=1, n_surveys=3, frame_n=60,
                              hidden_n=8, seed=21)
    direct = run_cell(SimConfig(n=600, p_hidden=0.05, rho=0.5), 1, 3, 60, 8,
                      seed=derive_seed(21, 0))
    assert results[0].rows == direct.rows
    assert len(table) == 2


def test_grid_row_count_and_csv(tmp_path):
    cells = [{"rho": r} for r in (0.5, 1.0)] + [{"tau": 0.5}]
    _, table = run_grid(cells, SimConfig(n=500, p_hidden=0.05), n_networks=1, n_surveys=2,
                        frame_n=50, hidden_n=5, seed=1)
    assert len(table) == 2 * len(cells)
    path = tmp_path / "t.csv"
    write_table(table, path)
    back = list(csv.DictReader(path.open()))
    assert float(back[0]["mean"]) == table[0]["mean"]


def test_expand_grid():
    base, cells = expand_grid({"base": {"n": 900}, "axes": {"rho": [0.1, 0.2], "tau": [1, 0.5]}})
    assert base.n == 900 and len(cells) == 4
    assert cells[1] == {"rho": 0.1, "tau": 0.5}
    assert len(expand_grid({})[1]) == len(default_grid()) == 90
    with pytest.raises(ValidationError):
        expand_grid({"axis": {}})


def test_coverage_study_small():
    cfg = SimConfig(n=500, p_hidden=0.1, rho=0.3)
    r = coverage_study(cfg, n_surveys=4, B=50, seed=2, design=VillageDesign(per_psu=5),
                       group_sizes=(50, 50, 50), hidden_shares=(0.0, 0.1, 0.2))
    assert set(r.coverage) == {"killworth", "simple", "rescaled"}
    assert all(0 <= v <= 1 for v in r.coverage.values())
    assert r.group_sizes == {"k0": 50, "k1": 50, "k2": 50}


def test_coverage_study_infeasible_layout():
    with pytest.raises(InfeasibleConfiguration):
        coverage_study(SimConfig(n=510, p_hidden=0.1), n_surveys=1, B=10, seed=1,
                       group_sizes=(10, 10), hidden_shares=(0.0, 0.1))
