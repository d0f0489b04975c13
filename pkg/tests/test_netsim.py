import numpy as np
import pytest

from gnsum.errors import InfeasibleConfiguration, SchemaError, ValidationError
from gnsum.netsim import (
    SimConfig,
    _triangle_pairs,
    apply_transmission_error,
    census_quantities,
    from_edges,
    generate_population,
    load_sim_config,
    predicted_basic_bias,
    round_half_up,
)


def test_toy_graph_person_five(toy_graph):
    g = toy_graph
    assert g.out_reports(g.in_frame, g.in_hidden)[5] == 1
    assert g.in_reports(g.in_frame, g.in_hidden)[5] == 3
    assert g.in_reports()[5] == 4  # person 6 is off the frame but also reports 5


def test_toy_graph_census_by_hand(toy_graph):
    cq = census_quantities(toy_graph)
    assert (cq.n, cq.n_f, cq.n_h) == (8, 5, 2)
    assert (cq.y_FH, cq.v_HF) == (5, 5)
    assert (cq.d_FF, cq.d_UF, cq.d_FU, cq.d_HF) == (8, 12, 12, 5)
    assert cq.d_bar_FF == pytest.approx(1.6)
    assert cq.d_bar_UF == pytest.approx(1.5)
    assert cq.phi == pytest.approx(16 / 15)
    assert cq.delta == pytest.approx(1.5625)
    assert cq.tau == 1.0
    assert cq.basic_estimand == pytest.approx(10 / 3)
    assert cq.modified_basic_estimand == pytest.approx(3.125)
    assert cq.generalized_estimand == 2.0
    assert predicted_basic_bias(cq) == pytest.approx(10 / 3 - 2)


def test_mixing_matrix_entries():
    m = SimConfig(zeta=0.05, xi=0.4, rho=0.5).mixing_matrix()
    # block order FH, F~H, ~FH, ~F~H
    assert m[0, 0] == pytest.approx(0.05)
    assert m[0, 1] == pytest.approx(0.05 * 0.5)
    assert m[0, 2] == pytest.approx(0.05 * 0.4)
    assert m[0, 3] == pytest.approx(0.05 * 0.4 * 0.5)
    assert np.allclose(m, m.T)


def test_block_sizes_and_infeasible():
    assert SimConfig(n=5000, p_frame=0.5, p_hidden=0.03).block_sizes() == (150, 2350, 0, 2500)
    with pytest.raises(InfeasibleConfiguration):
        SimConfig(n=100, p_frame=0.01, p_hidden=0.5).block_sizes()


def test_round_half_up():
    assert [round_half_up(x) for x in (0.5, 1.5, 2.5, 2.4999)] == [1, 2, 3, 2]


@pytest.mark.parametrize("bad", [{"rho": 0}, {"tau": 1.5}, {"p_hidden": 1.0}, {"n": 0}])
def test_config_validation(bad):
    with pytest.raises(ValidationError):
        SimConfig(**bad)


def test_config_roundtrip_and_unknown_field(tmp_path):
    cfg = SimConfig(rho=0.3, seed=5)
    assert SimConfig.from_dict(cfg.to_dict()) == cfg
    p = tmp_path / "c.json"
    p.write_text('{"rho": 0.3, "bogus": 1}')
    with pytest.raises(SchemaError):
        load_sim_config(p)


def test_triangle_pairs_exhaustive():
    for m in (2, 3, 10, 57):
        k = np.arange(m * (m - 1) // 2)
        i, j = _triangle_pairs(k, m)
        expected = [(a, b) for a in range(m) for b in range(a + 1, m)]
        assert list(zip(i.tolist(), j.tolist())) == expected


def test_generation_is_deterministic_and_seeded():
    cfg = SimConfig(n=400, p_hidden=0.05, rho=0.5, seed=3)
    a, b = generate_population(cfg), generate_population(cfg)
    assert np.array_equal(a.social_edges, b.social_edges)
    c = generate_population(cfg, replicate=1)
    assert not np.array_equal(a.social_edges, c.social_edges)


def test_generated_graph_is_simple():
    g = generate_population(SimConfig(n=600, p_hidden=0.05, p_frame=0.7, seed=1))
    e = g.social_edges
    assert (e[:, 0] < e[:, 1]).all()
    assert len(np.unique(e, axis=0)) == len(e)
    assert g.n_frame == 420 and g.n_hidden == 30


def test_edge_density_matches_mixing_matrix():
    cfg = SimConfig(n=3000, p_frame=0.5, p_hidden=0.1, p_frame_given_hidden=0.5,
                    zeta=0.05, xi=0.4, rho=0.5, seed=2)
    g = generate_population(cfg)
    block = (~g.in_frame).astype(int) * 2 + (~g.in_hidden).astype(int)
    sizes = np.bincount(block, minlength=4)
    m = cfg.mixing_matrix()
    e = g.social_edges
    counts = np.zeros((4, 4))
    np.add.at(counts, (block[e[:, 0]], block[e[:, 1]]), 1)
    counts = counts + counts.T - np.diag(np.diag(counts))
    for a in range(4):
        for b in range(a, 4):
            pairs = sizes[a] * (sizes[a] - 1) / 2 if a == b else sizes[a] * sizes[b]
            expected = pairs * m[a, b]
            assert abs(counts[a, b] - expected) < 5 * np.sqrt(expected)


def test_reports_mirror_ties_into_hidden():
    g = generate_population(SimConfig(n=500, p_hidden=0.1, seed=4))
    r = g.report_edges
    assert g.in_hidden[r[:, 1]].all()
    assert len(r) == int(g.ties_to(g.in_hidden).sum())


def test_transmission_error_exact_count_and_nesting():
    g = generate_population(SimConfig(n=800, p_hidden=0.05, seed=6))
    fh = int(g.out_reports(g.in_frame, g.in_hidden).sum())
    sets = {}
    for tau in (1.0, 0.7, 0.3):
        gt = apply_transmission_error(g, tau, rng_seed=9)
        kept = int(gt.out_reports(gt.in_frame, gt.in_hidden).sum())
        assert kept == fh - round_half_up((1 - tau) * fh)
        sets[tau] = {tuple(x) for x in gt.report_edges.tolist()}
    assert sets[0.3] <= sets[0.7] <= sets[1.0]


def test_census_tau_tracks_transmission():
    g = apply_transmission_error(generate_population(SimConfig(n=1000, seed=8)), 0.5, 1)
    cq = census_quantities(g)
    assert cq.tau == pytest.approx(0.5, abs=0.01)
    assert cq.y_FH == cq.v_HF


def test_relabel_preserves_census(toy_graph):
    perm = np.array([3, 7, 0, 5, 1, 6, 2, 4])
    a, b = census_quantities(toy_graph), census_quantities(toy_graph.relabel(perm))
    assert a == b


def test_edges_out_of_range_rejected():
    with pytest.raises(ValidationError):
        from_edges(3, [True] * 3, [False, False, True], [[0, 3]])


def test_dump_writes_edge_list(tmp_path, toy_graph):
    toy_graph.dump(tmp_path / "e.txt", tmp_path / "n.csv")
    lines = (tmp_path / "e.txt").read_text().splitlines()
    assert len(lines) == 9 and lines[0] == "0 4"
    assert (tmp_path / "n.csv").read_text().splitlines()[6] == "5,1,1"
