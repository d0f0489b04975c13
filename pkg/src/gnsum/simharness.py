"""Simulation experiments: generate populations, draw surveys, estimate, aggregate.

The grid experiment runs, for each parameter cell, several random networks
and many surveys per network.  Each survey pairs a simple random sample of
the frame with a degree-proportional sample of the hidden population.  The
harness keeps every survey-level row so cell summaries can be audited.

Probe groups are built per network.  Two families are used:

* ``f`` groups partition the frame at random, so their members are typical
  frame members (suitable for degrees measured against the frame);
* ``u`` groups partition the whole population at random (suitable for the
  classic basic estimator, which needs groups typical of everyone).

Because each family partitions its base set, ties to the family add up to
ties to the base set for every respondent, so the probe-alter conditions
hold exactly rather than only on average.  ``biased`` probes instead draw
members from the upper half of the degree distribution.

The coverage experiment builds a village-clustered frame and compares
interval methods on groups of known size.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Literal

import numpy as np
import numpy.typing as npt
from scipy import sparse

from .datamodel import (
    FrameSurvey,
    HiddenSurvey,
    KnownPopulationRegistry,
    ProbeGroup,
)
from .errors import InfeasibleConfiguration, ValidationError
from .estimators import basic_scaleup, generalized_scaleup, ht_total_w
from .netsim import (
    CensusQuantities,
    PopulationGraph,
    SimConfig,
    apply_transmission_error,
    census_quantities,
    generate_population,
)
from .rng import derive_seed, stream
from .sampling import (
    DrawnSample,
    relative_sample_from_hidden,
    srs_from_frame,
)
from .variance import (
    frame_replicate_weights,
    killworth_interval,
    percentile_interval,
)

BoolArray = npt.NDArray[np.bool_]
IntArray = npt.NDArray[np.int64]
FloatArray = npt.NDArray[np.float64]
ProbeDesign = Literal["partition", "uniform", "biased"]

DEFAULT_RHO = tuple(round(0.1 * k, 1) for k in range(1, 11))
DEFAULT_P_FRAME = (0.1, 0.5, 1.0)
DEFAULT_TAU = (0.1, 0.5, 1.0)
TABLE_COLUMNS = (
    "rho", "p_frame", "tau", "estimator", "mean", "sd", "se", "n_hidden",
    "bias", "predicted_bias", "bias_se",
)


# --------------------------------------------------------------------------
# Probe groups and node-level responses
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProbeAssignment:
    """Probe-group membership of every node plus the matching registry.

    ``membership[v, j]`` says whether node v belongs to ``group_ids[j]``.
    """

    group_ids: tuple[str, ...]
    membership: BoolArray
    registry: KnownPopulationRegistry

    def family(self, prefix: str) -> tuple[str, ...]:
        return tuple(g for g in self.group_ids if g.startswith(prefix))


def _split(nodes: IntArray, k: int) -> list[IntArray]:
    return [np.sort(part) for part in np.array_split(nodes, k)]


def _family_groups(
    base: IntArray, k: int, design: ProbeDesign, degree: IntArray,
    rng: np.random.Generator, share: float,
) -> list[IntArray]:
    if k < 1:
        return []
    if len(base) < k:
        raise InfeasibleConfiguration(f"cannot form {k} probe groups from {len(base)} nodes")
    if design == "partition":
        return _split(rng.permutation(base), k)
    size = max(1, round(share * len(base) / k))
    if design == "uniform":
        return [np.sort(rng.choice(base, size=size, replace=False)) for _ in range(k)]
    if design == "biased":
        order = base[np.argsort(degree[base], kind="stable")]
        top = order[len(order) // 2:]
        if len(top) < size:
            raise InfeasibleConfiguration("upper degree half is smaller than one probe group")
        return [np.sort(rng.choice(top, size=size, replace=False)) for _ in range(k)]
    raise ValidationError(f"unknown probe design {design!r}")


def assign_probe_groups(
    g: PopulationGraph,
    seed: int,
    *,
    n_frame_groups: int = 10,
    n_universe_groups: int = 10,
    design: ProbeDesign = "partition",
    share: float = 0.5,
) -> ProbeAssignment:
    """Place ``f`` groups within the frame and ``u`` groups across everyone.

    ``share`` is the fraction of the base set covered by each family when
    groups are drawn rather than partitioned.
    """
    if not 0 < share <= 1:
        raise ValidationError("share must lie in (0, 1]")
    rng = stream(seed, 20)
    frame = np.flatnonzero(g.in_frame)
    everyone = np.arange(g.n)
    groups = _family_groups(frame, n_frame_groups, design, g.degree, rng, share)
    names = [f"f{j}" for j in range(len(groups))]
    u = _family_groups(everyone, n_universe_groups, design, g.degree, rng, share)
    groups += u
    names += [f"u{j}" for j in range(len(u))]
    mem = np.zeros((g.n, len(groups)), dtype=bool)
    for j, members in enumerate(groups):
        mem[members, j] = True
    probes = tuple(
        ProbeGroup(name, int(mem[:, j].sum()), int((mem[:, j] & g.in_frame).sum()))
        for j, name in enumerate(names)
    )
    reg = KnownPopulationRegistry(probes, frame_size=g.n_frame, universe_size=g.n)
    return ProbeAssignment(tuple(names), mem, reg)


@dataclass(frozen=True, eq=False)
class NodeResponses:
    """Every node's survey answers, computed once per network.

    ``ties[v, j]``: alters of v in group j.  ``ties_frame[v, j]``: alters of
    v in group j who are on the frame.  ``vis[v, j]``: frame members of
    group j who report v as hidden.  ``reports[v]``: v's reports of hidden
    alters.
    """

    reports: IntArray
    ties: IntArray
    ties_frame: IntArray
    vis: IntArray


def _adjacency(n: int, edges: IntArray, symmetric: bool) -> sparse.csr_matrix:
    if len(edges) == 0:
        return sparse.csr_matrix((n, n), dtype=np.int64)
    rows, cols = edges[:, 0], edges[:, 1]
    if symmetric:
        rows, cols = np.concatenate([rows, cols]), np.concatenate([cols, rows])
    data = np.ones(len(rows), dtype=np.int64)
    return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))


def node_responses(g: PopulationGraph, probes: ProbeAssignment) -> NodeResponses:
    """Count ties, on-frame ties and visibility to every probe group for every node."""
    social = _adjacency(g.n, g.social_edges, symmetric=True)
    report = _adjacency(g.n, g.report_edges, symmetric=False)
    mem = probes.membership.astype(np.int64)
    mem_frame = mem * g.in_frame[:, None]
    ties = np.asarray(social @ mem)
    ties_frame = np.asarray(social @ mem_frame)
    vis = np.asarray(report.T @ mem_frame)
    reports = np.asarray(report.sum(axis=1)).ravel().astype(np.int64)
    return NodeResponses(reports, ties, ties_frame, vis)


def _node_ids(nodes: IntArray) -> tuple[str, ...]:
    return tuple(f"n{v}" for v in nodes.tolist())


def synthesize_surveys(
    g: PopulationGraph,
    frame_sample: DrawnSample,
    hidden_sample: DrawnSample | None,
    probes: ProbeAssignment,
    responses: NodeResponses | None = None,
) -> tuple[FrameSurvey, HiddenSurvey | None]:
    """Turn sampled nodes into survey records with truthful answers.

    Frame rows report hidden alters and ties to every probe group.  Hidden
    rows report on-frame ties and visibility for the groups that have frame
    members.  Hidden respondents are assumed to know exactly who knows their
    status.
    """
    if responses is None:
        responses = node_responses(g, probes)
    fs_nodes = frame_sample.member_ids
    if not g.in_frame[fs_nodes].all():
        raise ValidationError("frame sample contains nodes outside the frame")
    ids = _node_ids(fs_nodes)
    frame = FrameSurvey(
        ids=ids,
        weight=frame_sample.inclusion_weights,
        stratum=("all",) * len(ids),
        psu=ids,
        y_hidden=responses.reports[fs_nodes],
        group_ids=probes.group_ids,
        y_probe=responses.ties[fs_nodes],
        membership=probes.membership[fs_nodes],
    )
    if hidden_sample is None:
        return frame, None
    hs_nodes = hidden_sample.member_ids
    if not g.in_hidden[hs_nodes].all():
        raise ValidationError("hidden sample contains nodes outside the hidden population")
    on_frame = [j for j, gid in enumerate(probes.group_ids)
                if probes.registry.group(gid).size_on_frame > 0]
    hidden = HiddenSurvey(
        ids=_node_ids(hs_nodes),
        rel_weight=hidden_sample.inclusion_weights,
        group_ids=tuple(probes.group_ids[j] for j in on_frame),
        y_probe=responses.ties_frame[np.ix_(hs_nodes, on_frame)],
        vis=responses.vis[np.ix_(hs_nodes, on_frame)],
        weight_scale_known=not hidden_sample.relative_only,
    )
    return frame, hidden


def census_sample(g: PopulationGraph, which: Literal["frame", "hidden"]) -> DrawnSample:
    """Every frame (or hidden) node with weight one."""
    mask = g.in_frame if which == "frame" else g.in_hidden
    nodes = np.flatnonzero(mask)
    return DrawnSample(nodes, np.ones(len(nodes)), relative_only=False)


# --------------------------------------------------------------------------
# Grid experiment
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SurveyRow:
    network: int
    survey: int
    basic: float
    modified: float
    generalized: float
    n_hidden: int
    basic_estimand: float
    predicted_bias: float


@dataclass(frozen=True)
class NetworkTruth:
    network: int
    census: CensusQuantities
    predicted_bias: float


def _sd(x: FloatArray) -> float:
    return float(np.std(x, ddof=1)) if len(x) > 1 else 0.0


@dataclass(frozen=True, eq=False)
class CellResult:
    """All survey-level rows of one parameter cell plus summaries."""

    cfg: SimConfig
    rows: tuple[SurveyRow, ...]
    networks: tuple[NetworkTruth, ...]
    settings: Mapping[str, Any] = field(default_factory=dict)

    def _col(self, name: str) -> FloatArray:
        return np.array([getattr(r, name) for r in self.rows], dtype=np.float64)

    def mean(self, estimator: str) -> float:
        return float(self._col(estimator).mean())

    def sd(self, estimator: str) -> float:
        return _sd(self._col(estimator))

    def se(self, estimator: str) -> float:
        return self.sd(estimator) / math.sqrt(len(self.rows))

    @property
    def n_hidden(self) -> float:
        return float(self._col("n_hidden").mean())

    def bias(self, estimator: str) -> float:
        return float((self._col(estimator) - self._col("n_hidden")).mean())

    @property
    def predicted_bias(self) -> float:
        """Survey-weighted mean over networks of the basic estimator's predicted bias."""
        return float(self._col("predicted_bias").mean())

    @property
    def basic_bias_gap_se(self) -> float:
        """Monte Carlo SE of (observed basic bias - predicted bias).

        Computed from each survey's deviation from its own network's basic
        estimand, so between-network variation in the estimand cancels.
        """
        dev = self._col("basic") - self._col("basic_estimand")
        return _sd(dev) / math.sqrt(len(dev))

    def summary_rows(self) -> list[dict[str, Any]]:
        out = []
        for est in ("basic", "generalized"):
            out.append({
                "rho": self.cfg.rho,
                "p_frame": self.cfg.p_frame,
                "tau": self.cfg.tau,
                "estimator": est,
                "mean": self.mean(est),
                "sd": self.sd(est),
                "se": self.se(est),
                "n_hidden": self.n_hidden,
                "bias": self.bias(est),
                "predicted_bias": self.predicted_bias if est == "basic" else 0.0,
                "bias_se": self.basic_bias_gap_se if est == "basic" else self.se(est),
            })
        return out


def _run_network(
    cfg: SimConfig, k: int, n_surveys: int, frame_n: int, hidden_n: int, seed: int,
    exponent: float, probe_design: ProbeDesign,
) -> tuple[NetworkTruth, list[SurveyRow]]:
    g = generate_population(replace(cfg, seed=derive_seed(seed, 1)), replicate=k)
    if cfg.tau < 1:
        g = apply_transmission_error(g, cfg.tau, derive_seed(seed, 2, k))
    cq = census_quantities(g)
    probes = assign_probe_groups(g, derive_seed(seed, 3, k), design=probe_design)
    resp = node_responses(g, probes)
    reg = probes.registry
    f_groups, u_groups = probes.family("f"), probes.family("u")
    basic_estimand = cq.basic_estimand
    pred = basic_estimand - cq.n_h
    rows = []
    for s in range(n_surveys):
        fs = srs_from_frame(g, min(frame_n, g.n_frame), derive_seed(seed, 4, k, s))
        hs = relative_sample_from_hidden(
            g, min(hidden_n, g.n_hidden), exponent, derive_seed(seed, 5, k, s)
        )
        frame, hidden = synthesize_surveys(g, fs, hs, probes, resp)
        rows.append(SurveyRow(
            network=k,
            survey=s,
            basic=basic_scaleup(frame, reg, "classic", groups=u_groups),
            modified=basic_scaleup(frame, reg, "modified", groups=f_groups),
            generalized=generalized_scaleup(frame, hidden, reg),
            n_hidden=cq.n_h,
            basic_estimand=basic_estimand,
            predicted_bias=pred,
        ))
    return NetworkTruth(k, cq, pred), rows


def run_cell(
    cfg: SimConfig,
    n_networks: int = 3,
    n_surveys: int = 100,
    frame_n: int = 500,
    hidden_n: int = 30,
    seed: int = 0,
    *,
    hidden_exponent: float = 1.0,
    probe_design: ProbeDesign = "partition",
    threads: int = 1,
) -> CellResult:
    """Simulate one parameter cell.

    Frame samples larger than the frame are capped at the frame size (a
    census of the frame).  ``cfg.seed`` is ignored; every random choice
    derives from ``seed``.
    """
    if n_networks < 1 or n_surveys < 1:
        raise ValidationError("need at least one network and one survey")
    if frame_n < 1 or hidden_n < 1:
        raise ValidationError("sample sizes must be positive")

    def job(k: int):
        return _run_network(cfg, k, n_surveys, frame_n, hidden_n, seed,
                            hidden_exponent, probe_design)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(job, range(n_networks)))
    else:
        results = [job(k) for k in range(n_networks)]
    rows = tuple(r for _, rs in results for r in rs)
    settings = {
        "n_networks": n_networks, "n_surveys": n_surveys, "frame_n": frame_n,
        "hidden_n": hidden_n, "seed": seed, "hidden_exponent": hidden_exponent,
        "probe_design": probe_design,
    }
    return CellResult(cfg, rows, tuple(t for t, _ in results), settings)


def default_grid() -> list[dict[str, float]]:
    return [
        {"rho": r, "p_frame": p, "tau": t}
        for r in DEFAULT_RHO for p in DEFAULT_P_FRAME for t in DEFAULT_TAU
    ]


def expand_grid(spec: Mapping[str, Any]) -> tuple[SimConfig, list[dict[str, Any]]]:
    """Read a grid description.

    Accepted keys: ``base`` (SimConfig fields), ``axes`` (field -> list of
    values, expanded as a Cartesian product) and ``cells`` (explicit list of
    overrides).  With neither ``axes`` nor ``cells`` the default grid is used.
    """
    unknown = set(spec) - {"base", "axes", "cells"}
    if unknown:
        raise ValidationError(f"unknown grid key(s): {', '.join(sorted(unknown))}")
    base = SimConfig.from_dict(spec.get("base", {}))
    cells: list[dict[str, Any]] = list(spec.get("cells", []))
    axes = spec.get("axes")
    if axes:
        names = list(axes)
        grids = np.meshgrid(*[np.arange(len(axes[n])) for n in names], indexing="ij")
        for combo in zip(*[gr.ravel() for gr in grids]):
            cells.append({n: axes[n][i] for n, i in zip(names, combo)})
    if not cells:
        cells = default_grid()
    return base, cells


def run_grid(
    grid: Iterable[Mapping[str, Any]],
    base: SimConfig | None = None,
    *,
    n_networks: int = 3,
    n_surveys: int = 100,
    frame_n: int = 500,
    hidden_n: int = 30,
    seed: int = 0,
    hidden_exponent: float = 1.0,
    probe_design: ProbeDesign = "partition",
    threads: int = 1,
) -> tuple[list[CellResult], list[dict[str, Any]]]:
    """Run every cell; cell i uses the seed derived from ``(seed, i)``.

    Returns the cell results and a long-format table with one row per
    cell and estimator.
    """
    base = base if base is not None else SimConfig()
    cells = [replace(base, **dict(o)) for o in grid]

    def job(i: int) -> CellResult:
        return run_cell(cells[i], n_networks, n_surveys, frame_n, hidden_n,
                        derive_seed(seed, i), hidden_exponent=hidden_exponent,
                        probe_design=probe_design)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(job, range(len(cells))))
    else:
        results = [job(i) for i in range(len(cells))]
    table = [row for r in results for row in r.summary_rows()]
    return results, table


def write_table(rows: Sequence[Mapping[str, Any]], path: str | Path,
                columns: Sequence[str] | None = None) -> None:
    cols = list(columns) if columns is not None else (list(rows[0]) if rows else [])
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({c: repr(v) if isinstance(v, float) else v for c, v in r.items()})


# --------------------------------------------------------------------------
# Interval coverage on a clustered frame
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class VillageDesign:
    """A stratified two-stage design over equal-sized villages.

    Each stratum holds ``villages_per_stratum`` villages.  Hidden-population
    members are packed into as few villages as possible, at most one per
    stratum, so village composition (and with it reporting patterns) varies
    within strata.
    """

    n_strata: int = 10
    villages_per_stratum: int = 5
    psus_per_stratum: int = 2
    per_psu: int = 25


@dataclass(frozen=True)
class CoverageResult:
    coverage: Mapping[str, float]
    per_group: Mapping[str, Mapping[str, float]]
    mean_width: Mapping[str, float]
    group_sizes: Mapping[str, int]
    n_surveys: int
    replicates: int
    settings: Mapping[str, Any]


def _villages(g: PopulationGraph, design: VillageDesign, rng: np.random.Generator
              ) -> list[list[IntArray]]:
    """Assign frame nodes to villages: strata -> villages -> node arrays.

    Hidden members fill whole villages first, and those villages go to
    different strata, so a stratum holds at most one mostly-hidden village.
    """
    frame = np.flatnonzero(g.in_frame)
    n_v = design.n_strata * design.villages_per_stratum
    if len(frame) % n_v:
        raise InfeasibleConfiguration(f"{len(frame)} frame members do not split into {n_v} villages")
    size = len(frame) // n_v
    if size < design.per_psu:
        raise InfeasibleConfiguration("villages are smaller than the within-village sample")
    if design.psus_per_stratum > design.villages_per_stratum or design.psus_per_stratum < 2:
        raise InfeasibleConfiguration("need 2 <= sampled villages <= villages per stratum")
    hid = rng.permutation(frame[g.in_hidden[frame]])
    rest = rng.permutation(frame[~g.in_hidden[frame]])
    if len(hid) > design.n_strata * size:
        raise InfeasibleConfiguration("too many hidden members for one village per stratum")
    ordered = np.concatenate([hid, rest])
    chunks = [np.sort(ordered[k * size:(k + 1) * size]) for k in range(n_v)]
    # chunk k goes to stratum k % n_strata, so the leading (hidden) chunks spread out
    strata: list[list[IntArray]] = [[] for _ in range(design.n_strata)]
    for k, chunk in enumerate(chunks):
        strata[k % design.n_strata].append(chunk)
    return strata


def _known_groups(g: PopulationGraph, sizes: Sequence[int], hidden_shares: Sequence[float],
                  rng: np.random.Generator) -> list[IntArray]:
    hid = list(rng.permutation(np.flatnonzero(g.in_hidden)))
    rest = list(rng.permutation(np.flatnonzero(~g.in_hidden)))
    groups = []
    for m, share in zip(sizes, hidden_shares):
        k = round(m * share)
        if k > len(hid) or m - k > len(rest):
            raise InfeasibleConfiguration("known groups need more nodes than available")
        groups.append(np.sort(np.array(hid[:k] + rest[:m - k], dtype=np.int64)))
        hid, rest = hid[k:], rest[m - k:]
    return groups


def coverage_study(
    cfg: SimConfig,
    n_surveys: int = 200,
    B: int = 500,
    seed: int = 0,
    *,
    design: VillageDesign = VillageDesign(),
    group_sizes: Sequence[int] = (250,) * 6,
    hidden_shares: Sequence[float] = (0.0, 0.05, 0.1, 0.2, 0.3, 0.4),
    level: float = 0.95,
) -> CoverageResult:
    """Coverage of Killworth, simple-bootstrap and rescaled-bootstrap intervals.

    Each known group is estimated in turn from the others with the classic
    basic estimator, and its interval is checked against its true size.
    Groups differ in how many hidden-population members they contain, so
    groups that mix poorly with the rest of the population are harder to
    estimate.  The defaults need at least 263 hidden members (for example
    ``n=2000`` with ``p_hidden=0.15``).
    """
    if len(group_sizes) != len(hidden_shares) or len(group_sizes) < 2:
        raise ValidationError("need at least two known groups with matching shares")
    g = generate_population(replace(cfg, seed=derive_seed(seed, 1)))
    if cfg.tau < 1:
        g = apply_transmission_error(g, cfg.tau, derive_seed(seed, 2))
    rng = stream(seed, 30)
    strata = _villages(g, design, rng)
    groups = _known_groups(g, group_sizes, hidden_shares, rng)
    social = _adjacency(g.n, g.social_edges, symmetric=True)
    mem = np.zeros((g.n, len(groups)), dtype=np.int64)
    for j, members in enumerate(groups):
        mem[members, j] = 1
    ties = np.asarray(social @ mem)
    sizes = np.array([len(m) for m in groups], dtype=np.float64)
    n_groups = len(groups)
    methods = ("killworth", "simple", "rescaled")
    hits = {m: np.zeros(n_groups) for m in methods}
    widths = {m: 0.0 for m in methods}
    v_size = len(strata[0][0])
    for s in range(n_surveys):
        srng = stream(seed, 31, s)
        nodes, weights, strat, psu = [], [], [], []
        for h, villages in enumerate(strata):
            picks = srng.choice(len(villages), size=design.psus_per_stratum, replace=False)
            for v in sorted(picks.tolist()):
                chosen = srng.choice(villages[v], size=design.per_psu, replace=False)
                nodes.extend(np.sort(chosen).tolist())
                w = (len(villages) / design.psus_per_stratum) * (v_size / design.per_psu)
                weights.extend([w] * design.per_psu)
                strat.extend([f"s{h}"] * design.per_psu)
                psu.extend([f"s{h}v{v}"] * design.per_psu)
        nodes_a = np.array(nodes, dtype=np.int64)
        y = ties[nodes_a].astype(np.float64)
        frame = FrameSurvey(
            ids=_node_ids(nodes_a), weight=np.array(weights), stratum=strat, psu=psu,
            y_hidden=np.zeros(len(nodes_a), dtype=np.int64),
            group_ids=tuple(f"k{j}" for j in range(n_groups)), y_probe=ties[nodes_a],
        )
        reps = {
            "simple": frame_replicate_weights(frame, "simple", B, derive_seed(seed, 32, s)),
            "rescaled": frame_replicate_weights(frame, "rescaled", B, derive_seed(seed, 33, s)),
        }
        for j in range(n_groups):
            others = [i for i in range(n_groups) if i != j]
            n_rest = sizes[others].sum()
            y_rest = y[:, others].sum(axis=1)
            point = ht_total_w(frame.weight, y[:, j]) / ht_total_w(frame.weight, y_rest) * n_rest
            d_hat = y_rest * g.n / n_rest
            kw = killworth_interval(point, float(d_hat.sum()), g.n, level)
            intervals = {"killworth": (kw.low, kw.high)}
            for name, W in reps.items():
                num = W @ y[:, j]
                den = W @ y_rest
                ok = den > 0
                intervals[name] = percentile_interval(num[ok] / den[ok] * n_rest, level)
            for name, (lo, hi) in intervals.items():
                hits[name][j] += lo <= sizes[j] <= hi
                widths[name] += hi - lo
    total = n_surveys * n_groups
    return CoverageResult(
        coverage={m: float(hits[m].sum() / total) for m in methods},
        per_group={m: {f"k{j}": float(hits[m][j] / n_surveys) for j in range(n_groups)}
                   for m in methods},
        mean_width={m: widths[m] / total for m in methods},
        group_sizes={f"k{j}": int(sizes[j]) for j in range(n_groups)},
        n_surveys=n_surveys,
        replicates=B,
        settings={"cfg": cfg.to_dict(), "seed": seed, "level": level,
                  "design": design.__dict__, "hidden_shares": list(hidden_shares)},
    )
