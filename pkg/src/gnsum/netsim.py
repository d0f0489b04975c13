"""Synthetic populations from a four-block stochastic block model.

Nodes are split into the blocks F&H, F&~H, ~F&H and ~F&~H.  Two nodes are
tied with probability ``zeta``, multiplied by ``xi`` when they differ in
frame membership and by ``rho`` when they differ in hidden membership.
Reports are directed: ``i -> j`` means i would count j as hidden.  Every
social tie that touches a hidden node produces a report in that direction,
so there are no false positives; :func:`apply_transmission_error` then drops
a controlled share of frame-to-hidden reports.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import numpy.typing as npt

from .errors import DegenerateDenominator, InfeasibleConfiguration, SchemaError, ValidationError
from .rng import stream

IntArray = npt.NDArray[np.int64]
BoolArray = npt.NDArray[np.bool_]

# Block order used throughout: F&H, F&~H, ~F&H, ~F&~H.
BLOCK_LABELS = ("FH", "F~H", "~FH", "~F~H")


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one simulated population.

    ``p_frame`` and ``p_hidden`` are the shares of nodes on the frame and in
    the hidden population; ``p_frame_given_hidden`` is the share of hidden
    nodes that are also on the frame.
    """

    n: int = 5000
    p_frame: float = 1.0
    p_hidden: float = 0.03
    p_frame_given_hidden: float = 1.0
    zeta: float = 0.05
    xi: float = 0.4
    rho: float = 1.0
    tau: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n <= 0:
            raise ValidationError("n must be positive")
        if not 0 < self.p_frame <= 1:
            raise ValidationError("p_frame must lie in (0, 1]")
        if not 0 < self.p_hidden < 1:
            raise ValidationError("p_hidden must lie in (0, 1)")
        if not 0 <= self.p_frame_given_hidden <= 1:
            raise ValidationError("p_frame_given_hidden must lie in [0, 1]")
        for name in ("zeta", "xi", "rho", "tau"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValidationError(f"{name} must lie in (0, 1]")
        if self.zeta * max(1.0, self.xi, self.rho, self.xi * self.rho) > 1:
            raise ValidationError("zeta times the mixing multipliers exceeds 1")
        if self.seed < 0:
            raise ValidationError("seed must be non-negative")

    def mixing_matrix(self) -> npt.NDArray[np.float64]:
        """Tie probability between each pair of blocks."""
        frame = np.array([1, 1, 0, 0])
        hidden = np.array([1, 0, 1, 0])
        m = np.full((4, 4), self.zeta)
        m *= np.where(frame[:, None] != frame[None, :], self.xi, 1.0)
        m *= np.where(hidden[:, None] != hidden[None, :], self.rho, 1.0)
        return m

    def block_sizes(self) -> tuple[int, int, int, int]:
        n_h = round_half_up(self.n * self.p_hidden)
        n_hf = round_half_up(n_h * self.p_frame_given_hidden)
        n_f = round_half_up(self.n * self.p_frame)
        sizes = (n_hf, n_f - n_hf, n_h - n_hf, self.n - n_f - (n_h - n_hf))
        if min(sizes) < 0:
            raise InfeasibleConfiguration(
                f"cannot place {n_h} hidden nodes ({n_hf} on frame) in a frame of {n_f} "
                f"out of {self.n}"
            )
        if n_h == 0:
            raise InfeasibleConfiguration("rounded hidden population is empty")
        return sizes

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> SimConfig:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise SchemaError(f"unknown SimConfig field(s): {', '.join(sorted(unknown))}")
        return cls(**dict(d))


def load_sim_config(path: str | Path) -> SimConfig:
    try:
        return SimConfig.from_dict(json.loads(Path(path).read_text()))
    except FileNotFoundError:
        raise SchemaError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None


@dataclass(frozen=True, eq=False)
class PopulationGraph:
    """A population with its social network and its reporting network.

    ``social_edges`` holds undirected ties as rows ``(u, v)`` with ``u < v``;
    ``report_edges`` holds directed reports ``(i, j)``.  Both are sorted
    lexicographically and read-only.
    """

    n: int
    in_frame: BoolArray
    in_hidden: BoolArray
    social_edges: IntArray
    report_edges: IntArray

    def __post_init__(self) -> None:
        for name in ("in_frame", "in_hidden"):
            a = np.ascontiguousarray(getattr(self, name), dtype=bool)
            if a.shape != (self.n,):
                raise ValidationError(f"{name} must have one entry per node")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        for name in ("social_edges", "report_edges"):
            a = np.asarray(getattr(self, name), dtype=np.int64).reshape(-1, 2)
            if len(a):
                order = np.lexsort((a[:, 1], a[:, 0]))
                a = a[order]
            if len(a) and (a.min() < 0 or a.max() >= self.n):
                raise ValidationError(f"{name} refer to nodes outside 0..{self.n - 1}")
            a = np.ascontiguousarray(a)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if len(self.social_edges) and (self.social_edges[:, 0] >= self.social_edges[:, 1]).any():
            raise ValidationError("social edges must be stored as (u, v) with u < v (no self-ties)")

    @property
    def n_frame(self) -> int:
        return int(self.in_frame.sum())

    @property
    def n_hidden(self) -> int:
        return int(self.in_hidden.sum())

    @cached_property
    def degree(self) -> IntArray:
        e = self.social_edges
        return np.bincount(e.ravel(), minlength=self.n).astype(np.int64)

    def ties_to(self, mask: BoolArray) -> IntArray:
        """Per-node count of social ties to nodes selected by ``mask``."""
        e = self.social_edges
        out = np.bincount(e[:, 0], weights=mask[e[:, 1]], minlength=self.n)
        out += np.bincount(e[:, 1], weights=mask[e[:, 0]], minlength=self.n)
        return out.astype(np.int64)

    def out_reports(self, source_mask: BoolArray | None = None,
                    target_mask: BoolArray | None = None) -> IntArray:
        """Per-node count of reports it makes, optionally filtered."""
        r = self._filter_reports(source_mask, target_mask)
        return np.bincount(r[:, 0], minlength=self.n).astype(np.int64)

    def in_reports(self, source_mask: BoolArray | None = None,
                   target_mask: BoolArray | None = None) -> IntArray:
        """Per-node count of reports made about it, optionally filtered."""
        r = self._filter_reports(source_mask, target_mask)
        return np.bincount(r[:, 1], minlength=self.n).astype(np.int64)

    def _filter_reports(self, source_mask: BoolArray | None,
                        target_mask: BoolArray | None) -> IntArray:
        r = self.report_edges
        keep = np.ones(len(r), dtype=bool)
        if source_mask is not None:
            keep &= source_mask[r[:, 0]]
        if target_mask is not None:
            keep &= target_mask[r[:, 1]]
        return r[keep]

    def relabel(self, perm: npt.ArrayLike) -> PopulationGraph:
        """Graph with node ``i`` renamed ``perm[i]``."""
        p = np.asarray(perm, dtype=np.int64)
        inv = np.empty_like(p)
        inv[p] = np.arange(self.n)
        se = p[self.social_edges]
        se = np.sort(se, axis=1)
        return PopulationGraph(
            self.n, self.in_frame[inv], self.in_hidden[inv], se, p[self.report_edges]
        )

    def dump(self, edge_path: str | Path, node_path: str | Path) -> None:
        """Write ``u v`` edge-list text and a node-attribute CSV."""
        with Path(edge_path).open("w") as fh:
            for u, v in self.social_edges:
                fh.write(f"{u} {v}\n")
        with Path(node_path).open("w") as fh:
            fh.write("node,in_frame,in_hidden\n")
            for i in range(self.n):
                fh.write(f"{i},{int(self.in_frame[i])},{int(self.in_hidden[i])}\n")


def _bernoulli_positions(rng: np.random.Generator, total: int, p: float) -> IntArray:
    """Positions in ``range(total)`` of successes in ``total`` Bernoulli(p) trials.

    Gaps between successes are geometric, so only the successes are drawn.
    """
    if total <= 0 or p <= 0:
        return np.empty(0, dtype=np.int64)
    if p >= 1:
        return np.arange(total, dtype=np.int64)
    chunks = []
    pos = -1
    while True:
        want = int(total * p + 6 * math.sqrt(total * p) + 16)
        gaps = rng.geometric(p, size=want)
        idx = pos + np.cumsum(gaps)
        done = idx[-1] >= total
        idx = idx[idx < total]
        chunks.append(idx)
        if done:
            break
        pos = int(idx[-1])
    return np.concatenate(chunks).astype(np.int64)


def _triangle_pairs(k: IntArray, m: int) -> tuple[IntArray, IntArray]:
    """Map row-major indices over pairs ``i < j < m`` back to ``(i, j)``."""
    kf = k.astype(np.float64)
    i = np.floor(m - 0.5 - np.sqrt((m - 0.5) ** 2 - 2 * kf)).astype(np.int64)
    start = i * (2 * m - i - 1) // 2
    # Correct the rare float rounding error at row boundaries.
    low = k < start
    while low.any():
        i[low] -= 1
        start = i * (2 * m - i - 1) // 2
        low = k < start
    nxt = (i + 1) * (2 * m - i - 2) // 2
    high = k >= nxt
    while high.any():
        i[high] += 1
        start = i * (2 * m - i - 1) // 2
        nxt = (i + 1) * (2 * m - i - 2) // 2
        high = k >= nxt
    j = k - start + i + 1
    return i, j


def generate_population(cfg: SimConfig, replicate: int = 0) -> PopulationGraph:
    """Draw memberships and a social network; reports mirror every tie to H."""
    sizes = cfg.block_sizes()
    rng = stream(cfg.seed, 1, replicate)
    order = rng.permutation(cfg.n)
    bounds = np.cumsum((0,) + sizes)
    block = np.empty(cfg.n, dtype=np.int64)
    members = []
    for b in range(4):
        nodes = np.sort(order[bounds[b]:bounds[b + 1]])
        block[nodes] = b
        members.append(nodes)
    in_frame = block < 2
    in_hidden = (block == 0) | (block == 2)

    m = cfg.mixing_matrix()
    us, vs = [], []
    for a in range(4):
        for b in range(a, 4):
            na, nb = len(members[a]), len(members[b])
            if a == b:
                total = na * (na - 1) // 2
                k = _bernoulli_positions(rng, total, m[a, b])
                i, j = _triangle_pairs(k, na)
            else:
                total = na * nb
                k = _bernoulli_positions(rng, total, m[a, b])
                i, j = k // nb, k % nb
            us.append(members[a][i])
            vs.append(members[b][j])
    u = np.concatenate(us)
    v = np.concatenate(vs)
    social = np.stack([np.minimum(u, v), np.maximum(u, v)], axis=1)
    return PopulationGraph(cfg.n, in_frame, in_hidden, social, _reports_from_ties(social, in_hidden))


def _reports_from_ties(social: IntArray, in_hidden: BoolArray) -> IntArray:
    both = np.concatenate([social, social[:, ::-1]])
    return both[in_hidden[both[:, 1]]]


def from_edges(
    n: int,
    in_frame: npt.ArrayLike,
    in_hidden: npt.ArrayLike,
    social_edges: npt.ArrayLike,
    report_edges: npt.ArrayLike | None = None,
) -> PopulationGraph:
    """Build a graph from explicit ties; reports default to every tie into H."""
    hid = np.asarray(in_hidden, dtype=bool)
    se = np.asarray(social_edges, dtype=np.int64).reshape(-1, 2)
    se = np.sort(se, axis=1)
    if len(se) and (se.min() < 0 or se.max() >= n):
        raise ValidationError(f"social edges refer to nodes outside 0..{n - 1}")
    if report_edges is None:
        re_ = _reports_from_ties(se, hid)
    else:
        re_ = np.asarray(report_edges, dtype=np.int64).reshape(-1, 2)
    return PopulationGraph(n, np.asarray(in_frame, dtype=bool), hid, se, re_)


def apply_transmission_error(g: PopulationGraph, tau: float, rng_seed: int) -> PopulationGraph:
    """Drop exactly ``round((1 - tau) * |E_FH|)`` frame-to-hidden reports.

    The dropped reports are the first ones in a seeded random order, so for a
    fixed seed a smaller ``tau`` removes a superset of what a larger one does.
    """
    if not 0 < tau <= 1:
        raise ValidationError("tau must lie in (0, 1]")
    r = g.report_edges
    fh = np.flatnonzero(g.in_frame[r[:, 0]] & g.in_hidden[r[:, 1]])
    k = round_half_up((1.0 - tau) * len(fh))
    if k == 0:
        return g
    order = stream(rng_seed, 2).permutation(len(fh))
    drop = np.zeros(len(r), dtype=bool)
    drop[fh[order[:k]]] = True
    return PopulationGraph(g.n, g.in_frame, g.in_hidden, g.social_edges, r[~drop])


@dataclass(frozen=True)
class CensusQuantities:
    """Exact population-level totals, means and adjustment factors."""

    n: int
    n_f: int
    n_h: int
    y_FH: int
    v_HF: int
    v_bar_HF: float
    d_FF: int
    d_UF: int
    d_FU: int
    d_HF: int
    d_bar_FF: float
    d_bar_UF: float
    d_bar_HF: float
    phi: float
    delta: float
    tau: float

    @property
    def basic_estimand(self) -> float:
        """What the classic basic estimator converges to: y_FH / (d_FU / N)."""
        return self.y_FH / self.d_bar_UF

    @property
    def modified_basic_estimand(self) -> float:
        return self.y_FH / self.d_bar_FF

    @property
    def generalized_estimand(self) -> float:
        return self.y_FH / self.v_bar_HF

    def with_(self, **kw: Any) -> CensusQuantities:
        return replace(self, **kw)


def census_quantities(g: PopulationGraph) -> CensusQuantities:
    """Enumerate the whole graph to get every census-level quantity."""
    n_f, n_h = g.n_frame, g.n_hidden
    if n_f == 0 or n_h == 0:
        raise ValidationError("census needs a non-empty frame and hidden population")
    to_frame = g.ties_to(g.in_frame)
    y_FH = int(g.out_reports(g.in_frame, g.in_hidden)[g.in_frame].sum())
    v_HF = int(g.in_reports(g.in_frame, g.in_hidden)[g.in_hidden].sum())
    d_FF = int(to_frame[g.in_frame].sum())
    d_UF = int(to_frame.sum())
    d_FU = int(g.degree[g.in_frame].sum())
    d_HF = int(to_frame[g.in_hidden].sum())
    d_bar_FF = d_FF / n_f
    d_bar_UF = d_UF / g.n
    d_bar_HF = d_HF / n_h
    if d_bar_UF == 0 or d_bar_FF == 0 or d_bar_HF == 0:
        raise DegenerateDenominator("census mean degree is zero; factors undefined")
    v_bar = v_HF / n_h
    return CensusQuantities(
        n=g.n, n_f=n_f, n_h=n_h, y_FH=y_FH, v_HF=v_HF, v_bar_HF=v_bar,
        d_FF=d_FF, d_UF=d_UF, d_FU=d_FU, d_HF=d_HF,
        d_bar_FF=d_bar_FF, d_bar_UF=d_bar_UF, d_bar_HF=d_bar_HF,
        phi=d_bar_FF / d_bar_UF, delta=d_bar_HF / d_bar_FF, tau=v_bar / d_bar_HF,
    )


def predicted_basic_bias(cq: CensusQuantities, basic_estimand: float | None = None) -> float:
    """Bias of the basic estimator implied by the three adjustment factors."""
    prod = cq.phi * cq.delta * cq.tau
    if prod <= 0:
        raise DegenerateDenominator("adjustment factor product must be positive")
    est = cq.basic_estimand if basic_estimand is None else basic_estimand
    return est * (1.0 - 1.0 / prod)
