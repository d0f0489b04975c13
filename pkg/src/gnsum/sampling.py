"""Sampling designs over simulated populations and bootstrap resamplers.

Resamplers return either index multisets (arrays of row indices, one row per
replicate) or replicate weight vectors.  Every function takes an explicit
seed and derives per-replicate streams from it, so results do not depend on
how work is split across threads.
"""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .datamodel import FrameSurvey, HiddenSurvey
from .errors import SingletonStratum, ValidationError
from .netsim import PopulationGraph
from .rng import stream

IntArray = npt.NDArray[np.int64]
FloatArray = npt.NDArray[np.float64]


@dataclass(frozen=True)
class DrawnSample:
    """Node ids drawn from a population with their inclusion weights."""

    member_ids: IntArray
    inclusion_weights: FloatArray
    relative_only: bool

    def __post_init__(self) -> None:
        ids = np.asarray(self.member_ids, dtype=np.int64)
        w = np.asarray(self.inclusion_weights, dtype=np.float64)
        if ids.shape != w.shape:
            raise ValidationError("member_ids and inclusion_weights differ in length")
        if (w <= 0).any() or not np.isfinite(w).all():
            raise ValidationError("inclusion weights must be positive and finite")
        object.__setattr__(self, "member_ids", ids)
        object.__setattr__(self, "inclusion_weights", w)

    def __len__(self) -> int:
        return len(self.member_ids)


def srs_from_frame(g: PopulationGraph, n: int, seed: int) -> DrawnSample:
    """Simple random sample without replacement of ``n`` frame members."""
    frame = np.flatnonzero(g.in_frame)
    if not 1 <= n <= len(frame):
        raise ValidationError(f"sample size {n} must lie in [1, {len(frame)}]")
    ids = np.sort(stream(seed, 3).choice(frame, size=n, replace=False))
    return DrawnSample(ids, np.full(n, len(frame) / n), relative_only=False)


def successive_sample(
    size_measure: FloatArray, n: int, rng: np.random.Generator
) -> IntArray:
    """Draw ``n`` distinct positions, each step proportional to ``size_measure``.

    Uses exponential race keys: the ``n`` smallest values of E_i / s_i form a
    successive (sequential PPS without replacement) sample.
    """
    s = np.asarray(size_measure, dtype=np.float64)
    keys = rng.exponential(size=len(s)) / s
    return np.argsort(keys, kind="stable")[:n]


def relative_sample_from_hidden(
    g: PopulationGraph, n: int, exponent: float, seed: int
) -> DrawnSample:
    """Successive sample of hidden nodes with selection weight ``degree**exponent``.

    The returned weights are ``degree**-exponent``: proportional to the
    inverse selection weight, with an unknown constant, which is all a
    relative-probability sample provides.
    """
    hidden = np.flatnonzero(g.in_hidden)
    if not 1 <= n <= len(hidden):
        raise ValidationError(f"sample size {n} must lie in [1, {len(hidden)}]")
    d = g.degree[hidden].astype(np.float64)
    if exponent != 0 and (d == 0).any():
        raise ValidationError("an isolated hidden node cannot be drawn proportional to degree")
    size = d**exponent if exponent != 0 else np.ones(len(hidden))
    pos = np.sort(successive_sample(size, n, stream(seed, 4)))
    return DrawnSample(hidden[pos], 1.0 / size[pos], relative_only=True)


def simple_bootstrap(n: int, B: int, seed: int) -> IntArray:
    """``B`` index multisets of size ``n`` drawn uniformly with replacement."""
    if n < 1 or B < 1:
        raise ValidationError("simple bootstrap needs n >= 1 and B >= 1")
    out = np.empty((B, n), dtype=np.int64)
    for b in range(B):
        out[b] = stream(seed, 5, b).integers(0, n, size=n)
    return out


def multiplicities(indices: IntArray, n: int) -> IntArray:
    """Turn index multisets (one per row) into per-row selection counts."""
    idx = np.atleast_2d(indices)
    B = idx.shape[0]
    flat = idx + (np.arange(B)[:, None] * n)
    return np.bincount(flat.ravel(), minlength=B * n).reshape(B, n)


def _psu_layout(survey: FrameSurvey) -> list[tuple[str, list[IntArray]]]:
    """Per stratum, the respondent indices of each sampled PSU (in first-seen order)."""
    strata: dict[str, dict[str, list[int]]] = {}
    for i, (s, p) in enumerate(zip(survey.stratum, survey.psu)):
        strata.setdefault(s, {}).setdefault(p, []).append(i)
    return [(s, [np.array(v, dtype=np.int64) for v in psus.values()]) for s, psus in strata.items()]


def rescaled_bootstrap(survey: FrameSurvey, B: int, seed: int) -> FloatArray:
    """Replicate weights from resampling ``n_h - 1`` PSUs per stratum.

    Respondent j in PSU i of stratum h gets ``w_j * n_h / (n_h - 1) * r_i``,
    where ``r_i`` counts how often PSU i was drawn.
    """
    layout = _psu_layout(survey)
    for s, psus in layout:
        if len(psus) < 2:
            raise SingletonStratum(s)
    if B < 1:
        raise ValidationError("B must be >= 1")
    out = np.zeros((B, len(survey)))
    for b in range(B):
        rng = stream(seed, 6, b)
        for _, psus in layout:
            n_h = len(psus)
            r = np.bincount(rng.integers(0, n_h, size=n_h - 1), minlength=n_h)
            scale = n_h / (n_h - 1)
            for i, rows in enumerate(psus):
                out[b, rows] = survey.weight[rows] * scale * r[i]
    return out


def rescaled_bootstrap_support(survey: FrameSurvey) -> tuple[FloatArray, FloatArray]:
    """Every possible replicate weight vector with its probability.

    Enumerates all ordered PSU draws in every stratum, so only use it for
    tiny designs.
    """
    layout = _psu_layout(survey)
    per_stratum = []
    for s, psus in layout:
        n_h = len(psus)
        if n_h < 2:
            raise SingletonStratum(s)
        options = []
        for draw in itertools.product(range(n_h), repeat=n_h - 1):
            r = np.bincount(draw, minlength=n_h)
            vec = np.zeros(len(survey))
            for i, rows in enumerate(psus):
                vec[rows] = survey.weight[rows] * n_h / (n_h - 1) * r[i]
            options.append(vec)
        per_stratum.append((options, 1.0 / n_h ** (n_h - 1)))
    weights, probs = [], []
    for combo in itertools.product(*[range(len(o)) for o, _ in per_stratum]):
        vec = np.zeros(len(survey))
        p = 1.0
        for k, c in enumerate(combo):
            vec += per_stratum[k][0][c]
            p *= per_stratum[k][1]
        weights.append(vec)
        probs.append(p)
    return np.array(weights), np.array(probs)


def visibility_groups(survey: HiddenSurvey) -> IntArray:
    """Two-group labels: the row flag if present, else a median split of visibility.

    Respondents whose total reported visibility is above the median go to
    group 1 and the rest to group 0.
    """
    if survey.group_flag is not None:
        return np.asarray(survey.group_flag, dtype=np.int64)
    tot = survey.vis.sum(axis=1)
    return (tot > np.median(tot)).astype(np.int64)


def chain_transitions(groups: IntArray) -> FloatArray:
    """Row-normalised 2x2 transition proportions between consecutive rows."""
    g = np.asarray(groups, dtype=np.int64)
    counts = np.zeros((2, 2))
    np.add.at(counts, (g[:-1], g[1:]), 1.0)
    out = np.empty((2, 2))
    marg = np.bincount(g, minlength=2) / len(g)
    for a in range(2):
        tot = counts[a].sum()
        out[a] = counts[a] / tot if tot > 0 else marg
    return out


def rds_two_group_bootstrap(
    survey: HiddenSurvey, B: int, seed: int, use_order: bool = False
) -> IntArray:
    """Two-group chain bootstrap for a hidden-population sample.

    Respondents are split into two groups.  Each replicate is a chain of
    length n over groups; at each step a respondent is drawn uniformly with
    replacement from the current group.  Group-to-group transitions are the
    marginal group shares unless ``use_order`` is set, in which case they are
    estimated from consecutive rows treated as a recruitment chain.
    """
    n = len(survey)
    if B < 1:
        raise ValidationError("B must be >= 1")
    groups = visibility_groups(survey)
    if ((groups != 0) & (groups != 1)).any():
        raise ValidationError("group labels must be 0 or 1")
    members = [np.flatnonzero(groups == k) for k in (0, 1)]
    present = [k for k in (0, 1) if len(members[k])]
    if len(present) == 1:
        k = present[0]
        out = np.empty((B, n), dtype=np.int64)
        for b in range(B):
            out[b] = members[k][stream(seed, 7, b).integers(0, len(members[k]), size=n)]
        return out
    marg = np.array([len(members[0]), len(members[1])], dtype=np.float64) / n
    trans = chain_transitions(groups) if use_order else np.vstack([marg, marg])
    if (trans.sum(axis=1) == 0).any():
        raise ValidationError("a group has no outgoing transitions")
    out = np.empty((B, n), dtype=np.int64)
    for b in range(B):
        rng = stream(seed, 7, b)
        u = rng.random(n)
        pick = rng.random(n)
        state = int(u[0] >= marg[0])
        for t in range(n):
            if t > 0:
                state = int(u[t] >= trans[state, 0])
            m = members[state]
            out[b, t] = m[min(int(pick[t] * len(m)), len(m) - 1)]
    return out


def stationary_distribution(trans: FloatArray) -> FloatArray:
    """Stationary distribution of a 2-state chain."""
    a, b = trans[0, 1], trans[1, 0]
    if a + b == 0:
        raise ValidationError("chain has no stationary distribution (absorbing states)")
    return np.array([b / (a + b), a / (a + b)])


def two_sample_replicates(
    frame_reps: Sequence, hidden_reps: Sequence
) -> list[tuple]:
    """Pair the b-th frame replicate with the b-th hidden replicate."""
    if len(frame_reps) != len(hidden_reps):
        raise ValidationError(
            f"replicate count mismatch: {len(frame_reps)} frame vs {len(hidden_reps)} hidden"
        )
    return list(zip(frame_reps, hidden_reps))
