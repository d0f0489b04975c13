"""Point estimators for hidden-population size and its building blocks.

Frame-side quantities are Horvitz-Thompson totals over design weights.
Hidden-side quantities are Hajek means over relative weights, so any common
scale on those weights cancels.  Size estimators divide a frame-side total
of reports by a per-capita mean (degree or visibility).

Each public function takes survey objects.  The ``*_w`` helpers take a
weight vector or a ``(B, n)`` matrix of replicate weights and return one
value per row; bootstrap code uses those to avoid rebuilding surveys.
"""

from __future__ import annotations

import warnings
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Literal

import numpy as np
import numpy.typing as npt

from .datamodel import FrameSurvey, HiddenSurvey, KnownPopulationRegistry
from .errors import DegenerateDenominator, DegenerateVisibility, ValidationError

FloatArray = npt.NDArray[np.float64]
WeightScale = Literal["absolute", "relative"]


class WeightScaleWarning(UserWarning):
    """Frame weights do not sum to roughly the frame size."""


class SizeAboveFrameWarning(UserWarning):
    """A size estimate exceeds the frame size (reported, never clamped)."""


class Provenance(str, Enum):
    ESTIMATED = "estimated"
    ASSUMED = "assumed"
    CENSUS = "census"


@dataclass(frozen=True)
class AdjustmentFactors:
    """Frame ratio, degree ratio, true positive rate and precision of reports."""

    phi: float = 1.0
    delta: float = 1.0
    tau: float = 1.0
    eta: float = 1.0
    provenance: Mapping[str, Provenance] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("phi", "delta", "tau", "eta"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ValidationError(f"adjustment factor {name} must be positive, got {v}")
        if self.tau > 1 or self.eta > 1:
            raise ValidationError("tau and eta cannot exceed 1")


def _ratio(num, den, what: str, exc: type[DegenerateDenominator] = DegenerateDenominator):
    den_arr = np.asarray(den, dtype=np.float64)
    if np.any(den_arr == 0):
        raise exc(f"{what}: denominator is zero")
    return np.asarray(num, dtype=np.float64) / den_arr


def _scalar(x):
    a = np.asarray(x, dtype=np.float64)
    return float(a) if a.ndim == 0 else a


# --------------------------------------------------------------------------
# Frame-side totals and known-population degrees
# --------------------------------------------------------------------------


def check_weight_scale(s: FrameSurvey, reg: KnownPopulationRegistry, tol: float = 0.10) -> float:
    """Warn when design weights sum to more than ``tol`` away from N_F.

    Returns the factor ``N_F / sum(w)`` that would post-stratify the weights.
    """
    total = float(s.weight.sum())
    factor = reg.frame_size / total
    if abs(total / reg.frame_size - 1.0) > tol:
        warnings.warn(
            f"frame weights sum to {total:.6g} but the frame has {reg.frame_size} members; "
            "totals assume absolute weights (pass weight_scale='relative' to rescale)",
            WeightScaleWarning,
            stacklevel=3,
        )
    return factor


def _frame_weights(s: FrameSurvey, reg: KnownPopulationRegistry | None,
                   weight_scale: WeightScale) -> FloatArray:
    if weight_scale == "relative":
        if reg is None:
            raise ValidationError("relative frame weights need a registry for N_F")
        return s.weight * (reg.frame_size / s.weight.sum())
    if reg is not None and not s.allow_zero_weights:
        check_weight_scale(s, reg)
    return s.weight


def ht_total_w(w, y) -> float | FloatArray:
    """Weighted total ``sum_i w_i y_i`` for one weight vector or a matrix of them."""
    return _scalar(np.asarray(w, dtype=np.float64) @ np.asarray(y, dtype=np.float64))


def ht_total_reports_to_hidden(s: FrameSurvey) -> float:
    """Horvitz-Thompson total of reports about hidden-population members."""
    return float(ht_total_w(s.weight, s.y_hidden))


def ht_total_reports_to_probes(s: FrameSurvey, groups: Sequence[str] | None = None) -> float:
    """Horvitz-Thompson total of ties to the probe groups (a multiset)."""
    cols = s.columns(groups)
    return float(ht_total_w(s.weight, s.y_probe[:, cols].sum(axis=1)))


def _frame_groups(s: FrameSurvey, reg: KnownPopulationRegistry,
                  groups: Sequence[str] | None) -> list[str]:
    if groups is not None:
        return list(groups)
    return [g for g in s.group_ids if g in set(reg.group_ids)]


def kp_mean_degree_w(w, y_probe_sum, n_a: float, target: str, reg: KnownPopulationRegistry):
    """Known-population mean degree from weights and per-respondent probe sums."""
    if n_a <= 0:
        raise DegenerateDenominator("probe groups have zero total size")
    d = ht_total_w(w, y_probe_sum) / n_a
    if target == "FU":
        d = d * reg.universe_size / reg.frame_size
    return d


def kp_mean_degree(
    s: FrameSurvey,
    reg: KnownPopulationRegistry,
    target: Literal["FF", "UF", "FU"],
    groups: Sequence[str] | None = None,
    weight_scale: WeightScale = "absolute",
) -> float:
    """Known-population estimate of a per-capita mean degree.

    ``FF`` (ties from frame members to the frame) and ``UF`` (ties from the
    whole population to the frame, averaged over N) both take the form
    total ties to the probe groups divided by their summed size; they differ
    only in which groups are appropriate.  ``FU`` rescales ``UF`` by N/N_F.
    """
    if target not in ("FF", "UF", "FU"):
        raise ValidationError(f"unknown degree target {target!r}")
    gids = _frame_groups(s, reg, groups)
    if not gids:
        raise DegenerateDenominator("no probe groups shared by survey and registry")
    w = _frame_weights(s, reg, weight_scale)
    ysum = s.y_probe[:, s.columns(gids)].sum(axis=1)
    return float(kp_mean_degree_w(w, ysum, reg.total_size(gids), target, reg))


def frame_ratio(
    s: FrameSurvey,
    reg_ff: KnownPopulationRegistry,
    reg_uf: KnownPopulationRegistry,
    weight_scale: WeightScale = "absolute",
) -> float:
    """phi: frame-to-frame mean degree over population-to-frame mean degree.

    ``reg_ff`` should hold groups typical of the frame, ``reg_uf`` groups
    typical of the whole population.
    """
    num = kp_mean_degree(s, reg_ff, "FF", weight_scale=weight_scale)
    den = kp_mean_degree(s, reg_uf, "UF", weight_scale=weight_scale)
    return float(_ratio(num, den, "frame ratio"))


# --------------------------------------------------------------------------
# Hidden-side Hajek means
# --------------------------------------------------------------------------


def _hidden_groups(h: HiddenSurvey, reg: KnownPopulationRegistry,
                   groups: Sequence[str] | None) -> list[str]:
    if groups is not None:
        return list(groups)
    known = {g.id: g for g in reg.groups}
    return [g for g in h.group_ids if g in known and known[g].size_on_frame > 0]


def hajek_scaled_mean_w(w, per_row, scale: float):
    """``scale * sum(w * x) / sum(w)`` for one weight vector or a matrix of them."""
    w = np.asarray(w, dtype=np.float64)
    num = w @ np.asarray(per_row, dtype=np.float64)
    den = w.sum(axis=-1)
    return _scalar(scale * _ratio(num, den, "Hajek mean (all weights zero)"))


def _hidden_scale(reg: KnownPopulationRegistry, gids: Sequence[str]) -> float:
    n_af = reg.total_on_frame(gids)
    if n_af <= 0:
        raise DegenerateDenominator("probe groups have no members on the frame")
    return reg.frame_size / n_af


def visibility_mean(
    h: HiddenSurvey, reg: KnownPopulationRegistry, groups: Sequence[str] | None = None
) -> float:
    """Mean number of frame members who would report a hidden member.

    Hajek mean of reported visibility to the on-frame part of the probe
    groups, scaled by N_F over their on-frame size.
    """
    gids = _hidden_groups(h, reg, groups)
    if not gids:
        raise DegenerateDenominator("no probe groups with members on the frame")
    v = h.vis[:, h.columns(gids)].sum(axis=1)
    out = float(hajek_scaled_mean_w(h.rel_weight, v, _hidden_scale(reg, gids)))
    if out == 0:
        raise DegenerateVisibility("estimated mean visibility is zero")
    return out


def mean_degree_hidden_to_frame(
    h: HiddenSurvey, reg: KnownPopulationRegistry, groups: Sequence[str] | None = None
) -> float:
    """Mean number of ties from a hidden member to the frame (Hajek form)."""
    gids = _hidden_groups(h, reg, groups)
    if not gids:
        raise DegenerateDenominator("no probe groups with members on the frame")
    y = h.y_probe[:, h.columns(gids)].sum(axis=1)
    return float(hajek_scaled_mean_w(h.rel_weight, y, _hidden_scale(reg, gids)))


def true_positive_rate_w(w, vis_sum, y_sum):
    w = np.asarray(w, dtype=np.float64)
    return _scalar(_ratio(w @ vis_sum, w @ y_sum, "true positive rate (no reported ties)"))


def true_positive_rate(h: HiddenSurvey, groups: Sequence[str] | None = None) -> float:
    """tau: weighted reported visibility over weighted ties; needs no group sizes."""
    cols = h.columns(groups)
    return float(
        true_positive_rate_w(
            h.rel_weight, h.vis[:, cols].sum(axis=1), h.y_probe[:, cols].sum(axis=1)
        )
    )


def degree_ratio(
    h: HiddenSurvey,
    s: FrameSurvey,
    reg: KnownPopulationRegistry,
    groups: Sequence[str] | None = None,
    weight_scale: WeightScale = "absolute",
) -> float:
    """delta: hidden-to-frame mean degree over frame-to-frame mean degree.

    By default uses the probe groups present in both surveys.
    """
    if groups is None:
        in_frame = set(s.group_ids)
        groups = [g for g in _hidden_groups(h, reg, None) if g in in_frame]
    num = mean_degree_hidden_to_frame(h, reg, groups)
    den = kp_mean_degree(s, reg, "FF", groups=groups, weight_scale=weight_scale)
    return float(_ratio(num, den, "degree ratio"))


# --------------------------------------------------------------------------
# Size estimators
# --------------------------------------------------------------------------


def _warn_if_above_frame(value: float, reg: KnownPopulationRegistry) -> None:
    if value > reg.frame_size:
        warnings.warn(
            f"size estimate {value:.6g} exceeds the frame size {reg.frame_size}",
            SizeAboveFrameWarning,
            stacklevel=3,
        )


def basic_scaleup(
    s: FrameSurvey,
    reg: KnownPopulationRegistry,
    variant: Literal["classic", "modified"] = "classic",
    groups: Sequence[str] | None = None,
    weight_scale: WeightScale = "absolute",
) -> float:
    """Basic scale-up estimate of N_H.

    ``classic`` divides the total reports by the population-to-frame mean
    degree (equivalently y / (d_FU / N)); ``modified`` divides by the
    frame-to-frame mean degree (y / (d_FF / N_F)).
    """
    if variant not in ("classic", "modified"):
        raise ValidationError(f"unknown basic variant {variant!r}")
    w = _frame_weights(s, reg, weight_scale)
    y = float(ht_total_w(w, s.y_hidden))
    target = "UF" if variant == "classic" else "FF"
    d = kp_mean_degree(s, reg, target, groups=groups, weight_scale=weight_scale)
    if d == 0:
        raise DegenerateDenominator("estimated mean degree is zero")
    out = y / d
    if not s.allow_zero_weights:  # replicate surveys stay quiet
        _warn_if_above_frame(out, reg)
    return out


def generalized_scaleup(
    s: FrameSurvey,
    h: HiddenSurvey,
    reg: KnownPopulationRegistry,
    groups: Sequence[str] | None = None,
    weight_scale: WeightScale = "absolute",
) -> float:
    """Total reports from the frame divided by the mean visibility of hidden members."""
    w = _frame_weights(s, reg, weight_scale)
    y = float(ht_total_w(w, s.y_hidden))
    v = visibility_mean(h, reg, groups)
    out = y / v
    if not s.allow_zero_weights:  # replicate surveys stay quiet
        _warn_if_above_frame(out, reg)
    return out


AdjustVariant = Literal["classic_phi_delta_tau", "modified_delta_tau", "modified_with_eta"]


def adjusted_scaleup(
    basic_estimate: float, factors: AdjustmentFactors, variant: AdjustVariant
) -> float:
    """Divide a basic estimate by the adjustment factors it ignores.

    ``classic_phi_delta_tau`` applies 1/(phi delta tau) to a classic basic
    estimate; ``modified_delta_tau`` applies 1/(delta tau) to a modified
    one; ``modified_with_eta`` additionally multiplies by eta to allow for
    false positive reports.
    """
    if variant == "classic_phi_delta_tau":
        return basic_estimate / (factors.phi * factors.delta * factors.tau)
    if variant == "modified_delta_tau":
        return basic_estimate / (factors.delta * factors.tau)
    if variant == "modified_with_eta":
        return basic_estimate * factors.eta / (factors.delta * factors.tau)
    raise ValidationError(f"unknown adjustment variant {variant!r}")


# --------------------------------------------------------------------------
# Diagnostics
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeAlterCheck:
    mean_y_frame_to_hidden: float
    mean_y_probe_members_to_hidden: float
    difference: float


def probe_alter_check(s: FrameSurvey) -> ProbeAlterCheck:
    """Compare reports about H from all respondents and from probe-group members.

    Members are weighted once per group they belong to, matching the
    multiset definition of the probe alters.
    """
    if s.membership is None:
        raise ValidationError("frame survey carries no probe membership columns")
    w = s.weight
    y = s.y_hidden.astype(np.float64)
    mult = s.membership.sum(axis=1).astype(np.float64)
    if not (mult * w).sum() > 0:
        raise ValidationError("no respondent is flagged as a probe-group member")
    all_mean = float(w @ y / w.sum())
    mem_mean = float((w * mult) @ y / (w * mult).sum())
    return ProbeAlterCheck(all_mean, mem_mean, all_mean - mem_mean)


@dataclass(frozen=True)
class ProbeAlterRow:
    group_id: str
    members_sampled: int
    mean_y_members: float
    mean_y_all: float
    difference: float


def probe_alter_table(s: FrameSurvey) -> list[ProbeAlterRow]:
    """Per-group and pooled comparison of reports about H by probe members.

    The last row (``group_id="*"``) pools the groups as a multiset.  Groups
    with no sampled member get NaN means.
    """
    pooled = probe_alter_check(s)
    w = s.weight
    y = s.y_hidden.astype(np.float64)
    out = []
    for j, gid in enumerate(s.group_ids):
        m = s.membership[:, j]
        wm = w[m]
        mean_m = float(wm @ y[m] / wm.sum()) if wm.sum() > 0 else float("nan")
        out.append(ProbeAlterRow(gid, int(m.sum()), mean_m, pooled.mean_y_frame_to_hidden,
                                 pooled.mean_y_frame_to_hidden - mean_m))
    out.append(ProbeAlterRow("*", int(s.membership.any(axis=1).sum()),
                             pooled.mean_y_probe_members_to_hidden,
                             pooled.mean_y_frame_to_hidden, pooled.difference))
    return out


@dataclass(frozen=True)
class ConsistencyRow:
    group_id: str
    known_size: int
    estimate: float


def internal_consistency(
    s: FrameSurvey,
    reg: KnownPopulationRegistry,
    estimator: Literal["classic", "modified"] = "classic",
    weight_scale: WeightScale = "absolute",
) -> list[ConsistencyRow]:
    """Estimate each known group's size from the others, treating it as hidden."""
    gids = _frame_groups(s, reg, None)
    if len(gids) < 2:
        raise ValidationError("internal consistency needs at least two probe groups")
    target = "UF" if estimator == "classic" else "FF"
    w = _frame_weights(s, reg, weight_scale)
    out = []
    for k, g in enumerate(gids):
        rest = gids[:k] + gids[k + 1:]
        y = float(ht_total_w(w, s.y_probe[:, s.columns([g])[0]]))
        ysum = s.y_probe[:, s.columns(rest)].sum(axis=1)
        d = float(kp_mean_degree_w(w, ysum, reg.total_size(rest), target, reg))
        if d == 0:
            raise DegenerateDenominator(f"mean degree without group {g!r} is zero")
        out.append(ConsistencyRow(g, reg.group(g).size_total, y / d))
    return out
