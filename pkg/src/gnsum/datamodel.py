"""Domain types: registries, frame and hidden surveys, and estimates.

Surveys are stored column-wise as read-only numpy arrays because every
estimator is a weighted sum over respondents.  The row view described by
:class:`FrameRow` and :class:`HiddenRow` is still available through the
``rows`` property for callers that prefer it.
"""

from __future__ import annotations

import hashlib
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
import numpy.typing as npt

from .errors import (
    EmptySample,
    NonpositiveWeight,
    SchemaError,
    UnknownGroup,
    ValidationError,
    VisibilityExceedsTies,
)

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]

RESERVED_GROUP_IDS = frozenset({"hidden", "probe"})


def _check_weights(w: FloatArray, ids: Sequence[str], name: str, allow_zero: bool) -> None:
    bad = ~np.isfinite(w) | (w < 0)
    if not allow_zero:
        bad |= w == 0
    if bad.any():
        i = int(np.argmax(bad))
        raise NonpositiveWeight(ids[i], f"{name}={w[i]!r}")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


# --------------------------------------------------------------------------
# Registry
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeGroup:
    """A group of known size used to calibrate degrees or visibility."""

    id: str
    size_total: int
    size_on_frame: int

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("probe group id must be non-empty")
        if self.id in RESERVED_GROUP_IDS:
            raise ValidationError(f"probe group id {self.id!r} is reserved")
        if self.size_total < 0 or self.size_on_frame < 0:
            raise ValidationError(f"group {self.id!r}: sizes must be non-negative")
        if self.size_on_frame > self.size_total:
            raise ValidationError(
                f"group {self.id!r}: size_on_frame {self.size_on_frame} exceeds "
                f"size_total {self.size_total}"
            )


@dataclass(frozen=True)
class KnownPopulationRegistry:
    """Sizes of the probe groups, the frame and the whole population."""

    groups: tuple[ProbeGroup, ...]
    frame_size: int
    universe_size: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "groups", tuple(self.groups))
        if self.frame_size <= 0 or self.universe_size <= 0:
            raise ValidationError("frame_size and universe_size must be positive")
        if self.frame_size > self.universe_size:
            raise ValidationError("frame_size exceeds universe_size")
        ids = [g.id for g in self.groups]
        if len(set(ids)) != len(ids):
            raise ValidationError("probe group ids must be unique")

    @property
    def group_ids(self) -> tuple[str, ...]:
        return tuple(g.id for g in self.groups)

    def group(self, gid: str) -> ProbeGroup:
        for g in self.groups:
            if g.id == gid:
                return g
        raise UnknownGroup(f"unknown probe group {gid!r}")

    def subset(self, ids: Sequence[str]) -> KnownPopulationRegistry:
        """Registry restricted to ``ids`` (order follows ``ids``)."""
        return KnownPopulationRegistry(
            tuple(self.group(i) for i in ids), self.frame_size, self.universe_size
        )

    def without(self, gid: str) -> KnownPopulationRegistry:
        self.group(gid)
        return KnownPopulationRegistry(
            tuple(g for g in self.groups if g.id != gid),
            self.frame_size,
            self.universe_size,
        )

    def total_size(self, ids: Sequence[str] | None = None) -> int:
        """N_A: summed sizes of the selected groups (multiset semantics)."""
        sel = self.groups if ids is None else [self.group(i) for i in ids]
        return sum(g.size_total for g in sel)

    def total_on_frame(self, ids: Sequence[str] | None = None) -> int:
        """Summed on-frame sizes of the selected groups."""
        sel = self.groups if ids is None else [self.group(i) for i in ids]
        return sum(g.size_on_frame for g in sel)

    def to_dict(self) -> dict[str, Any]:
        return {
            "groups": [
                {"id": g.id, "size_total": g.size_total, "size_on_frame": g.size_on_frame}
                for g in self.groups
            ],
            "frame_size": self.frame_size,
            "universe_size": self.universe_size,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> KnownPopulationRegistry:
        try:
            groups = tuple(
                ProbeGroup(str(g["id"]), int(g["size_total"]), int(g["size_on_frame"]))
                for g in d["groups"]
            )
            return cls(groups, int(d["frame_size"]), int(d["universe_size"]))
        except KeyError as exc:
            raise SchemaError(f"registry is missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise SchemaError(f"registry has a malformed field: {exc}") from None


# --------------------------------------------------------------------------
# Frame survey
# --------------------------------------------------------------------------


class DesignKind(str, Enum):
    SRS = "srs"
    STRATIFIED_MULTISTAGE = "stratified_multistage"
    RELATIVE_PROBABILITY = "relative_probability"


@dataclass(frozen=True)
class SurveyDesignMeta:
    design_kind: DesignKind
    strata: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        for sid, n_h in self.strata:
            if n_h < 1:
                raise ValidationError(f"stratum {sid!r} has no PSUs")


@dataclass(frozen=True)
class FrameRow:
    id: str
    weight: float
    stratum: str
    psu: str
    y_hidden: int
    y_probe: dict[str, int]
    probe_membership: dict[str, bool] | None = None


@dataclass(frozen=True, eq=False)
class FrameSurvey:
    """Aggregate relational data from a probability sample of the frame.

    ``weight`` holds design weights 1/pi_i.  ``y_probe[i, j]`` is respondent
    i's count of alters in ``group_ids[j]``.  ``membership`` (optional) flags
    the respondent's own membership in each probe group.
    """

    ids: tuple[str, ...]
    weight: FloatArray
    stratum: tuple[str, ...]
    psu: tuple[str, ...]
    y_hidden: IntArray
    group_ids: tuple[str, ...]
    y_probe: IntArray
    membership: npt.NDArray[np.bool_] | None = None
    design: SurveyDesignMeta | None = None
    extra: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    allow_zero_weights: bool = False

    def __post_init__(self) -> None:
        n = len(self.ids)
        if n == 0:
            raise EmptySample("frame survey has no respondents")
        w = _frozen(np.asarray(self.weight, dtype=np.float64).reshape(-1))
        yh = _frozen(np.asarray(self.y_hidden, dtype=np.int64).reshape(-1))
        yp = np.asarray(self.y_probe, dtype=np.int64)
        if yp.ndim == 1 and len(self.group_ids) == 0:
            yp = yp.reshape(n, 0)
        yp = _frozen(yp)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "stratum", tuple(self.stratum))
        object.__setattr__(self, "psu", tuple(self.psu))
        object.__setattr__(self, "group_ids", tuple(self.group_ids))
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "y_hidden", yh)
        object.__setattr__(self, "y_probe", yp)
        if len(set(self.ids)) != n:
            raise ValidationError("frame respondent ids must be unique")
        if not (len(w) == len(yh) == len(self.stratum) == len(self.psu) == n):
            raise ValidationError("frame survey columns have unequal lengths")
        if yp.shape != (n, len(self.group_ids)):
            raise ValidationError("y_probe must have shape (respondents, groups)")
        if len(set(self.group_ids)) != len(self.group_ids):
            raise ValidationError("duplicate probe group in frame survey")
        _check_weights(w, self.ids, "weight", self.allow_zero_weights)
        if (yh < 0).any() or (yp < 0).any():
            raise ValidationError("report counts must be non-negative")
        if self.membership is not None:
            m = _frozen(np.asarray(self.membership, dtype=bool))
            if m.shape != yp.shape:
                raise ValidationError("membership must have shape (respondents, groups)")
            object.__setattr__(self, "membership", m)
        if self.design is None:
            object.__setattr__(self, "design", infer_design(self.stratum, self.psu, self.ids))

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def rows(self) -> tuple[FrameRow, ...]:
        out = []
        for i, rid in enumerate(self.ids):
            mem = None
            if self.membership is not None:
                mem = {g: bool(self.membership[i, j]) for j, g in enumerate(self.group_ids)}
            out.append(
                FrameRow(
                    rid,
                    float(self.weight[i]),
                    self.stratum[i],
                    self.psu[i],
                    int(self.y_hidden[i]),
                    {g: int(self.y_probe[i, j]) for j, g in enumerate(self.group_ids)},
                    mem,
                )
            )
        return tuple(out)

    def columns(self, ids: Sequence[str] | None = None) -> list[int]:
        """Column indices of ``ids`` within ``y_probe`` (all columns by default)."""
        if ids is None:
            return list(range(len(self.group_ids)))
        lookup = {g: j for j, g in enumerate(self.group_ids)}
        try:
            return [lookup[g] for g in ids]
        except KeyError as exc:
            raise UnknownGroup(f"frame survey has no responses for group {exc.args[0]!r}") from None

    def with_weights(self, weight: npt.ArrayLike) -> FrameSurvey:
        """Copy with new weights; zero weights are allowed (bootstrap replicates)."""
        return FrameSurvey(
            self.ids, np.asarray(weight, dtype=np.float64), self.stratum, self.psu,
            self.y_hidden, self.group_ids, self.y_probe, self.membership, self.design,
            self.extra, allow_zero_weights=True,
        )

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update("\x1f".join(self.ids).encode())
        h.update(self.weight.tobytes())
        h.update(self.y_hidden.tobytes())
        h.update("\x1f".join(self.group_ids).encode())
        h.update(self.y_probe.tobytes())
        return h.hexdigest()


def infer_design(
    stratum: Sequence[str], psu: Sequence[str], ids: Sequence[str]
) -> SurveyDesignMeta:
    """Count sampled PSUs per stratum and classify the design."""
    per: dict[str, set[str]] = {}
    for s, p in zip(stratum, psu):
        per.setdefault(s, set()).add(p)
    strata = tuple((s, len(ps)) for s, ps in per.items())
    simple = len(per) == 1 and len(set(psu)) == len(ids)
    kind = DesignKind.SRS if simple else DesignKind.STRATIFIED_MULTISTAGE
    return SurveyDesignMeta(kind, strata)


# --------------------------------------------------------------------------
# Hidden survey
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class HiddenRow:
    id: str
    rel_weight: float
    y_probe_on_frame: dict[str, int]
    vis_probe_on_frame: dict[str, int]
    group_flag: int | None = None


@dataclass(frozen=True, eq=False)
class HiddenSurvey:
    """Enriched aggregate relational data from a relative-probability sample of H.

    ``y_probe[i, j]`` counts respondent i's alters in ``group_ids[j]`` who are
    on the frame; ``vis[i, j]`` counts how many of those alters know that i
    is in the hidden population.
    """

    ids: tuple[str, ...]
    rel_weight: FloatArray
    group_ids: tuple[str, ...]
    y_probe: IntArray
    vis: IntArray
    group_flag: IntArray | None = None
    weight_scale_known: bool = False
    extra: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    allow_zero_weights: bool = False

    def __post_init__(self) -> None:
        n = len(self.ids)
        if n == 0:
            raise EmptySample("hidden survey has no respondents")
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "group_ids", tuple(self.group_ids))
        w = _frozen(np.asarray(self.rel_weight, dtype=np.float64).reshape(-1))
        y = _frozen(np.asarray(self.y_probe, dtype=np.int64).reshape(n, len(self.group_ids)))
        v = _frozen(np.asarray(self.vis, dtype=np.int64).reshape(n, len(self.group_ids)))
        object.__setattr__(self, "rel_weight", w)
        object.__setattr__(self, "y_probe", y)
        object.__setattr__(self, "vis", v)
        if len(set(self.ids)) != n:
            raise ValidationError("hidden respondent ids must be unique")
        if len(w) != n:
            raise ValidationError("hidden survey columns have unequal lengths")
        _check_weights(w, self.ids, "rel_weight", self.allow_zero_weights)
        if (y < 0).any() or (v < 0).any():
            raise ValidationError("report counts must be non-negative")
        bad = np.argwhere(v > y)
        if len(bad):
            i, j = bad[0]
            raise VisibilityExceedsTies(self.ids[i], self.group_ids[j], int(y[i, j]), int(v[i, j]))
        if self.group_flag is not None:
            gf = _frozen(np.asarray(self.group_flag, dtype=np.int64).reshape(-1))
            if len(gf) != n:
                raise ValidationError("group_flag length mismatch")
            object.__setattr__(self, "group_flag", gf)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def rows(self) -> tuple[HiddenRow, ...]:
        return tuple(
            HiddenRow(
                rid,
                float(self.rel_weight[i]),
                {g: int(self.y_probe[i, j]) for j, g in enumerate(self.group_ids)},
                {g: int(self.vis[i, j]) for j, g in enumerate(self.group_ids)},
                None if self.group_flag is None else int(self.group_flag[i]),
            )
            for i, rid in enumerate(self.ids)
        )

    def columns(self, ids: Sequence[str] | None = None) -> list[int]:
        if ids is None:
            return list(range(len(self.group_ids)))
        lookup = {g: j for j, g in enumerate(self.group_ids)}
        try:
            return [lookup[g] for g in ids]
        except KeyError as exc:
            raise UnknownGroup(f"hidden survey has no responses for group {exc.args[0]!r}") from None

    def with_weights(self, rel_weight: npt.ArrayLike) -> HiddenSurvey:
        return HiddenSurvey(
            self.ids, np.asarray(rel_weight, dtype=np.float64), self.group_ids,
            self.y_probe, self.vis, self.group_flag, self.weight_scale_known,
            self.extra, allow_zero_weights=True,
        )

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update("\x1f".join(self.ids).encode())
        h.update(self.rel_weight.tobytes())
        h.update("\x1f".join(self.group_ids).encode())
        h.update(self.y_probe.tobytes())
        h.update(self.vis.tobytes())
        return h.hexdigest()


# --------------------------------------------------------------------------
# Estimate
# --------------------------------------------------------------------------

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Interval:
    low: float
    high: float
    level: float

    def __post_init__(self) -> None:
        if not 0.0 < self.level < 1.0:
            raise ValidationError("interval level must lie in (0, 1)")
        if self.low > self.high:
            raise ValidationError("interval low exceeds high")


@dataclass(frozen=True)
class Estimate:
    """A point estimate with optional bootstrap replicates and interval."""

    value: float
    method: str
    inputs_digest: str
    replicates: tuple[float, ...] | None = None
    interval: Interval | None = None
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.replicates is not None:
            object.__setattr__(self, "replicates", tuple(float(r) for r in self.replicates))

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "value": self.value,
            "method": self.method,
            "inputs_digest": self.inputs_digest,
            "replicates": None if self.replicates is None else list(self.replicates),
            "interval": None
            if self.interval is None
            else {"low": self.interval.low, "high": self.interval.high, "level": self.interval.level},
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Estimate:
        try:
            iv = d.get("interval")
            return cls(
                value=float(d["value"]),
                method=str(d["method"]),
                inputs_digest=str(d["inputs_digest"]),
                replicates=None if d.get("replicates") is None else tuple(d["replicates"]),
                interval=None if iv is None else Interval(iv["low"], iv["high"], iv["level"]),
                metadata=d.get("metadata", {}),
            )
        except KeyError as exc:
            raise SchemaError(f"estimate is missing field {exc.args[0]!r}") from None


def combine_digests(*parts: str) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(p.encode())
        h.update(b"\x00")
    return h.hexdigest()
