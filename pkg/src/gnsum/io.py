"""File formats: survey CSVs, registry and estimate JSON.

Frame CSV columns are ``id,weight,stratum,psu,y_hidden`` followed by one
``y_<gid>`` count column per probe group and optional ``member_<gid>`` flags.
Hidden CSV columns are ``id,rel_weight,group_flag`` followed by ``y_<gid>``
and ``v_<gid>`` pairs.  Any other column is kept verbatim in ``extra`` so
that, for example, off-frame contact counts survive a load/save cycle.

Floats are written with ``repr`` so every value round-trips bit for bit.
"""

from __future__ import annotations

import csv
import json
import re
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from .datamodel import (
    Estimate,
    FrameSurvey,
    HiddenSurvey,
    KnownPopulationRegistry,
)
from .errors import (
    EmptySample,
    NonpositiveWeight,
    SchemaError,
    UnknownGroup,
    ValidationError,
)

FRAME_FIXED = ("id", "weight", "stratum", "psu", "y_hidden")
HIDDEN_FIXED = ("id", "rel_weight", "group_flag")
_MAP_ITEM = re.compile(r"\s*([^:{},\s]+)\s*:\s*([^,}]*)\s*")


def _read_rows(path: str | Path) -> tuple[list[str], list[list[str]]]:
    p = Path(path)
    if not p.exists():
        raise SchemaError(f"{p}: file not found")
    with p.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return [], []
        rows = [r for r in reader if r]
    return [h.strip() for h in header], rows


def _count(value: str, row_id: str, column: str) -> int:
    try:
        out = int(value.strip())
    except ValueError:
        raise SchemaError(
            f"row {row_id!r}, column {column!r}: {value!r} is not an integer count"
        ) from None
    if out < 0:
        raise SchemaError(f"row {row_id!r}, column {column!r}: counts must be >= 0")
    return out


def _weight(value: str, row_id: str, column: str) -> float:
    try:
        w = float(value)
    except ValueError:
        raise SchemaError(f"row {row_id!r}, column {column!r}: {value!r} is not a number") from None
    if not np.isfinite(w) or w <= 0:
        raise NonpositiveWeight(row_id, f"{column}={value}")
    return w


def _flag(value: str, row_id: str, column: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "t", "yes", "y"):
        return True
    if v in ("0", "false", "f", "no", "n"):
        return False
    raise SchemaError(f"row {row_id!r}, column {column!r}: {value!r} is not a boolean")


def _parse_map(text: str, row_id: str) -> dict[str, str]:
    body = text.strip()
    if not (body.startswith("{") and body.endswith("}")):
        raise SchemaError(f"row {row_id!r}: probe map {text!r} must look like {{a:1,b:2}}")
    body = body[1:-1].strip()
    if not body:
        return {}
    out = {}
    for item in body.split(","):
        m = _MAP_ITEM.fullmatch(item)
        if m is None:
            raise SchemaError(f"row {row_id!r}: malformed probe map entry {item!r}")
        out[m.group(1).strip("\"'")] = m.group(2)
    return out


def _check_groups(gids: Sequence[str], registry: KnownPopulationRegistry) -> None:
    known = set(registry.group_ids)
    for g in gids:
        if g not in known:
            raise UnknownGroup(f"column for unknown probe group {g!r}")


# --------------------------------------------------------------------------
# Registry
# --------------------------------------------------------------------------


def load_registry(path: str | Path) -> KnownPopulationRegistry:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise SchemaError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    return KnownPopulationRegistry.from_dict(data)


def save_registry(reg: KnownPopulationRegistry, path: str | Path) -> None:
    Path(path).write_text(json.dumps(reg.to_dict(), indent=2) + "\n")


# --------------------------------------------------------------------------
# Frame survey
# --------------------------------------------------------------------------


def load_frame_survey(
    path: str | Path,
    registry: KnownPopulationRegistry,
    top_code: int | None = None,
) -> FrameSurvey:
    """Parse a frame-survey CSV, optionally top-coding every count."""
    header, rows = _read_rows(path)
    missing = [c for c in FRAME_FIXED if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
    if len(set(header)) != len(header):
        raise SchemaError(f"{path}: duplicate column names")
    col = {h: k for k, h in enumerate(header)}
    inline_map = "y_probe" in col
    y_cols = [h for h in header if h.startswith("y_") and h not in ("y_hidden", "y_probe")]
    m_cols = [h for h in header if h.startswith("member_")]
    gids = [h[2:] for h in y_cols]
    mids = [h[7:] for h in m_cols]
    other = [h for h in header if h not in FRAME_FIXED and h not in y_cols
             and h not in m_cols and h != "y_probe"]
    if inline_map:
        if y_cols:
            raise SchemaError(f"{path}: use either a y_probe map or y_<gid> columns, not both")
    else:
        _check_groups(gids, registry)
    _check_groups(mids, registry)

    ids, weights, strata, psus, yh = [], [], [], [], []
    yp: list[dict[str, int]] = []
    mem: list[dict[str, bool]] = []
    extra: dict[str, list[str]] = {h: [] for h in other}
    for lineno, r in enumerate(rows, start=2):
        if len(r) != len(header):
            raise SchemaError(f"{path}: line {lineno} has {len(r)} fields, expected {len(header)}")
        rid = r[col["id"]].strip()
        if not rid:
            raise SchemaError(f"{path}: line {lineno} has an empty id")
        for h in header:
            if h in other or h.startswith("member_"):
                continue
            if r[col[h]].strip() == "":
                raise SchemaError(f"row {rid!r}, column {h!r}: missing value")
        ids.append(rid)
        weights.append(_weight(r[col["weight"]], rid, "weight"))
        strata.append(r[col["stratum"]].strip())
        psus.append(r[col["psu"]].strip())
        yh.append(_count(r[col["y_hidden"]], rid, "y_hidden"))
        if inline_map:
            parsed = _parse_map(r[col["y_probe"]], rid)
            _check_groups(list(parsed), registry)
            yp.append({g: _count(v, rid, f"y_probe[{g}]") for g, v in parsed.items()})
        else:
            yp.append({g: _count(r[col[f"y_{g}"]], rid, f"y_{g}") for g in gids})
        mem.append({g: _flag(r[col[f"member_{g}"]], rid, f"member_{g}")
                    for g in mids if r[col[f"member_{g}"]].strip() != ""})
        for h in other:
            extra[h].append(r[col[h]])

    if inline_map:
        seen: list[str] = []
        for d in yp:
            for g in d:
                if g not in seen:
                    seen.append(g)
        for d, rid in zip(yp, ids):
            absent = [g for g in seen if g not in d]
            if absent:
                raise SchemaError(f"row {rid!r}: missing probe response(s) {', '.join(absent)}")
        gids = seen
    y_arr = np.array([[d[g] for g in gids] for d in yp], dtype=np.int64).reshape(len(ids), len(gids))
    yh_arr = np.array(yh, dtype=np.int64)
    if top_code is not None:
        if top_code < 0:
            raise ValidationError("top_code must be non-negative")
        y_arr = np.minimum(y_arr, top_code)
        yh_arr = np.minimum(yh_arr, top_code)
    membership = None
    if mids:
        membership = np.zeros((len(ids), len(gids)), dtype=bool)
        gpos = {g: j for j, g in enumerate(gids)}
        for g in mids:
            if g not in gpos:
                raise SchemaError(f"member_{g} has no matching y_{g} column")
        for i, d in enumerate(mem):
            for g, flag in d.items():
                membership[i, gpos[g]] = flag
    return FrameSurvey(
        tuple(ids), np.array(weights), tuple(strata), tuple(psus), yh_arr,
        tuple(gids), y_arr, membership, extra={h: tuple(v) for h, v in extra.items()},
    )


def save_frame_survey(s: FrameSurvey, path: str | Path) -> None:
    header = list(FRAME_FIXED) + [f"y_{g}" for g in s.group_ids]
    if s.membership is not None:
        header += [f"member_{g}" for g in s.group_ids]
    header += list(s.extra)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i, rid in enumerate(s.ids):
            row: list[Any] = [rid, repr(float(s.weight[i])), s.stratum[i], s.psu[i], int(s.y_hidden[i])]
            row += [int(v) for v in s.y_probe[i]]
            if s.membership is not None:
                row += [int(v) for v in s.membership[i]]
            row += [s.extra[h][i] for h in s.extra]
            w.writerow(row)


# --------------------------------------------------------------------------
# Hidden survey
# --------------------------------------------------------------------------


def load_hidden_survey(
    path: str | Path,
    registry: KnownPopulationRegistry,
    top_code: int | None = None,
    weight_scale_known: bool = False,
) -> HiddenSurvey:
    """Parse a hidden-survey CSV; rows with v > y for any group are rejected."""
    header, rows = _read_rows(path)
    if not header:
        raise EmptySample(f"{path}: empty hidden survey file")
    missing = [c for c in ("id", "rel_weight") if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
    col = {h: k for k, h in enumerate(header)}
    gids = [h[2:] for h in header if h.startswith("y_")]
    vids = [h[2:] for h in header if h.startswith("v_")]
    if sorted(gids) != sorted(vids):
        raise SchemaError(f"{path}: every y_<gid> column needs a matching v_<gid> column")
    _check_groups(gids, registry)
    other = [h for h in header if h not in HIDDEN_FIXED and not h.startswith(("y_", "v_"))]
    has_flag = "group_flag" in col

    ids, weights, flags = [], [], []
    ys, vs = [], []
    extra: dict[str, list[str]] = {h: [] for h in other}
    for lineno, r in enumerate(rows, start=2):
        if len(r) != len(header):
            raise SchemaError(f"{path}: line {lineno} has {len(r)} fields, expected {len(header)}")
        rid = r[col["id"]].strip()
        if not rid:
            raise SchemaError(f"{path}: line {lineno} has an empty id")
        ids.append(rid)
        weights.append(_weight(r[col["rel_weight"]], rid, "rel_weight"))
        if has_flag:
            raw = r[col["group_flag"]].strip()
            flags.append(None if raw == "" else int(_flag(raw, rid, "group_flag")))
        for g in gids:
            for pre in ("y_", "v_"):
                if r[col[pre + g]].strip() == "":
                    raise SchemaError(f"row {rid!r}, column {pre + g!r}: missing value")
        ys.append([_count(r[col[f"y_{g}"]], rid, f"y_{g}") for g in gids])
        vs.append([_count(r[col[f"v_{g}"]], rid, f"v_{g}") for g in gids])
        for h in other:
            extra[h].append(r[col[h]])
    if not ids:
        raise EmptySample(f"{path}: hidden survey has no rows")
    y = np.array(ys, dtype=np.int64).reshape(len(ids), len(gids))
    v = np.array(vs, dtype=np.int64).reshape(len(ids), len(gids))
    if top_code is not None:
        y = np.minimum(y, top_code)
        v = np.minimum(v, top_code)
    group_flag = None
    if has_flag and any(f is not None for f in flags):
        if any(f is None for f in flags):
            raise SchemaError(f"{path}: group_flag must be given for every row or none")
        group_flag = np.array(flags, dtype=np.int64)
    return HiddenSurvey(
        tuple(ids), np.array(weights), tuple(gids), y, v, group_flag,
        weight_scale_known, {h: tuple(x) for h, x in extra.items()},
    )


def save_hidden_survey(h: HiddenSurvey, path: str | Path) -> None:
    header = list(HIDDEN_FIXED) + [f"y_{g}" for g in h.group_ids] + [f"v_{g}" for g in h.group_ids]
    header += list(h.extra)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i, rid in enumerate(h.ids):
            flag = "" if h.group_flag is None else int(h.group_flag[i])
            row: list[Any] = [rid, repr(float(h.rel_weight[i])), flag]
            row += [int(x) for x in h.y_probe[i]] + [int(x) for x in h.vis[i]]
            row += [h.extra[c][i] for c in h.extra]
            w.writerow(row)


# --------------------------------------------------------------------------
# Estimates and generic JSON
# --------------------------------------------------------------------------


def save_estimate(est: Estimate, path: str | Path) -> None:
    Path(path).write_text(json.dumps(est.to_dict(), indent=2) + "\n")


def load_estimate(path: str | Path) -> Estimate:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise SchemaError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    return Estimate.from_dict(data)


def load_json(path: str | Path) -> Mapping[str, Any]:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise SchemaError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
