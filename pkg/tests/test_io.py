import json

import numpy as np
import pytest

from gnsum.datamodel import Estimate, Interval
from gnsum.errors import NonpositiveWeight, SchemaError, UnknownGroup, VisibilityExceedsTies
from gnsum.io import (
    load_estimate,
    load_frame_survey,
    load_hidden_survey,
    load_registry,
    save_estimate,
    save_frame_survey,
    save_hidden_survey,
    save_registry,
)


def _write(path, text):
    path.write_text(text)
    return path


def test_frame_roundtrip_is_exact(tmp_path, frame, registry):
    w = frame.with_weights(np.array([1 / 3, 0.1, 2.5e-7, 7.0]))
    p = tmp_path / "f.csv"
    save_frame_survey(w, p)
    back = load_frame_survey(p, registry)
    assert back.weight.tobytes() == w.weight.tobytes()
    assert np.array_equal(back.y_probe, w.y_probe)
    assert np.array_equal(back.membership, w.membership)
    assert back.ids == w.ids and back.psu == w.psu


def test_hidden_roundtrip(tmp_path, hidden, registry):
    p = tmp_path / "h.csv"
    save_hidden_survey(hidden, p)
    back = load_hidden_survey(p, registry)
    assert back.digest() == hidden.digest()


def test_registry_roundtrip(tmp_path, registry):
    p = tmp_path / "r.json"
    save_registry(registry, p)
    assert load_registry(p) == registry


def test_estimate_roundtrip(tmp_path):
    e = Estimate(3.25, "basic", "d", (1.0, 2.0, 3.0), Interval(1.0, 3.0, 0.9), {"seed": 1})
    p = tmp_path / "e.json"
    save_estimate(e, p)
    assert load_estimate(p) == e
    assert json.loads(p.read_text())["schema_version"] == 1


def test_inline_probe_map(tmp_path, registry):
    p = _write(tmp_path / "f.csv",
               'id,weight,stratum,psu,y_hidden,y_probe\n'
               'r1,30,s,p1,2,"{a:5,b:0}"\n'
               'r2,30,s,p2,0,"{b:1, a:2}"\n')
    s = load_frame_survey(p, registry)
    assert s.group_ids == ("a", "b")
    assert s.y_probe.tolist() == [[5, 0], [2, 1]]


def test_nonpositive_weight_row_named(tmp_path, registry):
    p = _write(tmp_path / "f.csv", "id,weight,stratum,psu,y_hidden,y_a\nr1,1,s,p,0,1\nr7,-2,s,p,0,1\n")
    with pytest.raises(NonpositiveWeight, match=r"NonpositiveWeight\(r7\)"):
        load_frame_survey(p, registry)


def test_missing_value_rejected(tmp_path, registry):
    p = _write(tmp_path / "f.csv", "id,weight,stratum,psu,y_hidden,y_a\nr1,1,s,p,,1\n")
    with pytest.raises(SchemaError, match="missing value"):
        load_frame_survey(p, registry)


def test_missing_column_and_unknown_group(tmp_path, registry):
    p = _write(tmp_path / "f.csv", "id,weight,stratum,y_hidden\nr1,1,s,0\n")
    with pytest.raises(SchemaError, match="psu"):
        load_frame_survey(p, registry)
    p = _write(tmp_path / "g.csv", "id,weight,stratum,psu,y_hidden,y_zz\nr1,1,s,p,0,1\n")
    with pytest.raises(UnknownGroup):
        load_frame_survey(p, registry)


def test_extra_columns_pass_through(tmp_path, registry):
    p = _write(tmp_path / "f.csv",
               "id,weight,stratum,psu,y_hidden,y_a,offframe_contacts\nr1,60,s,p,0,1,4\n")
    s = load_frame_survey(p, registry)
    assert s.extra == {"offframe_contacts": ("4",)}
    out = tmp_path / "o.csv"
    save_frame_survey(s, out)
    assert "offframe_contacts" in out.read_text().splitlines()[0]


def test_top_code(tmp_path, registry):
    p = _write(tmp_path / "f.csv", "id,weight,stratum,psu,y_hidden,y_a\nr1,60,s,p,45,31\n")
    s = load_frame_survey(p, registry, top_code=30)
    assert s.y_hidden.tolist() == [30] and s.y_probe.tolist() == [[30]]


def test_hidden_visibility_violation(tmp_path, registry):
    p = _write(tmp_path / "h.csv", "id,rel_weight,group_flag,y_a,v_a\nh1,1,,2,3\n")
    with pytest.raises(VisibilityExceedsTies):
        load_hidden_survey(p, registry)


def test_missing_file(tmp_path, registry):
    with pytest.raises(SchemaError, match="not found"):
        load_frame_survey(tmp_path / "nope.csv", registry)
