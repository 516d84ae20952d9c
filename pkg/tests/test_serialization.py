"""
Workspace documents: schema validation, rationals and canonical output.

Usage:
  python -m pytest tests/test_serialization.py -v
"""

import json
import os
from fractions import Fraction

import pytest

from conftest import FIXTURES, fixture_path, load_workspace
from troptrack.errors import ChartMismatch, SchemaError, TrackInvalid
from troptrack.modules.tracks import freeway
from troptrack.utils.serialization import (
    dumps,
    format_rational,
    load_document,
    loop_from_doc,
    loop_to_doc,
    parse_rational,
    point_from_doc,
    point_to_doc,
    to_jsonable,
    track_from_doc,
    track_to_doc,
    workspace_from_doc,
)


def _s04_doc():
    return load_document(fixture_path("s04"))


# ─────────────────────────────────────────────────────────────
# Rationals and canonical JSON
# ─────────────────────────────────────────────────────────────

def test_rationals_travel_as_p_over_q():
    assert format_rational(Fraction(-2, 4)) == "-1/2"
    assert format_rational(3) == "3/1"
    assert parse_rational("6/4") == Fraction(3, 2)
    assert parse_rational(" -5 ") == -5
    assert parse_rational(7) == 7


@pytest.mark.parametrize("bad", ["abc", "1/0", True, 1.5, None])
def test_bad_rationals_raise(bad):
    with pytest.raises(SchemaError):
        parse_rational(bad)


def test_dumps_is_canonical():
    text = dumps({"b": Fraction(1, 3), "a": {2, 1}})
    assert text == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": "1/3"\n}\n'


def test_floats_keep_ten_significant_digits():
    assert to_jsonable(0.962423650119206) == 0.9624236501


# ─────────────────────────────────────────────────────────────
# Workspaces
# ─────────────────────────────────────────────────────────────

def test_s04_workspace_contents():
    ws = load_workspace("s04")
    assert ws.name == "s04"
    assert ws.triangulation.arcs == (1, 2, 3, 4, 5, 6)
    assert ws.points["origin"].values == (0,) * 6
    assert ws.points["generic"].values[1] == Fraction(1, 2)
    assert ws.tracks["freeway"] == freeway(ws.triangulation)


@pytest.mark.parametrize("filename", sorted(os.listdir(FIXTURES)))
def test_every_bundled_fixture_loads(filename):
    """Sides without an explicit orientation flag glue in the default direction"""
    ws = load_workspace(filename[: -len(".json")])
    assert ws.triangulation.arcs


def test_twist_loop_normalizes_the_relabeling(twist):
    word = twist.loops["twist"]
    assert word.flips == (1, 6)
    assert word.sigma_map == {2: 3, 3: 2, 4: 5, 5: 4}


def test_documents_round_trip_through_the_converters(twist):
    tri = twist.triangulation
    word = twist.loops["twist"]
    assert loop_from_doc(loop_to_doc(word, tri), tri) == word
    point = twist.points["x1"]
    assert point_from_doc(point_to_doc(point), tri) == point
    track = freeway(tri)
    assert track_from_doc(track_to_doc(track), tri) == track


def test_unknown_fields_are_rejected():
    doc = _s04_doc()
    doc["surface"]["orientable"] = True
    with pytest.raises(SchemaError) as err:
        workspace_from_doc(doc)
    assert err.value.details["errors"]


def test_unsupported_schema_version():
    doc = _s04_doc()
    doc["schema_version"] = 2
    with pytest.raises(SchemaError):
        workspace_from_doc(doc)


def test_point_with_a_bad_coordinate_is_rejected(s04):
    with pytest.raises(SchemaError):
        point_from_doc({"kind": "A", "coords": {"1": "x"}}, s04)


def test_point_on_another_chart_is_rejected(s04):
    coords = {str(a): "0/1" for a in s04.arcs}
    with pytest.raises(ChartMismatch):
        point_from_doc({"chart": "elsewhere", "kind": "A", "coords": coords}, s04)


def test_track_type_must_match_its_corners(s04):
    triangles = {t: {"type": "III", "absent": []} for t in s04.triangle_ids}
    triangles["t1"] = {"type": "II", "absent": []}
    with pytest.raises(SchemaError):
        track_from_doc({"triangles": triangles}, s04)


def test_track_missing_a_triangle_is_invalid(s04):
    triangles = {t: {"type": "III", "absent": []} for t in s04.triangle_ids[:3]}
    with pytest.raises(TrackInvalid):
        track_from_doc({"triangles": triangles}, s04)


def test_word_step_is_flip_or_perm(s04):
    with pytest.raises(SchemaError):
        loop_from_doc({"word": [{"flip": 1, "perm": [1, 2, 3, 4, 5, 6]}]}, s04)
    with pytest.raises(SchemaError):
        loop_from_doc({"word": [{"flip": 1}], "power": 0}, s04)


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(SchemaError):
        load_document(tmp_path / "nope.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(SchemaError):
        load_document(broken)


def test_error_payload_is_json(s04):
    try:
        point_from_doc({"kind": "Z", "coords": {}}, s04)
    except SchemaError as e:
        payload = json.loads(dumps(e.to_dict()))
        assert payload["error"] == "schema_error"
    else:
        pytest.fail("expected SchemaError")
