import json
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vmc.families import infinite_clique, two_ladders
from vmc.io import (
    atomic_write,
    csv_text,
    path_from_json,
    path_to_json,
    prefix_from_json,
    prefix_to_json,
    tag_from_json,
    vid_from_spec,
    vid_to_spec,
)
from vmc.kernels import Balayage, ModelError
from vmc.levels import LevelPath, VirtualPathPrefix
from vmc.simplex import delta_point
from vmc.tags import DeltaPoint, LimitPoint, Mixture, Row, Zero, tag_to_json

TAGS = [
    Zero(),
    DeltaPoint(3),
    Row(2),
    LimitPoint("even", 2, 0),
    Mixture(((F(1, 3), DeltaPoint(1)), (F(2, 3), LimitPoint("U")))),
]


@pytest.mark.parametrize("tag", TAGS)
def test_tag_round_trip(tag):
    assert tag_from_json(json.loads(json.dumps(tag_to_json(tag)))) == tag


def test_limit_label_resolved_from_catalog():
    pi = Balayage.of_vtm(two_ladders())
    assert tag_from_json({"kind": "limit", "label": "odd"}, pi) == LimitPoint("odd", 2, 1)
    with pytest.raises(ModelError):
        tag_from_json({"kind": "limit", "label": "U"}, pi)


@pytest.mark.parametrize(
    "spec", [{"kind": "delta"}, {"kind": "delta", "a": -1}, {"kind": "mixture", "components": []}, {"kind": "what"}, []]
)
def test_bad_vid_specs(spec):
    with pytest.raises(ModelError):
        tag_from_json(spec)


def test_explicit_vid_round_trip():
    K = infinite_clique()
    nu = delta_point(Balayage.of_vtm(K), 2, 5).with_tag(None)
    spec = vid_to_spec(nu)
    assert spec["kind"] == "explicit"
    assert vid_from_spec(json.loads(json.dumps(spec)), K, 5) == nu


@st.composite
def level_paths(draw):
    level = draw(st.integers(1, 6))
    body = draw(st.lists(st.integers(1, level), min_size=0, max_size=12))
    if draw(st.booleans()):
        body.append(0)
    horizon = len(body) + draw(st.integers(0, 4))
    return LevelPath(level, tuple(body), horizon)


@given(level_paths())
def test_path_round_trip(p):
    assert path_from_json(json.loads(json.dumps(path_to_json(p)))) == p


def test_prefix_round_trip():
    vp = VirtualPathPrefix.from_top(LevelPath(5, (4, 5, 2, 3, 1, 5, 4, 1, 2, 0)))
    assert prefix_from_json(prefix_to_json(vp)) == vp


def test_path_rejects_values_after_undetermined():
    with pytest.raises(ModelError):
        path_from_json({"level": 2, "entries": [1, None, 2]})
    with pytest.raises(ModelError):
        path_from_json({"level": 2, "entries": [1, 2, None], "determined_len": 3})


def test_csv_decimal_columns():
    text = csv_text(["a", "x"], [(1, F(1, 3))], rational=("x",))
    assert text.splitlines() == ["a,x,x_dec", "1,1/3,0.333333333333"]


def test_atomic_write_replaces(tmp_path):
    target = tmp_path / "sub" / "out.json"
    atomic_write(target, "one")
    atomic_write(target, "two")
    assert target.read_text() == "two"
    assert [p.name for p in target.parent.iterdir()] == ["out.json"]
