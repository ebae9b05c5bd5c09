import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import project_path_naive
from vmc.levels import (
    HitKind,
    LevelPath,
    VirtualPathPrefix,
    first_disagreement,
    hitting_index,
    project_path,
    validate_virtual_prefix,
)


@st.composite
def complete_paths(draw, max_level=7, max_len=30):
    level = draw(st.integers(1, max_level))
    body = draw(st.lists(st.integers(1, level), min_size=1, max_size=max_len))
    if draw(st.booleans()):
        cut = draw(st.integers(1, len(body)))
        body = body[:cut] + [0] * (len(body) - cut + 1)
    return LevelPath(level, tuple(body))


def test_rejects_state_above_level():
    with pytest.raises(ValueError):
        LevelPath(2, (1, 3))


def test_rejects_escape_from_zero():
    with pytest.raises(ValueError, match="absorption"):
        LevelPath(3, (2, 0, 1))


def test_entries_past_absorption_are_zero():
    p = LevelPath(3, (2, 0), horizon=6)
    assert p.absorbed and p.complete
    assert p.entry(5) == 0


def test_undetermined_suffix():
    p = LevelPath(3, (2, 3), horizon=5)
    assert not p.complete
    assert p.entry(1) == 3 and p.entry(2) is None


@pytest.mark.parametrize(
    "states,target,k,kind,index",
    [
        ((2, 1, 2, 1), {1}, 0, HitKind.FOUND, 1),
        ((2, 1, 2, 1), {1}, 1, HitKind.FOUND, 3),
        ((2, 1, 2, 1), {1}, 2, HitKind.UNKNOWN, None),
        ((2, 1, 0), {1}, 1, HitKind.NEVER, None),
        ((2, 1, 0), {0}, 2, HitKind.FOUND, 4),
    ],
)
def test_hitting_index(states, target, k, kind, index):
    hit = hitting_index(LevelPath(2, states), target, k)
    assert hit.kind is kind
    assert hit.index == index


def test_project_level_zero_is_all_zeros():
    p = project_path(LevelPath(3, (3, 2, 3)), 0)
    assert p.entry(0) == 0 and p.entry(2) == 0


def test_project_above_level_rejected():
    with pytest.raises(ValueError):
        project_path(LevelPath(2, (1, 2)), 3)


@given(complete_paths(), st.data())
def test_projection_matches_naive_deletion(path, data):
    n = data.draw(st.integers(1, path.level))
    got = project_path(path, n)
    want = project_path_naive(path.states, n)
    if path.absorbed:  # absorbed paths are zero-padded to the horizon
        want += [0] * (path.horizon - len(want))
    assert list(got.states) == want
    assert got.level == n


@given(complete_paths(), st.data())
def test_projection_composes(path, data):
    m = data.draw(st.integers(0, path.level))
    n = data.draw(st.integers(m, path.level))
    lhs = project_path(project_path(path, n), m)
    rhs = project_path(path, m)
    assert first_disagreement(lhs, rhs) is None


@given(complete_paths())
def test_from_top_prefix_is_consistent(path):
    vp = VirtualPathPrefix.from_top(path)
    assert validate_virtual_prefix(vp) == []
    assert vp.top == path.level


def test_validate_reports_the_tampered_pair():
    vp = VirtualPathPrefix.from_top(LevelPath(5, (4, 5, 2, 3, 1, 5, 4, 1, 2, 0)))
    paths = list(vp.paths)
    bad = list(paths[4].states)
    bad[1] = 3  # was 2
    paths[4] = LevelPath(4, tuple(bad), paths[4].horizon)
    got = validate_virtual_prefix(VirtualPathPrefix(tuple(paths)))
    assert [(m.lower, m.upper, m.index) for m in got] == [(3, 4, 0), (4, 5, 1)]


def test_top_must_be_complete():
    with pytest.raises(ValueError, match="undetermined"):
        VirtualPathPrefix((LevelPath(0, (0,)), LevelPath(1, (1,), horizon=3)))
