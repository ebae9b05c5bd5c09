import json
import os
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import rational_dist
from oracles import hitting_probability_iterative
from vmc.families import classical_embed, down_from_infinity, infinite_clique, two_ladders
from vmc.kernels import Balayage, LevelDistribution, MarginalSequence, StochasticLevelMatrix, VTMPrefix, project_matrix
from vmc.levels import LevelPath, VirtualPathPrefix, validate_virtual_prefix
from vmc.simplex import backward_extend, delta_point, materialize, row_of_vtm, zero_point
from vmc.tags import DeltaPoint, LimitPoint
from vmc.vmcsim import (
    UNDEFINED,
    UNDETERMINED,
    IncompatiblePair,
    SimulationConfig,
    Verdict,
    batch_decomposition,
    classify_state,
    closed_level,
    hitting_probabilities,
    irreducible,
    sak_law,
    sample_top_paths,
    sample_vmc,
    staircase_decomposition,
    verdict_for,
)

EXAMPLE_TOP = (4, 5, 2, 3, 1, 5, 4, 1, 2, 0)


def vtm_from_top(K):
    levels = [K]
    while levels[-1].level:
        levels.append(project_matrix(levels[-1]))
    return VTMPrefix(levels[::-1])


@st.composite
def random_pairs(draw, max_level=5):
    n = draw(st.integers(2, max_level))
    rows = [[F(1)] + [F(0)] * n] + [draw(rational_dist(n)) for _ in range(n)]
    K = vtm_from_top(StochasticLevelMatrix(n, rows))
    nu = MarginalSequence(tuple(backward_extend(LevelDistribution(n, draw(rational_dist(n))), Balayage.of_vtm(K))))
    return nu, K


def test_worked_example_decomposition(data_dir):
    vp = VirtualPathPrefix.from_top(LevelPath(5, EXAMPLE_TOP))
    dec = staircase_decomposition(vp, amax=2, kmax=1)
    assert dec.s0.entries == (0, 1, 2, 2, 4, 4)
    assert dec.sak[(1, 0)].entries == (1, 1, 1, 4, 5)
    assert dec.sak[(1, 1)].entries == (0, 2, 2, 2, 2)
    assert dec.sak[(2, 0)].entries == (1, 3, 3, 3)
    assert dec.sak[(2, 1)].entries == (0, 0, 0, 0)
    with open(os.path.join(data_dir, "worked_example_expected.json")) as fh:
        expected = json.load(fh)
    assert list(dec.s0.entries) == expected["s0"]
    for key, val in expected["sak"].items():
        a, k = map(int, key.split(","))
        assert list(dec.sak[(a, k)].entries) == val["entries"]


def test_decomposition_visit_counts():
    vp = VirtualPathPrefix.from_top(LevelPath(5, EXAMPLE_TOP))
    dec = staircase_decomposition(vp, amax=5, kmax=2)
    assert dec.visits[1].count == 2 and dec.visits[1].final
    assert all(v.count == 2 for v in dec.level_visits[1])


def test_undetermined_entries_without_absorption():
    vp = VirtualPathPrefix.from_top(LevelPath(3, (3, 1, 3, 3)))
    dec = staircase_decomposition(vp, amax=3, kmax=1)
    assert dec.sak[(1, 0)].entries == (None, None, 3)
    assert dec.sak[(1, 1)].entries == (None, None, None)
    assert all(s.satisfies_staircase() for s in dec.sak.values())


def test_batch_matches_pure_on_example():
    paths = np.array([EXAMPLE_TOP])
    b = batch_decomposition(paths, 5, [(1, 0), (1, 1), (2, 0), (2, 1)])
    assert list(b.s0[0]) == [0, 1, 2, 2, 4, 4]
    assert list(b.sak[(1, 0)][0]) == [UNDEFINED, 1, 1, 1, 4, 5]
    assert list(b.sak[(2, 1)][0]) == [UNDEFINED, UNDEFINED, 0, 0, 0, 0]


@given(random_pairs(), st.integers(0, 2**32 - 1))
def test_batch_matches_pure_on_random_paths(pair, seed):
    nu, K = pair
    L = nu.top
    paths = sample_top_paths(nu, K, SimulationConfig(L, 12, 6, seed))
    pairs = [(a, k) for a in range(1, L + 1) for k in range(3)]
    batch = batch_decomposition(paths, L, pairs)
    for r in range(paths.shape[0]):
        vp = VirtualPathPrefix.from_top(LevelPath(L, tuple(paths[r])))
        assert validate_virtual_prefix(vp) == []
        dec = staircase_decomposition(vp, amax=L, kmax=2)
        want0 = [UNDETERMINED if x is None else x for x in dec.s0.entries]
        assert list(batch.s0[r]) == want0
        for (a, k), ps in dec.sak.items():
            want = [UNDEFINED] * a + [UNDETERMINED if x is None else x for x in ps.entries]
            assert list(batch.sak[(a, k)][r]) == want


@given(random_pairs(), st.integers(0, 1000))
def test_sampled_paths_use_positive_transitions(pair, seed):
    nu, K = pair
    L = nu.top
    paths = sample_top_paths(nu, K, SimulationConfig(L, 30, 20, seed))
    KL = K.level(L)
    for row in paths:
        assert nu[L][int(row[0])] > 0
        for x, y in zip(row[:-1], row[1:]):
            assert KL.rows[int(x)][int(y)] > 0


def test_sampling_independent_of_chunking_and_workers():
    K = infinite_clique()
    nu = delta_point(Balayage.of_vtm(K), 1, 6)
    base = sample_top_paths(nu, K, SimulationConfig(6, 40, 50, seed=5))
    chunked = sample_top_paths(nu, K, SimulationConfig(6, 40, 50, seed=5, chunk=7))
    parallel = sample_top_paths(nu, K, SimulationConfig(6, 40, 50, seed=5, chunk=10, workers=2))
    assert (base == chunked).all() and (base == parallel).all()
    one = sample_vmc(nu, K, 6, 40, seed=5, replicate=17)
    assert tuple(base[17]) == one[6].states


def test_incompatible_pair_rejected():
    K = infinite_clique()
    nu = delta_point(Balayage.of_vtm(two_ladders()), 3, 5)
    with pytest.raises(IncompatiblePair):
        sample_top_paths(nu, K, SimulationConfig(5, 10))


@pytest.mark.parametrize(
    "q,p,verdict",
    [(1, 1, Verdict.INFINITELY), (1, 0, Verdict.ONCE), (0, 0, Verdict.NEVER), (F(1, 2), 1, Verdict.RANDOMLY), (1, F(1, 3), Verdict.RANDOMLY)],
)
def test_verdict_table(q, p, verdict):
    assert verdict_for(F(q), F(p)) is verdict


def test_classical_random_visits():
    K = classical_embed([["1", "0", "0"], ["1/2", "0", "1/2"], ["0", "1", "0"]])
    nu = delta_point(Balayage.of_vtm(K), 1, 4)
    c1 = classify_state(nu, K, 1)
    assert (c1.qa, c1.pa, c1.verdict) == (1, F(1, 2), Verdict.RANDOMLY)
    c2 = classify_state(nu, K, 2)
    assert (c2.qa, c2.pa) == (F(1, 2), F(1, 2))
    assert classify_state(nu, K, 3).verdict is Verdict.NEVER
    assert c1.survival(3) == F(1, 8)


@given(random_pairs(), st.data())
def test_hitting_probabilities_agree_with_value_iteration(pair, data):
    _, K = pair
    L = K.top
    a = data.draw(st.integers(1, L))
    h = hitting_probabilities(K.level(a), a)
    rows = [list(r) for r in K.level(a).rows]
    for x in range(a + 1):
        assert abs(float(h[x]) - hitting_probability_iterative(rows, a, x)) < 1e-6


@pytest.mark.parametrize("make", [infinite_clique, two_ladders])
def test_delta_one_is_infinitely_visited(make):
    K = make()
    nu = delta_point(Balayage.of_vtm(K), 1, 12)
    for a in range(1, 13):
        c = classify_state(nu, K, a)
        assert (c.qa, c.pa) == (1, 1)


def test_zero_vid_never_visits():
    K = infinite_clique()
    c = classify_state(zero_point(5), K, 3)
    assert c.verdict is Verdict.NEVER


def test_state_zero_convention():
    assert classify_state(zero_point(3), infinite_clique(), 0).verdict is Verdict.INFINITELY


def test_irreducibility():
    assert irreducible(infinite_clique(), 10)
    assert irreducible(down_from_infinity(["1/2"]), 10)
    K = classical_embed([["1", "0", "0"], ["1/2", "0", "1/2"], ["0", "1", "0"]])
    assert not irreducible(K, 4)
    assert not closed_level(K.level(2))


def test_sak_law_mixes_row_and_zero():
    K = classical_embed([["1", "0", "0"], ["1/2", "0", "1/2"], ["0", "1", "0"]])
    nu = delta_point(Balayage.of_vtm(K), 1, 4)
    law = sak_law(nu, K, 1, 1, 4)
    row = row_of_vtm(K, 1, 4)
    for n in range(1, 5):
        for b in range(n + 1):
            expect = F(1, 2) * row[n][b] + (F(1, 2) if b == 0 else 0)
            assert law[n][b] == expect
