import numpy as np
import pytest

from conftest import scalar
from psatz.errors import AlgebraMismatch, UnsupportedCombination
from psatz.poly import MatrixPoly
from psatz.quadratic_module import (ConstraintSystem, archimedean_probe, doubling_grid, known_archimedean,
                                    truncate)


def test_generators_must_be_symmetric(line):
    g = MatrixPoly.constant(line, [[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(UnsupportedCombination):
        ConstraintSystem(line, 2, [g])


def test_generators_share_the_algebra(line, plane):
    with pytest.raises(AlgebraMismatch):
        ConstraintSystem(line, 1, [MatrixPoly.generator(plane, 0)])


def test_default_names_and_weights(line):
    S = ConstraintSystem(line, 2, [MatrixPoly.generator(line, 0), MatrixPoly.identity(line, 3)])
    assert S.names == ['p1', 'p2']
    assert S.count == 2
    np.testing.assert_array_equal(S.weight(0).coefficient((0,)), [[1.0]])
    assert S.weight(2).size == 3


def test_truncation_bases(interval):
    plan = truncate(interval, 1)
    assert [e.k for e in plan.entries] == [0, 1]
    assert plan.entry(0).basis == [(0,), (1,)]
    assert plan.entry(1).basis == [(0,)]
    assert plan.dropped == []


def test_high_degree_generators_are_dropped(interval):
    plan = truncate(interval, 0)
    assert plan.dropped == [1]
    assert plan.entry(1) is None
    assert plan.entry(0).basis == [(0,)]


def test_odd_degree_generator_rounds_up(line):
    S = ConstraintSystem(line, 1, [MatrixPoly.generator(line, 0)])
    assert truncate(S, 2).entry(1).basis == [(0,), (1,)]


def test_homogeneous_truncation_needs_even_forms(line, plane):
    S = ConstraintSystem(line, 1, [scalar(line, {(0,): 1.0, (2,): -1.0})])
    with pytest.raises(UnsupportedCombination):
        truncate(S, 2, homogeneous=True)
    forms = ConstraintSystem(plane, 1, [MatrixPoly.scalar(plane, {(2, 0): 1.0, (0, 2): -1.0})])
    plan = truncate(forms, 2, homogeneous=True)
    assert plan.entry(0).basis == [(2, 0), (1, 1), (0, 2)]
    assert plan.entry(1).basis == [(1, 0), (0, 1)]


def test_contains(interval):
    assert interval.contains([0.5])
    assert not interval.contains([1.5])


def test_permuted_keeps_names(line):
    gens = [MatrixPoly.generator(line, 0), scalar(line, {(0,): 1.0, (1,): -1.0})]
    S = ConstraintSystem(line, 1, gens, ['left', 'right'])
    flipped = S.permuted([1, 0])
    assert flipped.names == ['right', 'left']
    assert flipped.generators[0] is gens[1]


def test_doubling_grid():
    assert doubling_grid(16.0) == [1.0, 2.0, 4.0, 8.0, 16.0]
    assert doubling_grid(0.5) == []


def test_torus_is_known_archimedean(circle, line):
    assert known_archimedean(ConstraintSystem(circle, 1))
    assert not known_archimedean(ConstraintSystem(line, 1))
    with pytest.raises(UnsupportedCombination):
        archimedean_probe(ConstraintSystem(circle, 1))


def test_probe_gives_up_on_half_line(line):
    S = ConstraintSystem(line, 1, [MatrixPoly.generator(line, 0)], ['half_line'])
    result = archimedean_probe(S, t_max=1, K_max=2.0, workers=1)
    assert not result['found']
    assert not result['conclusive']
    assert [(c['t'], c['K']) for c in result['tried']] == [(1, 1.0), (1, 2.0)]


@pytest.mark.slow
def test_probe_finds_ball_for_unit_interval(line):
    S = ConstraintSystem(line, 1, [MatrixPoly.generator(line, 0), scalar(line, {(0,): 1.0, (1,): -1.0})],
                         ['left', 'right'])
    result = archimedean_probe(S, t_max=2, K_max=4.0, workers=1)
    assert result['found']
    assert result['level'] == 2
    assert result['K'] in (1.0, 2.0)
    assert result['report']['accepted']


@pytest.mark.slow
def test_half_line_has_no_ball_at_any_tried_level(line):
    S = ConstraintSystem(line, 1, [MatrixPoly.generator(line, 0)], ['half_line'])
    result = archimedean_probe(S, t_max=2, K_max=2.0, workers=1)
    assert not result['found']
    assert sorted({c['t'] for c in result['tried']}) == [1, 2]
    assert all(c['status'] != 'certified' for c in result['tried'])


@pytest.mark.slow
def test_ball_search_ignores_generator_order(line):
    S = ConstraintSystem(line, 1, [MatrixPoly.generator(line, 0), scalar(line, {(0,): 1.0, (1,): -1.0})],
                         ['left', 'right'])
    forward = archimedean_probe(S, t_max=2, K_max=4.0, workers=1)
    backward = archimedean_probe(S.permuted([1, 0]), t_max=2, K_max=4.0, workers=1)
    assert backward['found'] == forward['found']
    assert (backward['level'], backward['K']) == (forward['level'], forward['K'])
    assert [c['status'] for c in backward['tried']] == [c['status'] for c in forward['tried']]
