import numpy as np
import pytest

from psatz.certify import (_summarize, default_levels, fejer_riesz_certify, lift_reznick_certificate, nnsd_certify,
                           putinar_certify, reznick_certify, strict_to_nnsd)
from psatz.errors import AlgebraMismatch, SizeMismatch, UnsupportedCombination
from psatz.gram import CLOSURE, NNSD, REZNICK, STRICT, Certificate, GramBlock
from psatz.moments import refute
from psatz.poly import AlgebraSpec, MatrixPoly, mp_adjoint
from psatz.quadratic_module import ConstraintSystem
from psatz.verify import soundness_check, verify_certificate


def test_default_levels(three_plus_x):
    assert default_levels(three_plus_x) == [1, 2, 3, 4]
    assert default_levels(three_plus_x, span=0) == [1]


def test_input_checks(line, plane, interval, three_plus_x, circle):
    with pytest.raises(AlgebraMismatch):
        putinar_certify(MatrixPoly.generator(plane, 0), interval)
    with pytest.raises(SizeMismatch):
        putinar_certify(MatrixPoly.identity(line, 2), interval)
    with pytest.raises(UnsupportedCombination):
        putinar_certify(MatrixPoly.constant(line, [[1.0, 1.0], [0.0, 1.0]]), ConstraintSystem(line, 2))
    with pytest.raises(UnsupportedCombination):
        putinar_certify(three_plus_x, interval, mode=REZNICK)
    with pytest.raises(UnsupportedCombination):
        fejer_riesz_certify(three_plus_x)
    with pytest.raises(UnsupportedCombination):
        reznick_certify(three_plus_x)
    with pytest.raises(UnsupportedCombination):
        reznick_certify(MatrixPoly.identity(circle, 1))


def test_strict_to_nnsd(line, three_plus_x, interval):
    blocks = [GramBlock(0, [(0,), (1,)], 1, 1, 0.5 * np.ones((2, 2))),
              GramBlock(1, [(0,)], 1, 1, np.array([[0.5]]))]
    strict = Certificate(STRICT, 1, line, 1, blocks, epsilon=2.0, generator_names=['interval'])
    nnsd = strict_to_nnsd(strict, three_plus_x)
    assert nnsd.mode == NNSD
    np.testing.assert_allclose(nnsd.transformer.G, [[0.5]])
    report = verify_certificate(three_plus_x, interval, nnsd)
    assert report['accepted'], report['reason']

    strict.epsilon = 0.0
    with pytest.raises(UnsupportedCombination):
        strict_to_nnsd(strict, three_plus_x)


def test_only_reznick_certificates_lift(line):
    cert = Certificate(CLOSURE, 1, line, 1, [GramBlock(0, [(1,)], 1, 1, np.eye(1))])
    with pytest.raises(UnsupportedCombination):
        lift_reznick_certificate(cert)


@pytest.mark.slow
def test_putinar_margin_on_interval(three_plus_x, interval):
    result = putinar_certify(three_plus_x, interval)
    assert result['status'] == 'certified'
    assert result['mode'] == STRICT
    assert result['level'] == 1
    assert result['epsilon'] == pytest.approx(2.0, abs=1e-3)
    assert result['report']['accepted']
    assert verify_certificate(three_plus_x, interval, result['certificate'])['accepted']


@pytest.mark.slow
def test_parallel_search_reports_lowest_level(three_plus_x, interval):
    result = putinar_certify(three_plus_x, interval, t_range=[2, 1], workers=2)
    assert result['status'] == 'certified'
    assert result['level'] == 1
    assert [r['level'] for r in result['levels']] == [1]


@pytest.mark.slow
def test_matrix_sos_in_closure(line):
    p = MatrixPoly(line, {(0,): np.eye(2), (1,): [[0.0, 1.0], [1.0, 0.0]], (2,): [[1.0, 0.0], [0.0, 0.0]]})
    result = putinar_certify(p, ConstraintSystem(line, 2), mode=CLOSURE)
    assert result['status'] == 'certified'
    assert result['certificate'].mode == CLOSURE
    assert result['epsilon'] == 0.0


@pytest.mark.slow
def test_odd_polynomial_is_infeasible(line):
    result = putinar_certify(MatrixPoly.generator(line, 0), ConstraintSystem(line, 1), t_range=[1])
    assert result['status'] == 'infeasible'
    assert result['infeasible_at'] == [1]
    assert result['certificate'] is None
    farkas = result['levels'][0]['farkas']
    assert farkas['value'] < 0
    assert farkas['trace_one'] == pytest.approx(1.0)
    assert farkas['min_eigs']['moment'] >= -1e-6
    assert [w['level'] for w in result['witnesses']] == [1]
    L = result['witnesses'][0]['witness']
    assert L.apply(MatrixPoly.generator(line, 0)) < 0


@pytest.mark.slow
def test_fejer_riesz_margin(circle):
    p = MatrixPoly.scalar(circle, {(0, 0): 2.0, (1, 0): 1.0})
    result = fejer_riesz_certify(p)
    assert result['status'] == 'certified'
    assert result['epsilon'] == pytest.approx(1.0, abs=1e-3)

    matrix = MatrixPoly.scalar(circle, {(0, 0): 2.0, (1, 0): 1.0}, size=2)
    result = fejer_riesz_certify(matrix, t_range=[1])
    assert result['status'] == 'certified'
    assert result['epsilon'] == pytest.approx(1.0, abs=1e-3)


@pytest.mark.slow
def test_nnsd_indefinite_matrix(line):
    p = MatrixPoly.constant(line, np.diag([1.0, -1.0]))
    result = nnsd_certify(p)
    assert result['status'] == 'certified'
    cert = result['certificate']
    assert cert.transformer is not None
    assert verify_certificate(p, ConstraintSystem(line, 2), cert)['accepted']


@pytest.mark.slow
def test_nnsd_negative_definite_is_infeasible(line):
    result = nnsd_certify(MatrixPoly.identity(line, 2, -1.0), t_range=[0, 1])
    assert result['status'] == 'infeasible'
    assert result['infeasible_at'] == [0, 1]


@pytest.mark.slow
def test_nnsd_nonpositive_on_interval_is_infeasible(line, interval):
    p = MatrixPoly.scalar(line, {(0,): -1.0, (2,): 1.0})
    result = nnsd_certify(p, interval)
    assert result['status'] == 'infeasible'
    assert result['infeasible_at'] == default_levels(p)


@pytest.mark.slow
def test_fejer_riesz_sign_changing_cosine_is_infeasible(circle):
    result = fejer_riesz_certify(MatrixPoly.scalar(circle, {(1, 0): 1.0}))
    assert result['status'] == 'infeasible'
    assert result['certificate'] is None


@pytest.mark.slow
def test_reznick_motzkin():
    space = AlgebraSpec('poly', 3)
    motzkin = MatrixPoly.scalar(space, {(4, 2, 0): 1.0, (2, 4, 0): 1.0, (2, 2, 2): -3.0, (0, 0, 6): 1.0})
    result = reznick_certify(motzkin, theta_max=1)
    assert result['mode'] == REZNICK
    assert result['levels'][0]['outcome'] == 'infeasible'
    assert result['status'] == 'certified'
    assert result['theta'] == 1
    assert result['report']['accepted']
    assert result['report']['residual'] <= 1e-6

    # no plain sum of squares exists, and a moment functional at level 3 says so
    witness = refute(motzkin, ConstraintSystem(space, 1), 3)
    assert witness['refuted']
    assert witness['value'] < 0


@pytest.mark.slow
def test_dump_sdp_per_level(tmp_path, three_plus_x, interval):
    putinar_certify(three_plus_x, interval, t_range=[1], dump_sdp=str(tmp_path / 'run.dat-s'))
    assert (tmp_path / 'run.t1.dat-s').exists()


def _random_instance(trial):
    """p = q*q + shift with d, nu and the level taken from the trial number"""
    rng = np.random.default_rng(trial)
    d, size, t = 1 + trial % 2, 1 + (trial // 2) % 2, 1 + (trial // 4) % 2
    space = AlgebraSpec('poly', d)
    linear = [(0,) * d] + [tuple(int(i == j) for j in range(d)) for i in range(d)]
    q = MatrixPoly(space, {m: rng.normal(size=(size, size)) for m in linear}, (size, size))
    p = mp_adjoint(q) * q + MatrixPoly.identity(space, size, float(rng.uniform(-1.0, 1.0)))
    p = MatrixPoly(space, {m: 0.5 * (c + c.T) for m, c in p.terms.items()}, (size, size))
    squares = {tuple(2 * e for e in m): -1.0 for m in linear[1:]}
    ball = MatrixPoly.scalar(space, {(0,) * d: 4.0, **squares})
    S = ConstraintSystem(space, 1, [ball], ['ball']).with_ambient(size) if trial % 3 else ConstraintSystem(space, size)
    return p, S, t


@pytest.mark.slow
@pytest.mark.parametrize('trial', range(100))
def test_random_instances_respect_duality(trial):
    p, S, t = _random_instance(trial)
    witness = refute(p, S, t)
    result = putinar_certify(p, S, t_range=[t])
    assert not (witness['refuted'] and witness['value'] < -1e-6 and result['status'] == 'certified')
    if result['status'] != 'certified':
        return

    cert = result['certificate']
    sampled = soundness_check(p, S, cert, 200, seed=trial, bound=2.0 if S.count else 10.0)
    assert sampled['ok']
    if cert.epsilon >= 0.1:
        assert verify_certificate(p, S, strict_to_nnsd(cert, p))['accepted']
    if cert.epsilon >= 1e-3:
        assert nnsd_certify(p, S, t_range=[t])['status'] == 'certified'
    if t == 1:
        assert putinar_certify(p, S, t_range=[2])['status'] != 'infeasible'


def _record(level, outcome, **extra):
    return {'level': level, 'theta': 0, 'outcome': outcome, 'certificate': None, 'report': None, **extra}


def test_summary_keeps_missing_margin_apart_from_infeasibility():
    records = [_record(1, 'infeasible', farkas_margin=0.5), _record(2, 'no_margin', epsilon=1e-9, dual_bound=2e-9)]
    summary = _summarize(records, None)
    assert summary['status'] == 'no_margin'
    assert summary['infeasible_at'] == [1]
    assert summary['no_margin_at'] == [2]
    assert summary['levels'][1]['dual_bound'] == 2e-9

    assert _summarize(records[:1], None)['status'] == 'infeasible'
    assert _summarize(records + [_record(3, 'stalled')], None)['status'] == 'stalled'


@pytest.mark.slow
def test_square_without_margin(line):
    result = putinar_certify(MatrixPoly.scalar(line, {(2,): 1.0}), ConstraintSystem(line, 1), t_range=[1])
    assert result['status'] == 'no_margin'
    assert result['no_margin_at'] == [1]
    assert result['infeasible_at'] == []
    assert result['levels'][0]['dual_bound'] == pytest.approx(0.0, abs=1e-6)
