import json
import os

import numpy as np
import pytest

from psatz.errors import ProblemFormatError
from psatz.gram import STRICT, Certificate, GramBlock
from psatz.moments import evaluation_functional
from psatz.storage import (certificate_from_dict, certificate_to_dict, load_json_file, load_problem,
                           problem_from_dict, problem_to_dict, save_json_file, witness_from_dict,
                           witness_to_dict, write_report)


def interval_problem():
    return {
        'algebra': {'kind': 'poly', 'vars': 1, 'size': 1},
        'p': [{'exponents': [0], 'matrix': [[3.0]]}, {'exponents': [1], 'matrix': [[1.0]]}],
        'constraints': [{'name': 'interval', 'poly': [{'exponents': [0], 'matrix': [[1.0]]},
                                                      {'exponents': [2], 'matrix': [[-1.0]]}]}],
    }


def test_load_desk_problem(data_dir):
    problem = load_problem(os.path.join(data_dir, 'putinar_3px.json'))
    assert problem.name == 'putinar_3px'
    assert problem.system.names == ['interval']
    assert problem.p.degree() == 1
    assert problem.description


def test_problem_without_polynomial(data_dir):
    problem = load_problem(os.path.join(data_dir, 'interval_probe.json'))
    assert problem.p is None
    assert problem.system.names == ['left', 'right']


def test_problem_dict_round_trip():
    problem = problem_from_dict(interval_problem(), 'interval')
    again = problem_from_dict(problem_to_dict(problem), 'interval')
    assert again.p.terms.keys() == problem.p.terms.keys()
    assert again.system.names == ['interval']


@pytest.mark.parametrize('edit, record', [
    (lambda d: d['p'][1].update(exponents=[1, 0]), 'p[1]'),
    (lambda d: d['p'][0].update(matrix=[[1.0, 2.0], [0.0, 1.0]]), 'p[0]'),
    (lambda d: d['p'].append({'exponents': [0], 'matrix': [[1.0]]}), 'p[2]'),
    (lambda d: d['constraints'][0].pop('poly'), 'constraints[0]'),
    (lambda d: d['algebra'].pop('vars'), 'algebra'),
    (lambda d: d['algebra'].update(kind='laurent'), 'algebra'),
])
def test_malformed_problem_names_the_record(edit, record):
    data = interval_problem()
    edit(data)
    with pytest.raises(ProblemFormatError) as excinfo:
        problem_from_dict(data)
    assert excinfo.value.record.startswith(record)


def test_asymmetric_polynomial_rejected():
    data = interval_problem()
    data['algebra']['size'] = 2
    data['p'] = [{'exponents': [0], 'matrix': [[1.0, 1.0], [0.0, 1.0]]}]
    data['constraints'] = []
    with pytest.raises(ProblemFormatError, match='symmetric'):
        problem_from_dict(data)


def test_bad_json(tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{"algebra": ')
    with pytest.raises(ProblemFormatError):
        load_json_file(str(path))
    path.write_text('[1, 2]')
    with pytest.raises(ProblemFormatError, match='object'):
        load_json_file(str(path))


def test_certificate_round_trip(line):
    blocks = [GramBlock(0, [(0,), (1,)], 1, 1, np.array([[0.5, 0.5], [0.5, 0.5]]), shift=1e-10),
              GramBlock(1, [(0,)], 1, 1, np.array([[0.5]]))]
    cert = Certificate(STRICT, 1, line, 1, blocks, epsilon=2.0, generator_names=['interval'])
    back = certificate_from_dict(json.loads(json.dumps(certificate_to_dict(cert))))
    assert back.mode == STRICT
    assert back.epsilon == 2.0
    assert back.generator_names == ['interval']
    assert back.transformer is None
    assert back.blocks[0].basis == [(0,), (1,)]
    assert back.blocks[0].shift == 1e-10
    np.testing.assert_array_equal(back.blocks[1].G, [[0.5]])


def test_certificate_version_and_mode_checked(line):
    data = certificate_to_dict(Certificate(STRICT, 1, line, 1, []))
    with pytest.raises(ProblemFormatError, match='version'):
        certificate_from_dict({**data, 'version': 99})
    with pytest.raises(ProblemFormatError, match='mode'):
        certificate_from_dict({**data, 'mode': 'sos'})


def test_saved_files_are_byte_stable(tmp_path, line):
    cert = Certificate(STRICT, 1, line, 1, [GramBlock(0, [(0,)], 1, 1, np.array([[0.1]]))], epsilon=1 / 3)
    first, second = tmp_path / 'a.json', tmp_path / 'b.json'
    assert save_json_file(str(first), certificate_to_dict(cert))
    assert save_json_file(str(second), certificate_to_dict(cert))
    assert first.read_bytes() == second.read_bytes()
    data = json.loads(first.read_text())
    assert data['epsilon'] == 1 / 3
    assert data['blocks'][0]['gram'] == [[0.1]]


def test_witness_round_trip(line):
    L = evaluation_functional([0.5], [1.0], 1, line)
    data = json.loads(json.dumps(witness_to_dict(L, -0.25)))
    assert data['value'] == -0.25
    back = witness_from_dict(data)
    assert back.level == 1
    assert back.value((2,))[0, 0] == pytest.approx(0.25)


def test_report_has_environment(tmp_path):
    path = tmp_path / 'run.report.json'
    assert write_report(str(path), 'certify', {'status': 'certified', 'values': np.array([1.0, np.inf])})
    data = json.loads(path.read_text())
    assert data['command'] == 'certify'
    assert data['values'] == [1.0, None]
    assert 'cpu_count' in data['environment']
