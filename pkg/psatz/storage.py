"""
JSON files: problems, certificates, witnesses and reports
"""

import json
import logging
import os
from dataclasses import dataclass
from datetime import datetime
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .config import DATA_DIR, SCHEMA_VERSION
from .errors import ProblemFormatError, PsatzError
from .gram import MODES, Certificate, GramBlock
from .moments import MomentFunctional
from .poly import AlgebraSpec, MatrixPoly, monomial_key
from .quadratic_module import ConstraintSystem

logger = logging.getLogger(__name__)


def resolve_path(path: str) -> str:
    """Use the path as given, falling back to the data directory"""
    if os.path.exists(path) or os.path.isabs(path):
        return path
    candidate = os.path.join(DATA_DIR, path)
    return candidate if os.path.exists(candidate) else path


def load_json_file(path: str) -> dict:
    """Load JSON data from file"""
    filepath = resolve_path(path)
    try:
        with open(filepath, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (json.JSONDecodeError, OSError) as e:
        logger.error(f"Error loading {filepath}: {e}")
        raise ProblemFormatError(str(e), record=os.path.basename(filepath)) from e
    if not isinstance(data, dict):
        raise ProblemFormatError('top level must be an object', record=os.path.basename(filepath))
    return data


def save_json_file(path: str, data: dict) -> bool:
    """Save JSON data to file; floats keep their shortest round-trip form"""
    directory = os.path.dirname(path)
    try:
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(to_jsonable(data), f, indent=2, ensure_ascii=False)
            f.write('\n')
        return True
    except (OSError, TypeError) as e:
        logger.error(f"Error saving {path}: {e}")
        return False


def to_jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else None
    return value


# Polynomials

def algebra_from_dict(data: Any, record: str = 'algebra') -> Tuple[AlgebraSpec, int]:
    if not isinstance(data, dict):
        raise ProblemFormatError('expected an object with kind, vars and size', record)
    try:
        algebra = AlgebraSpec(str(data['kind']), int(data['vars']))
        size = int(data.get('size', 1))
    except KeyError as e:
        raise ProblemFormatError(f"missing field {e.args[0]!r}", record) from e
    except (TypeError, ValueError) as e:
        raise ProblemFormatError(str(e), record) from e
    if size < 1:
        raise ProblemFormatError('size must be positive', record)
    return algebra, size


def algebra_to_dict(algebra: AlgebraSpec, size: int) -> dict:
    return {**algebra.to_dict(), 'size': size}


def poly_to_records(p: MatrixPoly) -> List[dict]:
    return [{'exponents': list(m), 'matrix': p.terms[m].tolist()} for m in p.monomials()]


def poly_from_records(records: Any, algebra: AlgebraSpec, size: Optional[int], record: str) -> MatrixPoly:
    """Decode a list of {"exponents", "matrix"} records; size None means infer it from the first record"""
    if not isinstance(records, list):
        raise ProblemFormatError('a polynomial is a list of records', record)
    terms = {}
    shape = None if size is None else (size, size)
    for i, rec in enumerate(records):
        where = f"{record}[{i}]"
        if not isinstance(rec, dict) or 'exponents' not in rec or 'matrix' not in rec:
            raise ProblemFormatError('record needs "exponents" and "matrix"', where)
        try:
            exps = tuple(int(e) for e in rec['exponents'])
            mat = np.array(rec['matrix'], dtype=float, ndmin=2)
        except (TypeError, ValueError) as e:
            raise ProblemFormatError(str(e), where) from e
        if len(exps) != algebra.n_gens or any(e < 0 for e in exps):
            raise ProblemFormatError(f"exponents must be {algebra.n_gens} nonnegative integers", where)
        if shape is None:
            shape = mat.shape
        if mat.shape != shape:
            raise ProblemFormatError(f"matrix has shape {mat.shape}, expected {shape}", where)
        if exps in terms:
            raise ProblemFormatError(f"exponents {list(exps)} repeated", where)
        terms[exps] = mat
    if shape is None:
        raise ProblemFormatError('empty polynomial needs an explicit size', record)
    try:
        return MatrixPoly(algebra, terms, shape)
    except PsatzError as e:
        raise ProblemFormatError(str(e), record) from e


# Problems

@dataclass
class Problem:
    name: str
    algebra: AlgebraSpec
    size: int
    p: Optional[MatrixPoly]
    system: ConstraintSystem
    description: str = ''


def problem_from_dict(data: dict, name: str = 'problem') -> Problem:
    algebra, size = algebra_from_dict(data.get('algebra'))
    p = None
    if 'p' in data:
        p = poly_from_records(data['p'], algebra, size, 'p')
        if not p.is_hermitian():
            raise ProblemFormatError('polynomial must have symmetric coefficients', 'p')

    generators, names = [], []
    constraints = data.get('constraints', [])
    if not isinstance(constraints, list):
        raise ProblemFormatError('expected a list', 'constraints')
    for i, con in enumerate(constraints):
        where = f"constraints[{i}]"
        if not isinstance(con, dict) or 'poly' not in con:
            raise ProblemFormatError('constraint needs a "poly" field', where)
        g = poly_from_records(con['poly'], algebra, con.get('size'), f"{where}.poly")
        if not g.is_hermitian():
            raise ProblemFormatError('generator must be square with symmetric coefficients', f"{where}.poly")
        generators.append(g)
        names.append(str(con.get('name', f"p{i + 1}")))
    try:
        system = ConstraintSystem(algebra, size, generators, names)
    except PsatzError as e:
        raise ProblemFormatError(str(e), 'constraints') from e
    return Problem(name, algebra, size, p, system, str(data.get('description', '')))


def problem_to_dict(problem: Problem) -> dict:
    data = {'algebra': algebra_to_dict(problem.algebra, problem.size)}
    if problem.description:
        data['description'] = problem.description
    if problem.p is not None:
        data['p'] = poly_to_records(problem.p)
    data['constraints'] = [
        {'name': name, 'size': g.size, 'poly': poly_to_records(g)}
        for name, g in zip(problem.system.names, problem.system.generators)
    ]
    return data


def load_problem(path: str) -> Problem:
    data = load_json_file(path)
    name = os.path.splitext(os.path.basename(path))[0]
    problem = problem_from_dict(data, name)
    logger.info(f"Loaded problem {name}: {problem.algebra.kind} in {problem.algebra.num_vars} variables, "
                f"size {problem.size}, {problem.system.count} constraints")
    return problem


# Certificates

def _block_to_dict(blk: GramBlock) -> dict:
    return {
        'k': blk.k,
        'weight_size': blk.weight_size,
        'basis': [list(m) for m in blk.basis],
        'gram': blk.G.tolist(),
        'shift': blk.shift,
    }


def _block_from_dict(data: Any, ambient: int, record: str) -> GramBlock:
    if not isinstance(data, dict):
        raise ProblemFormatError('expected an object', record)
    try:
        basis = [tuple(int(e) for e in m) for m in data['basis']]
        blk = GramBlock(int(data['k']), basis, int(data.get('weight_size', 1)), ambient,
                        np.array(data['gram'], dtype=float, ndmin=2), float(data.get('shift', 0.0)))
    except KeyError as e:
        raise ProblemFormatError(f"missing field {e.args[0]!r}", record) from e
    except (TypeError, ValueError) as e:
        raise ProblemFormatError(str(e), record) from e
    return blk


def certificate_to_dict(cert: Certificate) -> dict:
    return {
        'version': SCHEMA_VERSION,
        'mode': cert.mode,
        'level': cert.level,
        'epsilon': cert.epsilon,
        'theta': cert.theta,
        'algebra': cert.algebra.to_dict(),
        'size': cert.ambient_size,
        'generators': list(cert.generator_names),
        'blocks': [_block_to_dict(blk) for blk in cert.blocks],
        'transformer': None if cert.transformer is None else _block_to_dict(cert.transformer),
    }


def certificate_from_dict(data: dict) -> Certificate:
    if data.get('version', SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ProblemFormatError(f"unsupported schema version {data.get('version')}", 'version')
    mode = data.get('mode')
    if mode not in MODES:
        raise ProblemFormatError(f"unknown mode {mode!r}", 'mode')
    algebra, _ = algebra_from_dict(data.get('algebra'))
    try:
        size = int(data['size'])
        level = int(data.get('level', 0))
        epsilon = float(data.get('epsilon', 0.0))
        theta = int(data.get('theta', 0))
    except KeyError as e:
        raise ProblemFormatError(f"missing field {e.args[0]!r}", 'certificate') from e
    except (TypeError, ValueError) as e:
        raise ProblemFormatError(str(e), 'certificate') from e
    blocks = data.get('blocks')
    if not isinstance(blocks, list):
        raise ProblemFormatError('expected a list', 'blocks')
    transformer = data.get('transformer')
    return Certificate(
        mode=mode, level=level, algebra=algebra, ambient_size=size,
        blocks=[_block_from_dict(b, size, f"blocks[{i}]") for i, b in enumerate(blocks)],
        epsilon=epsilon, theta=theta, generator_names=[str(n) for n in data.get('generators', [])],
        transformer=None if transformer is None else _block_from_dict(transformer, size, 'transformer'),
    )


def load_certificate(path: str) -> Certificate:
    return certificate_from_dict(load_json_file(path))


def save_certificate(path: str, cert: Certificate) -> bool:
    return save_json_file(path, certificate_to_dict(cert))


# Witnesses

def witness_to_dict(L: MomentFunctional, value: Optional[float] = None) -> dict:
    return {
        'version': SCHEMA_VERSION,
        'level': L.level,
        'algebra': L.algebra.to_dict(),
        'size': L.size,
        'homogeneous': L.homogeneous,
        'value': value,
        'values': [{'exponents': list(m), 'matrix': L.values[m].tolist()}
                   for m in sorted(L.values, key=monomial_key)],
    }


def witness_from_dict(data: dict) -> MomentFunctional:
    algebra, _ = algebra_from_dict(data.get('algebra'))
    try:
        size = int(data['size'])
        level = int(data['level'])
    except KeyError as e:
        raise ProblemFormatError(f"missing field {e.args[0]!r}", 'witness') from e
    values: Dict[tuple, np.ndarray] = {}
    for i, rec in enumerate(data.get('values', [])):
        where = f"values[{i}]"
        try:
            values[tuple(int(e) for e in rec['exponents'])] = np.array(rec['matrix'], dtype=float, ndmin=2)
        except (KeyError, TypeError, ValueError) as e:
            raise ProblemFormatError(str(e), where) from e
    return MomentFunctional(algebra, size, level, values, bool(data.get('homogeneous', False)))


# Reports

def write_report(path: str, command: str, body: dict) -> bool:
    """Machine-readable run report with an environment block"""
    from .utils import get_system_info

    report = {
        'version': SCHEMA_VERSION,
        'command': command,
        'created': datetime.now().isoformat(),
        **body,
        'environment': get_system_info(),
    }
    ok = save_json_file(path, report)
    if ok:
        logger.info(f"Report written to {path}")
    return ok
