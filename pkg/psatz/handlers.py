"""
Command handlers for the psatz command line
"""

import logging
import math
import os
from typing import List, Optional

from .certify import fejer_riesz_certify, nnsd_certify, putinar_certify, reznick_certify
from .config import (DEFAULT_LEVEL_SPAN, EXIT_CODES, PROBE_K_MAX, PROBE_T_MAX, SAMPLE_BOX, SOUNDNESS_SAMPLES,
                     SUCCESS_MESSAGES, VERIFY_TOL)
from .errors import ProblemFormatError
from .gram import STRICT
from .moments import audit_witness, refute
from .poly import ball_polynomial
from .quadratic_module import archimedean_probe, known_archimedean
from .storage import (Problem, load_certificate, load_json_file, load_problem, problem_to_dict, save_certificate,
                      save_json_file, witness_from_dict, witness_to_dict, write_report)
from .verify import soundness_check, verify_certificate

logger = logging.getLogger(__name__)


def _load_problem(args, need_p: bool = True) -> Problem:
    problem = load_problem(args.problem)
    if need_p and problem.p is None:
        raise ProblemFormatError('this command needs a polynomial', 'p')
    return problem


def _levels(args, degree: int) -> Optional[List[int]]:
    if args.t_min is None and args.t_max is None:
        return None
    low = args.t_min if args.t_min is not None else math.ceil(degree / 2)
    high = args.t_max if args.t_max is not None else low + DEFAULT_LEVEL_SPAN
    return list(range(low, high + 1))


def _paths(args, problem: Problem, suffix: str):
    out = args.out or f"{problem.name}.{suffix}.json"
    return out, f"{os.path.splitext(out)[0]}.report.json"


def _probe_path(problem: Problem) -> str:
    return f"{problem.name}.probe.report.json"


def _sample_bound(args, problem: Problem) -> float:
    """Sampling box half-width: --bound, else the radius of a successful probe, else SAMPLE_BOX"""
    if getattr(args, 'bound', None) is not None:
        return args.bound
    path = _probe_path(problem)
    if os.path.exists(path):
        try:
            probe = load_json_file(path)
        except ProblemFormatError:
            return SAMPLE_BOX
        if probe.get('status') == 'found' and probe.get('K'):
            logger.info(f"Sampling K_S in the box of radius {probe['K']} from {path}")
            return float(probe['K'])
    return SAMPLE_BOX


def _say(key: str, detail: str = ''):
    message = SUCCESS_MESSAGES[key]
    print(f"{message}{': ' + detail if detail else ''}")


def _finish_search(args, problem: Problem, command: str, result: dict) -> int:
    """Write the certificate and report of a search and map its status to an exit code"""
    out, report_path = _paths(args, problem, 'cert')
    body = {
        'problem': problem.name,
        'status': result['status'],
        'mode': result['mode'],
        'levels': result['levels'],
    }

    if result['status'] == 'certified':
        cert = result['certificate']
        save_certificate(out, cert)
        body.update({
            'certificate_file': out,
            'level': result['level'],
            'theta': result['theta'],
            'epsilon': result['epsilon'],
            'verification': result['report'],
        })
        if cert.mode == STRICT:
            box = _sample_bound(args, problem)
            body['soundness'] = soundness_check(problem.p, problem.system, cert, SOUNDNESS_SAMPLES, args.seed, box)
            body['soundness']['box'] = box
        write_report(report_path, command, body)
        detail = f"level {result['level']}"
        if cert.mode == STRICT:
            detail += f", epsilon = {cert.epsilon:.9g}"
        elif command == 'reznick':
            detail += f", theta = {result['theta']}"
        _say('certified', f"{detail} -> {out}")
        return EXIT_CODES['ok']

    if result['status'] == 'exhausted':
        body['stalled_thetas'] = result['stalled_thetas']
        body['infeasible_thetas'] = result['infeasible_thetas']
        infeasible = not result['stalled_thetas']
    else:
        body['infeasible_at'] = result.get('infeasible_at', [])
        body['no_margin_at'] = result.get('no_margin_at', [])
        infeasible = result['status'] in ('infeasible', 'no_margin')
    write_report(report_path, command, body)

    if infeasible:
        key = 'no_margin' if result['status'] == 'no_margin' else 'infeasible'
        _say(key, ', '.join(f"t={r['level']} {r['outcome']}" for r in result['levels']))
        return EXIT_CODES['infeasible']
    _say('inconclusive', '; '.join(f"t={r['level']} {r['outcome']}" for r in result['levels']))
    return EXIT_CODES['inconclusive']


def certify_handler(args) -> int:
    """Strict or closure search p - eps in M_S"""
    problem = _load_problem(args)
    result = putinar_certify(problem.p, problem.system, _levels(args, problem.p.degree()), args.mode,
                             args.workers, args.dump_sdp)
    return _finish_search(args, problem, 'certify', result)


def reznick_handler(args) -> int:
    """Multiplier search |x|^(2 theta) p in M_S"""
    problem = _load_problem(args)
    result = reznick_certify(problem.p, problem.system, args.theta_max, args.workers, args.dump_sdp)
    return _finish_search(args, problem, 'reznick', result)


def nnsd_handler(args) -> int:
    """Search sum c_i* p c_i in 1 + M_S"""
    problem = _load_problem(args)
    result = nnsd_certify(problem.p, problem.system, _levels(args, problem.p.degree()), args.workers,
                          args.dump_sdp)
    return _finish_search(args, problem, 'nnsd', result)


def fejer_riesz_handler(args) -> int:
    """Sum-of-squares search on the torus"""
    problem = _load_problem(args)
    result = fejer_riesz_certify(problem.p, _levels(args, problem.p.degree()), args.mode, problem.system,
                                 args.workers, args.dump_sdp)
    return _finish_search(args, problem, 'fejer-riesz', result)


def _verify_witness(args, problem: Problem) -> int:
    L = witness_from_dict(load_json_file(args.witness))
    report = audit_witness(problem.p, problem.system, L)
    _, report_path = _paths(args, problem, 'verify')
    write_report(report_path, 'verify', {'problem': problem.name, 'witness_file': args.witness, **report})
    if report['accepted']:
        _say('witness', f"L(p) = {report['value']:.9g}")
        return EXIT_CODES['ok']
    _say('rejected', report['reason'])
    return EXIT_CODES['rejected']


def verify_handler(args) -> int:
    """Audit a certificate or witness file against a problem file"""
    problem = _load_problem(args)
    if getattr(args, 'witness', None):
        return _verify_witness(args, problem)
    if not args.cert:
        raise ProblemFormatError('verify needs --cert or --witness', 'cert')
    cert = load_certificate(args.cert)
    tol = args.tol if args.tol is not None else VERIFY_TOL
    report = verify_certificate(problem.p, problem.system, cert, tol=tol)

    _, report_path = _paths(args, problem, 'verify')
    write_report(report_path, 'verify', {'problem': problem.name, 'certificate_file': args.cert, **report})
    if report['accepted']:
        _say('verified', f"residual {report['residual']:.3e}")
        return EXIT_CODES['ok']
    _say('rejected', report['reason'])
    return EXIT_CODES['rejected']


def refute_handler(args) -> int:
    """Look for an M_S-positive functional with L(p) < 0"""
    problem = _load_problem(args)
    levels = _levels(args, problem.p.degree()) or [max(1, math.ceil(problem.p.degree() / 2))]
    out, report_path = _paths(args, problem, 'witness')

    tried = []
    for t in levels:
        result = refute(problem.p, problem.system, t)
        tried.append({k: v for k, v in result.items() if k != 'witness'})
        if result['refuted']:
            save_json_file(out, witness_to_dict(result['witness'], result['value']))
            write_report(report_path, 'refute', {'problem': problem.name, 'status': 'refuted',
                                                 'witness_file': out, 'levels': tried})
            _say('refuted', f"level {t}, L(p) = {result['value']:.9g} -> {out}")
            return EXIT_CODES['infeasible']

    write_report(report_path, 'refute', {'problem': problem.name, 'status': 'none_found', 'levels': tried})
    _say('inconclusive', f"no witness at levels {levels}")
    return EXIT_CODES['inconclusive']


def archimedean_handler(args) -> int:
    """Search for K^2 - |x|^2 in M_S"""
    problem = _load_problem(args, need_p=False)
    report_path = _probe_path(problem)
    S = problem.system
    if known_archimedean(S):
        write_report(report_path, 'archimedean', {'problem': problem.name, 'status': 'found', 'reason': 'torus'})
        _say('archimedean', 'torus generators are bounded')
        return EXIT_CODES['ok']

    t_max = args.t_max if args.t_max is not None else PROBE_T_MAX
    K_max = args.bound if args.bound is not None else PROBE_K_MAX
    result = archimedean_probe(S, t_max, K_max, args.workers)
    body = {'problem': problem.name, 'status': 'found' if result['found'] else 'not_found', 'tried': result['tried']}
    if result['found']:
        # the ball polynomial as a problem of its own, so `verify` can audit the certificate
        out = args.out or f"{problem.name}.ball.cert.json"
        target_path = f"{problem.name}.ball.json"
        target = Problem(f"{problem.name}.ball", problem.algebra, 1, ball_polynomial(problem.algebra, result['K']),
                         S.with_ambient(1), f"K^2 - |x|^2 with K = {result['K']:g} for {problem.name}")
        save_json_file(target_path, problem_to_dict(target))
        save_certificate(out, result['certificate'])
        body.update({'K': result['K'], 'level': result['level'], 'certificate_file': out,
                     'target_file': target_path, 'mode': result['certificate'].mode,
                     'verification': result['report']})
        write_report(report_path, 'archimedean', body)
        _say('archimedean', f"K = {result['K']:g} at level {result['level']} -> {out}")
        return EXIT_CODES['ok']

    body['message'] = result['message']
    write_report(report_path, 'archimedean', body)
    _say('inconclusive', result['message'])
    return EXIT_CODES['inconclusive']
