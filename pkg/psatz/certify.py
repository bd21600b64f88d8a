"""
Bounded certificate searches: strict and closure Putinar, Reznick multipliers, nnsd and Fejer-Riesz
"""

import logging
import math
import os
from typing import List, Optional, Sequence

import numpy as np

from .config import DEFAULT_LEVEL_SPAN, DEFAULT_THETA_MAX, ERROR_MESSAGES, STRICT_MIN_MARGIN
from .errors import AlgebraMismatch, PsatzError, SizeMismatch, UnsupportedCombination
from .gram import (CLOSURE, NNSD, REZNICK, STRICT, TRANSFORMER, Certificate, GramBlock, GramLayout,
                   build_certificate_sdp, decode_certificate, lift_block)
from .moments import audit_functional, functional_from_ray
from .poly import MatrixPoly
from .quadratic_module import ConstraintSystem, TruncationPlan, truncate
from .sdp import INFEASIBLE, OPTIMAL, farkas_margin, solve, write_sdpa
from .utils import first_success
from .verify import verify_certificate

logger = logging.getLogger(__name__)


def _check_inputs(p: MatrixPoly, S: ConstraintSystem):
    if p.algebra != S.algebra:
        raise AlgebraMismatch(ERROR_MESSAGES['algebra_mismatch'])
    if not p.is_square or p.size != S.ambient_size:
        raise SizeMismatch(f"{ERROR_MESSAGES['size_mismatch']}: p has shape {p.shape}, system ambient {S.ambient_size}")
    if not p.is_hermitian():
        raise UnsupportedCombination(ERROR_MESSAGES['not_hermitian'])


def default_levels(p: MatrixPoly, span: int = DEFAULT_LEVEL_SPAN) -> List[int]:
    low = math.ceil(p.degree() / 2)
    return list(range(low, low + span + 1))


def _dump_path(dump_sdp: Optional[str], tag: str) -> Optional[str]:
    if not dump_sdp:
        return None
    root, ext = os.path.splitext(dump_sdp)
    return f"{root}.{tag}{ext or '.dat-s'}"


def _farkas_witness(layout: GramLayout, ray: np.ndarray, S: ConstraintSystem):
    """Read a Farkas ray as a moment functional: nonnegative on M_S at this level, negative on the target"""
    L = functional_from_ray(layout, ray)
    if L.trace_one() > 0:
        L = L.normalized()
    data = {'value': L.apply(layout.target), 'trace_one': L.trace_one(), 'min_eigs': {}}
    try:
        data['min_eigs'] = audit_functional(L, S)
    except PsatzError as e:
        logger.warning(f"Farkas functional at level {layout.level} could not be audited: {e}")
    logger.info(f"Level {layout.level}: Farkas functional with L(target) = {data['value']:.6g}")
    return data, L


def _attempt(p: MatrixPoly, S: ConstraintSystem, plan: TruncationPlan, mode: str, theta: int = 0,
             dump_sdp: Optional[str] = None, opts: Optional[dict] = None) -> dict:
    """Build, solve, decode and verify at one level; the verifier alone decides acceptance"""
    prob, layout = build_certificate_sdp(p, plan, mode, theta)
    if dump_sdp:
        write_sdpa(prob, dump_sdp)
    sol = solve(prob, opts)

    record = {
        'level': plan.level,
        'theta': theta,
        'solver_status': sol.status,
        'iterations': sol.iterations,
        'message': sol.message,
        'dropped': list(plan.dropped),
        'outcome': 'stalled',
        'certificate': None,
        'report': None,
    }
    if sol.status == INFEASIBLE:
        record['outcome'] = 'infeasible'
        record['farkas_margin'] = farkas_margin(prob, sol.ray, opts)
        record['farkas'], record['witness'] = _farkas_witness(layout, sol.ray, S)
        return record
    if not sol.has_iterate:
        return record

    cert = decode_certificate(sol, layout, S.names)
    if mode == STRICT and cert.epsilon <= STRICT_MIN_MARGIN:
        record['epsilon'] = cert.epsilon
        if sol.status == OPTIMAL:
            record['outcome'] = 'no_margin'
            record['dual_bound'] = sol.dual_objective
        return record

    report = verify_certificate(p, S, cert)
    record['report'] = report
    if report['accepted']:
        record['outcome'] = 'certified'
        record['certificate'] = cert
        if mode == STRICT:
            record['epsilon'] = cert.epsilon
    else:
        logger.info(f"Level {plan.level}: decoded iterate rejected ({report['reason']})")
    return record


def _summarize(records: List[dict], index: Optional[int]) -> dict:
    summary = [{k: v for k, v in r.items() if k not in ('certificate', 'report', 'witness')} for r in records]
    witnesses = [{'level': r['level'], 'theta': r['theta'], 'witness': r['witness']}
                 for r in records if r.get('witness') is not None]
    if index is not None:
        hit = records[index]
        return {
            'status': 'certified',
            'certificate': hit['certificate'],
            'report': hit['report'],
            'level': hit['level'],
            'theta': hit['theta'],
            'epsilon': hit['certificate'].epsilon,
            'levels': summary,
            'witnesses': witnesses,
        }
    outcomes = [r['outcome'] for r in records]
    if outcomes and all(o == 'infeasible' for o in outcomes):
        status = 'infeasible'
    elif outcomes and all(o in ('infeasible', 'no_margin') for o in outcomes):
        status = 'no_margin'
    else:
        status = 'stalled'
    return {
        'status': status,
        'certificate': None,
        'report': None,
        'levels': summary,
        'infeasible_at': [r['level'] for r in records if r['outcome'] == 'infeasible'],
        'no_margin_at': [r['level'] for r in records if r['outcome'] == 'no_margin'],
        'witnesses': witnesses,
    }


def _search(p: MatrixPoly, S: ConstraintSystem, levels: Sequence[int], mode: str, workers: Optional[int],
            dump_sdp: Optional[str], opts: Optional[dict]) -> dict:
    def run_level(t):
        record = _attempt(p, S, truncate(S, t), mode, dump_sdp=_dump_path(dump_sdp, f"t{t}"), opts=opts)
        logger.info(f"{mode} search at level {t}: {record['outcome']} (solver {record['solver_status']})")
        return record

    index, records = first_success(sorted(levels), run_level, lambda r: r['outcome'] == 'certified', workers)
    return _summarize(records, index)


def putinar_certify(p: MatrixPoly, S: ConstraintSystem, t_range: Optional[Sequence[int]] = None,
                    mode: str = STRICT, workers: Optional[int] = None, dump_sdp: Optional[str] = None,
                    opts: Optional[dict] = None) -> dict:
    """Search for p - eps*1 in M_S (strict) or p in M_S (closure) at increasing levels"""
    _check_inputs(p, S)
    if mode not in (STRICT, CLOSURE):
        raise UnsupportedCombination(f"mode must be {STRICT!r} or {CLOSURE!r}, got {mode!r}")
    levels = list(t_range) if t_range is not None else default_levels(p)
    result = _search(p, S, levels, mode, workers, dump_sdp, opts)
    result['mode'] = mode
    return result


def fejer_riesz_certify(p: MatrixPoly, t_range: Optional[Sequence[int]] = None, mode: str = STRICT,
                        S: Optional[ConstraintSystem] = None, workers: Optional[int] = None,
                        dump_sdp: Optional[str] = None, opts: Optional[dict] = None) -> dict:
    """Sum-of-squares search for trigonometric matrix polynomials, optionally with torus constraints"""
    if not p.algebra.is_torus:
        raise UnsupportedCombination(ERROR_MESSAGES['not_torus'])
    if S is None:
        S = ConstraintSystem(p.algebra, p.size)
    return putinar_certify(p, S, t_range, mode, workers, dump_sdp, opts)


def reznick_certify(p: MatrixPoly, S: Optional[ConstraintSystem] = None, theta_max: int = DEFAULT_THETA_MAX,
                    workers: Optional[int] = None, dump_sdp: Optional[str] = None,
                    opts: Optional[dict] = None) -> dict:
    """Find the least theta <= theta_max with |x|^(2 theta) p in M_S on homogeneous bases"""
    if S is None:
        S = ConstraintSystem(p.algebra, p.size)
    _check_inputs(p, S)
    if p.algebra.is_torus:
        raise UnsupportedCombination(ERROR_MESSAGES['homogeneous_torus'])
    if not p.is_homogeneous() or p.degree() % 2:
        raise UnsupportedCombination(ERROR_MESSAGES['inhomogeneous'])
    base = p.degree() // 2

    def run_theta(theta):
        plan = truncate(S, base + theta, homogeneous=True)
        record = _attempt(p, S, plan, REZNICK, theta, _dump_path(dump_sdp, f"theta{theta}"), opts)
        logger.info(f"Multiplier search theta={theta}: {record['outcome']} (solver {record['solver_status']})")
        return record

    index, records = first_success(list(range(theta_max + 1)), run_theta,
                                   lambda r: r['outcome'] == 'certified', workers)
    result = _summarize(records, index)
    if index is None:
        result['status'] = 'exhausted'
        result['theta_max'] = theta_max
        result['stalled_thetas'] = [r['theta'] for r in records if r['outcome'] == 'stalled']
        result['infeasible_thetas'] = [r['theta'] for r in records if r['outcome'] == 'infeasible']
    result['mode'] = REZNICK
    return result


def nnsd_certify(p: MatrixPoly, S: Optional[ConstraintSystem] = None, t_range: Optional[Sequence[int]] = None,
                 workers: Optional[int] = None, dump_sdp: Optional[str] = None, opts: Optional[dict] = None) -> dict:
    """Search for finitely many c_i with sum c_i* p c_i in 1 + M_S"""
    if S is None:
        S = ConstraintSystem(p.algebra, p.size)
    _check_inputs(p, S)
    levels = list(t_range) if t_range is not None else default_levels(p)
    result = _search(p, S, levels, NNSD, workers, dump_sdp, opts)
    result['mode'] = NNSD
    return result


def lift_reznick_certificate(cert: Certificate) -> Certificate:
    """A theta certificate multiplied through by |x|^2 is a theta + 1 certificate"""
    if cert.mode != REZNICK:
        raise UnsupportedCombination(f"only {REZNICK!r} certificates can be lifted, got {cert.mode!r}")
    return Certificate(
        mode=REZNICK, level=cert.level + 1, algebra=cert.algebra, ambient_size=cert.ambient_size,
        blocks=[lift_block(blk, cert.algebra) for blk in cert.blocks], epsilon=0.0, theta=cert.theta + 1,
        generator_names=list(cert.generator_names),
    )


def strict_to_nnsd(cert: Certificate, p: MatrixPoly) -> Certificate:
    """c_1 = eps^(-1/2) * 1 turns p - eps in M into p/eps - 1 in M"""
    if cert.mode != STRICT or cert.epsilon <= 0:
        raise UnsupportedCombination('a strict certificate with positive margin is required')
    nu = cert.ambient_size
    scale = 1.0 / cert.epsilon
    blocks = [GramBlock(blk.k, list(blk.basis), blk.weight_size, blk.ambient, scale * blk.G, scale * blk.shift)
              for blk in cert.blocks]
    u = np.eye(nu).reshape(-1)
    transformer = GramBlock(TRANSFORMER, [p.algebra.one()], nu, nu, scale * np.outer(u, u))
    return Certificate(NNSD, cert.level, cert.algebra, nu, blocks, generator_names=list(cert.generator_names),
                       transformer=transformer)
