"""
Independent certificate auditor and pointwise sampling checks
"""

import logging
from typing import Iterable, List, Optional

import numpy as np
from scipy import linalg

from .config import (MAX_SAMPLE_ATTEMPTS, PSD_TOL, SAMPLE_BOX, SOUNDNESS_SAMPLES, SYMMETRY_TOL, VERIFY_TOL)
from .errors import PsatzError
from .gram import CLOSURE, NNSD, REZNICK, STRICT, Certificate, GramBlock, gram_expand
from .poly import MatrixPoly, format_monomial, max_coefficient_gap, mp_eval, normal_form, norm_squared_power
from .quadratic_module import ConstraintSystem

logger = logging.getLogger(__name__)


def psd_check(mtx, tol: float = SYMMETRY_TOL) -> float:
    """Smallest eigenvalue of a symmetric matrix by a full symmetric eigensolve"""
    mtx = np.asarray(mtx, dtype=float)
    if mtx.ndim != 2 or mtx.shape[0] != mtx.shape[1]:
        raise PsatzError(f"expected a square matrix, got shape {mtx.shape}")
    if mtx.size and np.max(np.abs(mtx - mtx.T)) > tol:
        raise PsatzError("matrix is not symmetric")
    return float(linalg.eigvalsh(mtx)[0])


def _rejected(cert_mode: str, reason: str) -> dict:
    logger.warning(f"Certificate rejected: {reason}")
    return {
        'accepted': False,
        'residual': None,
        'worst_monomial': None,
        'min_eigs': {},
        'mode': cert_mode,
        'mode_data': {},
        'reason': reason,
    }


def _check_block(blk: GramBlock, weight: MatrixPoly, ambient: int, label: str) -> Optional[str]:
    if blk.ambient != ambient:
        return f"{label}: ambient size {blk.ambient}, expected {ambient}"
    if blk.weight_size != weight.size:
        return f"{label}: weight size {blk.weight_size}, generator has size {weight.size}"
    if blk.G.shape != (blk.lift_dim, blk.lift_dim):
        return f"{label}: Gram matrix has shape {blk.G.shape}, expected {(blk.lift_dim, blk.lift_dim)}"
    for m in blk.basis:
        if len(m) != weight.algebra.n_gens or any(e < 0 for e in m):
            return f"{label}: basis monomial {list(m)} does not fit the algebra"
    if len(set(blk.basis)) != len(blk.basis):
        return f"{label}: basis has repeated monomials"
    return None


def verify_certificate(p: MatrixPoly, S: ConstraintSystem, cert: Certificate, tol: float = VERIFY_TOL,
                       tol_psd: float = PSD_TOL) -> dict:
    """Re-expand the claimed identity and audit every Gram block; reports instead of raising"""
    if cert.algebra != p.algebra or cert.algebra != S.algebra:
        return _rejected(cert.mode, 'certificate algebra does not match the problem')
    if cert.ambient_size != p.size or not p.is_square:
        return _rejected(cert.mode, f"certificate size {cert.ambient_size} does not match p of shape {p.shape}")
    if cert.mode not in (STRICT, CLOSURE, REZNICK, NNSD):
        return _rejected(cert.mode, f"unknown mode {cert.mode!r}")

    nu = p.size
    rhs = MatrixPoly.zero(p.algebra, nu)
    min_eigs = {}
    for blk in cert.blocks:
        if not 0 <= blk.k <= S.count:
            return _rejected(cert.mode, f"block refers to generator {blk.k}, system has {S.count}")
        weight = S.weight(blk.k)
        label = 'sos' if blk.k == 0 else S.names[blk.k - 1]
        problem = _check_block(blk, weight, nu, f"block {blk.k}")
        if problem:
            return _rejected(cert.mode, problem)
        try:
            min_eigs[label] = psd_check(blk.G, tol=max(SYMMETRY_TOL, 1e-12 * float(np.max(np.abs(blk.G)))))
        except PsatzError as e:
            return _rejected(cert.mode, f"block {blk.k}: {e}")
        rhs = rhs + gram_expand(blk, weight)

    mode_data = {}
    if cert.mode == STRICT:
        lhs = normal_form(p) - MatrixPoly.identity(p.algebra, nu, cert.epsilon)
        mode_data['epsilon'] = cert.epsilon
        if cert.epsilon < 0:
            return _rejected(cert.mode, f"negative margin {cert.epsilon}")
    elif cert.mode == CLOSURE:
        lhs = normal_form(p)
    elif cert.mode == REZNICK:
        if p.algebra.is_torus:
            return _rejected(cert.mode, 'multiplier search is not defined on the torus')
        if cert.theta < 0:
            return _rejected(cert.mode, f"negative multiplier exponent theta = {cert.theta}")
        lhs = norm_squared_power(p.algebra, cert.theta, nu) * p
        mode_data['theta'] = cert.theta
    else:
        T = cert.transformer
        if T is None:
            return _rejected(cert.mode, 'missing transformer block')
        problem = _check_block(T, p, nu, 'transformer')
        if problem:
            return _rejected(cert.mode, problem)
        try:
            min_eigs['transformer'] = psd_check(T.G, tol=max(SYMMETRY_TOL, 1e-12 * float(np.max(np.abs(T.G)))))
        except PsatzError as e:
            return _rejected(cert.mode, f"transformer: {e}")
        lhs = gram_expand(T, p) - MatrixPoly.identity(p.algebra, nu)
        mode_data['transformer_trace'] = float(np.trace(T.G))

    residual, worst = max_coefficient_gap(lhs, rhs)
    worst_name = format_monomial(p.algebra, worst) if worst is not None else None
    mode_data['level'] = cert.level
    mode_data['shifts'] = {str(blk.k): blk.shift for blk in cert.blocks if blk.shift}

    reasons = []
    if residual > tol:
        reasons.append(f"residual {residual:.3e} at monomial {worst_name} exceeds {tol:g}")
    for label, lam in min_eigs.items():
        if lam < -tol_psd:
            reasons.append(f"block {label} has min eigenvalue {lam:.3e}")

    accepted = not reasons
    logger.info(f"Verification of {cert.mode} certificate: accepted={accepted} residual={residual:.3e}")
    return {
        'accepted': accepted,
        'residual': residual,
        'worst_monomial': worst_name,
        'min_eigs': min_eigs,
        'mode': cert.mode,
        'mode_data': mode_data,
        'reason': '; '.join(reasons),
    }


def sample_constraint_set(S: ConstraintSystem, n: int, seed: int = 0, bound: float = SAMPLE_BOX,
                          max_attempts: int = MAX_SAMPLE_ATTEMPTS) -> np.ndarray:
    """Rejection-sample points of K_S from the box [-bound, bound]^d (angles on the torus)"""
    rng = np.random.default_rng(seed)
    dim = S.algebra.num_vars
    points: List[np.ndarray] = []
    attempts = 0
    while len(points) < n and attempts < max_attempts:
        if S.algebra.is_torus:
            candidate = rng.uniform(-np.pi, np.pi, dim)
        else:
            candidate = rng.uniform(-bound, bound, dim)
        attempts += 1
        if S.contains(candidate):
            points.append(candidate)
    if len(points) < n:
        logger.warning(f"Only {len(points)} of {n} points of K_S found in {attempts} attempts")
    return np.array(points).reshape(len(points), dim)


def pointwise_scan(p: MatrixPoly, S: ConstraintSystem, points: Iterable) -> dict:
    """Classify sampled evidence on K_S by the extreme eigenvalues of p"""
    lam_min, lam_max = [], []
    for pt in points:
        eigs = linalg.eigvalsh(mp_eval(p, pt))
        lam_min.append(float(eigs[0]))
        lam_max.append(float(eigs[-1]))
    if not lam_min:
        return {'samples': 0, 'classification': 'empty', 'min_eig': None, 'min_max_eig': None}

    lo, hi = min(lam_min), min(lam_max)
    if lo > 0:
        classification = 'positive'
    elif lo >= 0:
        classification = 'nonnegative'
    elif hi > 0:
        classification = 'not_negative_semidefinite'
    else:
        classification = 'violated'
    return {'samples': len(lam_min), 'classification': classification, 'min_eig': lo, 'min_max_eig': hi}


def soundness_check(p: MatrixPoly, S: ConstraintSystem, cert: Certificate, n: int = SOUNDNESS_SAMPLES,
                    seed: int = 0, bound: float = SAMPLE_BOX) -> dict:
    """A strict certificate with margin eps forces lambda_min(p(a)) >= eps/2 on K_S"""
    points = sample_constraint_set(S, n, seed, bound)
    scan = pointwise_scan(p, S, points)
    floor = cert.epsilon / 2
    ok = scan['min_eig'] is None or scan['min_eig'] >= floor
    if not ok:
        logger.error(f"Sampled lambda_min {scan['min_eig']:.6g} below half the margin {floor:.6g}")
    return {'ok': ok, 'samples': scan['samples'], 'min_eig': scan['min_eig'], 'floor': floor}
