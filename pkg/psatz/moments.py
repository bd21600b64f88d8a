"""
Truncated moment functionals, moment and localizing matrices, and refutation witnesses
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Union

import numpy as np

from .config import (ERROR_MESSAGES, WITNESS_PSD_TOL, WITNESS_THRESHOLD, WITNESS_TRACE_BOUND)
from .errors import DegreeOverflow, DimensionMismatch, PsatzError
from .poly import AlgebraSpec, MatrixPoly, Monomial, Point, monomial_add, monomial_basis, normal_form, reduce_monomial

logger = logging.getLogger(__name__)


@dataclass
class MomentFunctional:
    """L(x^delta (x) E) = <V_delta, E>, stored as one symmetric nu x nu matrix per monomial"""
    algebra: AlgebraSpec
    size: int
    level: int
    values: Dict[Monomial, np.ndarray] = field(default_factory=dict)
    homogeneous: bool = False

    def value(self, m: Monomial) -> np.ndarray:
        out = np.zeros((self.size, self.size))
        for mono, wt in reduce_monomial(self.algebra, tuple(m)):
            if mono not in self.values:
                raise DimensionMismatch(f"missing moment value for exponents {list(mono)}")
            out += wt * self.values[mono]
        return out

    def apply(self, f: MatrixPoly) -> float:
        """L(f) = sum_delta <V_delta, F_delta>"""
        if f.shape != (self.size, self.size):
            raise DimensionMismatch(f"polynomial of shape {f.shape} against a functional of size {self.size}")
        return float(sum(np.sum(self.value(m) * c) for m, c in f.terms.items()))

    def trace_one(self) -> float:
        return float(np.trace(self.value(self.algebra.one())))

    def normalized(self) -> 'MomentFunctional':
        tr = self.trace_one()
        if tr <= 0:
            raise PsatzError("functional has nonpositive trace at 1 and cannot be normalized")
        return MomentFunctional(self.algebra, self.size, self.level,
                                {m: v / tr for m, v in self.values.items()}, self.homogeneous)


def _basis_for(L: MomentFunctional, degree: int):
    return monomial_basis(L.algebra, degree, homogeneous=L.homogeneous)


def localizing_matrix(L: MomentFunctional, p_k: MatrixPoly) -> np.ndarray:
    """Block (alpha, r, i), (beta, s, j) holds sum_gamma P_gamma[r, s] V_{alpha+beta+gamma}[i, j]"""
    if p_k.algebra != L.algebra:
        raise DimensionMismatch(ERROR_MESSAGES['algebra_mismatch'])
    deg = p_k.degree()
    t_k = L.level - (deg // 2 if L.homogeneous else math.ceil(deg / 2))
    if t_k < 0:
        raise DegreeOverflow(f"{ERROR_MESSAGES['degree_overflow']}: level {L.level} cannot localize degree {deg}")
    basis = _basis_for(L, t_k)
    N, wk, nu = len(basis), p_k.size, L.size
    loc = np.zeros((N, wk, nu, N, wk, nu))
    for gamma, P in p_k.terms.items():
        for a, alpha in enumerate(basis):
            for b, beta in enumerate(basis):
                V = L.value(monomial_add(monomial_add(alpha, beta), gamma))
                loc[a, :, :, b, :, :] += np.einsum('rs,ij->risj', P, V)
    D = N * wk * nu
    return loc.reshape(D, D)


def moment_matrix(L: MomentFunctional) -> np.ndarray:
    return localizing_matrix(L, MatrixPoly.identity(L.algebra, 1))


def evaluation_functional(a: Union[Point, Sequence[float]], v: Sequence[float], t: int,
                          algebra: AlgebraSpec) -> MomentFunctional:
    """The state f -> <f(a) v, v> truncated at level t"""
    v = np.asarray(v, dtype=float).reshape(-1)
    if abs(float(np.linalg.norm(v)) - 1.0) > 1e-12:
        raise PsatzError("evaluation vector must have unit norm")
    if not isinstance(a, Point):
        a = Point(tuple(float(c) for c in a))
    gens = a.generator_values(algebra)
    outer = np.outer(v, v)
    values = {}
    for m in monomial_basis(algebra, 2 * t):
        values[m] = float(np.prod(gens ** np.array(m))) * outer
    return MomentFunctional(algebra, v.shape[0], t, values)


def functional_from_ray(layout, y: np.ndarray) -> MomentFunctional:
    """Read a dual vector of a certificate SDP as a moment functional"""
    nu = layout.ambient
    values: Dict[Monomial, np.ndarray] = {}
    for key, val in zip(layout.keys, np.asarray(y, dtype=float)):
        mono, i, j = key
        V = values.setdefault(mono, np.zeros((nu, nu)))
        if i == j:
            V[i, i] = val
        else:
            V[i, j] = V[j, i] = 0.5 * val
    if layout.homogeneous:
        basis = monomial_basis(layout.algebra, 2 * layout.level, homogeneous=True)
    else:
        basis = monomial_basis(layout.algebra, 2 * layout.level)
    for m in basis:
        values.setdefault(m, np.zeros((nu, nu)))
    return MomentFunctional(layout.algebra, nu, layout.level, values, layout.homogeneous)


def audit_functional(L: MomentFunctional, S) -> dict:
    """Smallest eigenvalue of the moment matrix and of every localizing matrix L can build"""
    from .verify import psd_check

    min_eigs = {'moment': psd_check(moment_matrix(L))}
    for name, g in zip(S.names, S.generators):
        try:
            min_eigs[name] = psd_check(localizing_matrix(L, g))
        except DegreeOverflow:
            logger.debug(f"generator {name} beyond level {L.level}; not localized")
    return min_eigs


def audit_witness(p: MatrixPoly, S, L: MomentFunctional) -> dict:
    """Independent check of a stored witness: L(p) below the threshold and every matrix L builds PSD"""
    report = {'accepted': False, 'value': None, 'min_eigs': {}, 'reason': ''}
    if L.algebra != p.algebra:
        report['reason'] = ERROR_MESSAGES['algebra_mismatch']
        return report
    try:
        report['value'] = L.apply(normal_form(p))
        report['min_eigs'] = audit_functional(L, S)
    except PsatzError as e:
        report['reason'] = str(e)
        return report

    bad = [f"{name} matrix has eigenvalue {lam:.3e}" for name, lam in report['min_eigs'].items()
           if lam < -WITNESS_PSD_TOL]
    if report['value'] >= WITNESS_THRESHOLD:
        bad.insert(0, f"L(p) = {report['value']:.3e} is not negative")
    if bad:
        report['reason'] = '; '.join(bad)
        logger.info(f"Witness rejected: {report['reason']}")
        return report
    report['accepted'] = True
    logger.info(f"Witness accepted with L(p) = {report['value']:.6g}")
    return report


def refute(p: MatrixPoly, S, t: int, trace_bound: float = WITNESS_TRACE_BOUND,
           opts: Optional[dict] = None) -> dict:
    """Minimize L(p) over normalized M_S-positive functionals at level t"""
    from .gram import REFUTE, build_certificate_sdp
    from .quadratic_module import truncate
    from .sdp import solve

    plan = truncate(S, t)
    prob, layout = build_certificate_sdp(p, plan, REFUTE, trace_bound=trace_bound)
    sol = solve(prob, opts)
    logger.info(f"Refutation SDP at level {t}: {sol.status} ({sol.message})")

    result = {
        'refuted': False,
        'witness': None,
        'value': None,
        'level': t,
        'min_eigs': {},
        'status': sol.status,
    }
    if sol.y is None or not np.all(np.isfinite(sol.y)):
        return result

    L = functional_from_ray(layout, sol.y)
    if L.trace_one() <= 0:
        return result
    L = L.normalized()
    value = L.apply(normal_form(p))
    min_eigs = audit_functional(L, S)
    psd_ok = all(lam >= -WITNESS_PSD_TOL for lam in min_eigs.values())

    result.update({'value': value, 'min_eigs': min_eigs})
    if value < WITNESS_THRESHOLD and psd_ok:
        result.update({'refuted': True, 'witness': L})
        logger.info(f"Witness found at level {t}: L(p) = {value:.6g}")
    elif value < WITNESS_THRESHOLD:
        logger.warning(f"Candidate witness at level {t} failed the PSD audit: {min_eigs}")
    return result
