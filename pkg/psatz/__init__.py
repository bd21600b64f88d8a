"""
Matrix polynomial Positivstellensatz certificates: search, refutation and verification
"""

from .certify import (fejer_riesz_certify, lift_reznick_certificate, nnsd_certify, putinar_certify,
                      reznick_certify)
from .gram import Certificate, GramBlock, build_certificate_sdp, gram_expand, gram_synthesize
from .moments import MomentFunctional, evaluation_functional, localizing_matrix, moment_matrix, refute
from .poly import AlgebraSpec, MatrixPoly, Point, mp_adjoint, mp_eval, mp_mul, torus_reduce
from .quadratic_module import ConstraintSystem, archimedean_probe, truncate
from .sdp import SdpProblem, SdpSolution, residuals, solve
from .verify import psd_check, verify_certificate

__all__ = [
    'AlgebraSpec', 'Certificate', 'ConstraintSystem', 'GramBlock', 'MatrixPoly', 'MomentFunctional', 'Point',
    'SdpProblem', 'SdpSolution', 'archimedean_probe', 'build_certificate_sdp', 'evaluation_functional',
    'fejer_riesz_certify', 'gram_expand', 'gram_synthesize', 'lift_reznick_certificate', 'localizing_matrix',
    'moment_matrix', 'mp_adjoint', 'mp_eval', 'mp_mul', 'nnsd_certify', 'psd_check', 'putinar_certify',
    'refute', 'reznick_certify', 'residuals', 'solve', 'torus_reduce', 'truncate', 'verify_certificate',
]
