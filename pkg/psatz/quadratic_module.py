"""
Generator sets, degree-truncated quadratic modules and the archimedean probe
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from .config import ERROR_MESSAGES, PROBE_K_MAX, PROBE_T_MAX
from .errors import AlgebraMismatch, UnsupportedCombination
from .poly import AlgebraSpec, MatrixPoly, Monomial, ball_polynomial, monomial_basis, mp_eval

logger = logging.getLogger(__name__)


@dataclass
class ConstraintSystem:
    """The generators p_1..p_m of M_S; index 0 is always the implicit scalar 1"""
    algebra: AlgebraSpec
    ambient_size: int
    generators: List[MatrixPoly] = field(default_factory=list)
    names: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.generators = list(self.generators)
        for i, g in enumerate(self.generators):
            if g.algebra != self.algebra:
                raise AlgebraMismatch(f"generator {i + 1}: {ERROR_MESSAGES['algebra_mismatch']}")
            if not g.is_hermitian():
                raise UnsupportedCombination(f"generator {i + 1}: {ERROR_MESSAGES['not_hermitian']}")
        if not self.names:
            self.names = [f"p{i + 1}" for i in range(len(self.generators))]
        if len(self.names) != len(self.generators):
            raise UnsupportedCombination("one name per generator is required")

    @property
    def count(self) -> int:
        return len(self.generators)

    def weight(self, k: int) -> MatrixPoly:
        if k == 0:
            return MatrixPoly.identity(self.algebra, 1)
        return self.generators[k - 1]

    def weights(self) -> List[MatrixPoly]:
        return [self.weight(k) for k in range(self.count + 1)]

    def with_ambient(self, size: int) -> 'ConstraintSystem':
        return replace(self, ambient_size=size, generators=list(self.generators), names=list(self.names))

    def permuted(self, order: Sequence[int]) -> 'ConstraintSystem':
        return replace(self, generators=[self.generators[i] for i in order],
                       names=[self.names[i] for i in order])

    def contains(self, point_values) -> bool:
        """Whether a point lies in K_S (every generator PSD there)"""
        for g in self.generators:
            if np.linalg.eigvalsh(mp_eval(g, point_values)).min() < 0:
                return False
        return True


@dataclass
class PlanEntry:
    k: int
    weight: MatrixPoly
    degree: int
    basis: List[Monomial]


@dataclass
class TruncationPlan:
    level: int
    homogeneous: bool
    entries: List[PlanEntry]
    dropped: List[int] = field(default_factory=list)

    def entry(self, k: int) -> Optional[PlanEntry]:
        for e in self.entries:
            if e.k == k:
                return e
        return None


def multiplier_degree(level: int, weight_degree: int, homogeneous: bool = False) -> int:
    if homogeneous:
        return level - weight_degree // 2
    return level - math.ceil(weight_degree / 2)


def truncate(S: ConstraintSystem, t: int, homogeneous: bool = False) -> TruncationPlan:
    """Multiplier bases for every generator at level t; generators of degree > 2t are dropped"""
    if homogeneous:
        for i, g in enumerate(S.generators):
            if not g.is_homogeneous() or g.degree() % 2:
                raise UnsupportedCombination(f"generator {S.names[i]}: {ERROR_MESSAGES['inhomogeneous']}")
    entries, dropped = [], []
    for k, w in enumerate(S.weights()):
        tk = multiplier_degree(t, w.degree(), homogeneous)
        if tk < 0:
            dropped.append(k)
            logger.debug(f"level {t}: generator {k} of degree {w.degree()} dropped")
            continue
        entries.append(PlanEntry(k, w, tk, monomial_basis(S.algebra, tk, homogeneous)))
    return TruncationPlan(t, homogeneous, entries, dropped)


def known_archimedean(S: ConstraintSystem) -> bool:
    """Torus generators are bounded, so every quadratic module there is archimedean"""
    return S.algebra.is_torus


def doubling_grid(K_max: float) -> List[float]:
    grid, K = [], 1.0
    while K <= K_max:
        grid.append(K)
        K *= 2.0
    return grid


def archimedean_probe(S: ConstraintSystem, t_max: int = PROBE_T_MAX, K_max: float = PROBE_K_MAX,
                      workers: Optional[int] = None) -> dict:
    """Search for K^2 - |x|^2 in M_S over a doubling K grid and levels t <= t_max"""
    from .certify import putinar_certify
    from .utils import first_success

    if S.algebra.is_torus:
        raise UnsupportedCombination(ERROR_MESSAGES['not_free'])

    scalar_system = S.with_ambient(1)
    cells = [(t, K) for t in range(1, t_max + 1) for K in doubling_grid(K_max)]

    def run_cell(cell):
        t, K = cell
        target = ball_polynomial(S.algebra, K)
        outcome = putinar_certify(target, scalar_system, t_range=[t], mode='closure')
        logger.info(f"Probe K={K:g} t={t}: {outcome['status']}")
        return outcome

    index, outcomes = first_success(cells, run_cell, lambda o: o['status'] == 'certified', workers)
    tried = [{'t': c[0], 'K': c[1], 'status': o['status']} for c, o in zip(cells, outcomes)]

    if index is None:
        return {
            'found': False,
            'conclusive': False,
            'tried': tried,
            'message': 'no certificate at the tried levels; this does not show M_S is not archimedean',
        }

    t, K = cells[index]
    outcome = outcomes[index]
    return {
        'found': True,
        'K': K,
        'level': t,
        'certificate': outcome['certificate'],
        'report': outcome['report'],
        'tried': tried,
    }
