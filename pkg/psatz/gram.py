"""
Lifted Gram parametrization of weighted matrix sums of squares and the certificate SDP builder

A Gram block for generator p_k (size nu_k) and ambient size nu is indexed by
(basis monomial alpha, generator row r, ambient column c), flattened as
(a * nu_k + r) * nu + c. A rank-one block u u' represents q* p_k q where
q = sum_alpha x^alpha Q_alpha and u[(a, r, c)] = Q_alpha[r, c].
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import ERROR_MESSAGES, WITNESS_TRACE_BOUND
from .errors import DegreeOverflow, DimensionMismatch, SizeMismatch, UnsupportedCombination
from .poly import (AlgebraSpec, MatrixPoly, Monomial, format_monomial, monomial_add, monomial_basis,
                   monomial_degree, monomial_key, normal_form, norm_squared_power, reduce_monomial)
from .quadratic_module import TruncationPlan
from .sdp import SdpProblem, SdpSolution

logger = logging.getLogger(__name__)

STRICT = 'strict'
CLOSURE = 'closure'
REZNICK = 'reznick'
NNSD = 'nnsd'
REFUTE = 'refute'
MODES = (STRICT, CLOSURE, REZNICK, NNSD, REFUTE)

TRANSFORMER = -1

Key = Tuple[Monomial, int, int]


@dataclass
class GramBlock:
    k: int
    basis: List[Monomial]
    weight_size: int
    ambient: int
    G: np.ndarray
    shift: float = 0.0

    @property
    def lift_dim(self) -> int:
        return len(self.basis) * self.weight_size * self.ambient

    def check_shape(self):
        if self.G.shape != (self.lift_dim, self.lift_dim):
            raise DimensionMismatch(
                f"block {self.k}: Gram matrix has shape {self.G.shape}, expected {(self.lift_dim, self.lift_dim)}")


@dataclass
class Certificate:
    mode: str
    level: int
    algebra: AlgebraSpec
    ambient_size: int
    blocks: List[GramBlock]
    epsilon: float = 0.0
    theta: int = 0
    generator_names: List[str] = field(default_factory=list)
    transformer: Optional[GramBlock] = None

    def block(self, k: int) -> Optional[GramBlock]:
        for blk in self.blocks:
            if blk.k == k:
                return blk
        return None


def lifted_index(a: int, r: int, c: int, weight_size: int, ambient: int) -> int:
    return (a * weight_size + r) * ambient + c


def _raw_terms(block: GramBlock, weight: MatrixPoly):
    """Yield (monomial, weight, nu x nu contribution) for every basis pair and weight monomial"""
    N, wk, nu = len(block.basis), block.weight_size, block.ambient
    G6 = block.G.reshape(N, wk, nu, N, wk, nu)
    for gamma, P in weight.terms.items():
        E = np.einsum('aribsj,rs->abij', G6, P)
        for a, alpha in enumerate(block.basis):
            for b, beta in enumerate(block.basis):
                yield monomial_add(monomial_add(alpha, beta), gamma), E[a, b]


def gram_expand(block: GramBlock, p_k: MatrixPoly) -> MatrixPoly:
    """The polynomial sum_j q_j* p_k q_j represented by the block, in normal form"""
    block.check_shape()
    if p_k.shape != (block.weight_size, block.weight_size):
        raise DimensionMismatch(f"weight has shape {p_k.shape}, block expects size {block.weight_size}")
    algebra = p_k.algebra
    terms: Dict[Monomial, np.ndarray] = {}
    for raw, coef in _raw_terms(block, p_k):
        for mono, wt in reduce_monomial(algebra, raw):
            terms[mono] = terms[mono] + wt * coef if mono in terms else wt * coef
    return MatrixPoly(algebra, terms, (block.ambient, block.ambient))


def _stack(q: MatrixPoly, basis_index: Dict[Monomial, int], N: int) -> np.ndarray:
    wk, nu = q.shape
    u = np.zeros(N * wk * nu)
    for m, coef in q.terms.items():
        if m not in basis_index:
            raise DimensionMismatch(f"monomial {m} lies outside the basis")
        start = lifted_index(basis_index[m], 0, 0, wk, nu)
        u[start:start + wk * nu] = coef.reshape(-1)
    return u


def gram_synthesize(qs: Sequence[MatrixPoly], basis: Sequence[Monomial], weight_size: Optional[int] = None,
                    k: int = 0) -> GramBlock:
    """G = sum_j u_j u_j' for the coefficient stacks u_j of the q's"""
    if not qs:
        raise SizeMismatch("at least one multiplier is needed to fix the block shape")
    basis = list(basis)
    index = {m: a for a, m in enumerate(basis)}
    nu = qs[0].cols
    wk = qs[0].rows if weight_size is None else weight_size
    vectors = []
    for q in qs:
        if q.cols != nu:
            raise SizeMismatch(f"{ERROR_MESSAGES['size_mismatch']}: {q.shape} vs ambient {nu}")
        if q.rows == wk:
            vectors.append(_stack(q, index, len(basis)))
        elif wk == 1:
            for r in range(q.rows):
                row = MatrixPoly(q.algebra, {m: c[r:r + 1, :] for m, c in q.terms.items()}, (1, nu))
                vectors.append(_stack(row, index, len(basis)))
        else:
            raise SizeMismatch(f"multiplier has {q.rows} rows, weight size is {wk}")
    U = np.array(vectors)
    return GramBlock(k, basis, wk, nu, U.T @ U)


def factor_block(block: GramBlock, algebra: AlgebraSpec, tol: float = 1e-12) -> List[MatrixPoly]:
    """Eigen-factor a block into explicit multipliers q_j (unverified convenience output)"""
    block.check_shape()
    lam, vecs = np.linalg.eigh(block.G)
    wk, nu = block.weight_size, block.ambient
    qs = []
    for j in range(len(lam) - 1, -1, -1):
        if lam[j] <= tol:
            continue
        u = math.sqrt(lam[j]) * vecs[:, j]
        terms = {m: u[a * wk * nu:(a + 1) * wk * nu].reshape(wk, nu) for a, m in enumerate(block.basis)}
        qs.append(MatrixPoly(algebra, terms, (wk, nu)))
    return qs


def lift_block(block: GramBlock, algebra: AlgebraSpec) -> GramBlock:
    """Gram block of |x|^2 times the represented polynomial: G' = sum_i S_i G S_i'"""
    if algebra.is_torus:
        raise UnsupportedCombination(ERROR_MESSAGES['homogeneous_torus'])
    degrees = {monomial_degree(m) for m in block.basis}
    if len(degrees) != 1:
        raise UnsupportedCombination(ERROR_MESSAGES['inhomogeneous'])
    new_basis = monomial_basis(algebra, degrees.pop() + 1, homogeneous=True)
    position = {m: a for a, m in enumerate(new_basis)}
    wk, nu = block.weight_size, block.ambient
    width = wk * nu
    G_new = np.zeros((len(new_basis) * width,) * 2)
    for i in range(algebra.n_gens):
        e_i = tuple(1 if j == i else 0 for j in range(algebra.n_gens))
        target = [position[monomial_add(m, e_i)] for m in block.basis]
        idx = np.concatenate([np.arange(a * width, (a + 1) * width) for a in target])
        G_new[np.ix_(idx, idx)] += block.G
    return GramBlock(block.k, new_basis, wk, nu, G_new, block.shift)


@dataclass
class BlockRole:
    """One PSD block of a certificate SDP"""
    role: str
    k: int = 0
    basis: List[Monomial] = field(default_factory=list)
    weight: Optional[MatrixPoly] = None

    @property
    def weight_size(self) -> int:
        return 1 if self.weight is None else self.weight.size


@dataclass
class GramLayout:
    """Index map from an SDP back to the certificate it encodes"""
    mode: str
    level: int
    algebra: AlgebraSpec
    ambient: int
    roles: List[BlockRole]
    keys: List[Key]
    target: MatrixPoly
    theta: int = 0
    homogeneous: bool = False
    trace_bound: Optional[float] = None

    def index_of(self, role: str) -> Optional[int]:
        for j, r in enumerate(self.roles):
            if r.role == role:
                return j
        return None

    def module_blocks(self) -> List[Tuple[int, BlockRole]]:
        return [(j, r) for j, r in enumerate(self.roles) if r.role == 'module']


def _constraint_maps(basis: List[Monomial], weight: MatrixPoly, ambient: int,
                     sign: float = 1.0) -> Dict[Key, np.ndarray]:
    """Per constraint key (delta, i, j), the symmetric matrix A with <A, G> = coefficient of x^delta at [i, j]"""
    algebra = weight.algebra
    wk = weight.size
    D = len(basis) * wk * ambient
    r_offsets = np.arange(wk) * ambient
    maps: Dict[Key, np.ndarray] = {}
    for gamma, P in weight.terms.items():
        for a, alpha in enumerate(basis):
            for b, beta in enumerate(basis):
                raw = monomial_add(monomial_add(alpha, beta), gamma)
                for delta, wt in reduce_monomial(algebra, raw):
                    for i in range(ambient):
                        rows = a * wk * ambient + r_offsets + i
                        for j in range(i, ambient):
                            cols = b * wk * ambient + r_offsets + j
                            key = (delta, i, j)
                            if key not in maps:
                                maps[key] = np.zeros((D, D))
                            maps[key][np.ix_(rows, cols)] += sign * wt * P
    for key, mat in maps.items():
        maps[key] = 0.5 * (mat + mat.T)
    return maps


def _identity_keys(algebra: AlgebraSpec, ambient: int) -> List[Key]:
    return [(algebra.one(), i, i) for i in range(ambient)]


def build_certificate_sdp(p: MatrixPoly, plan: TruncationPlan, mode: str = STRICT, theta: int = 0,
                          trace_bound: float = WITNESS_TRACE_BOUND) -> Tuple[SdpProblem, GramLayout]:
    """Coefficient-matching SDP for p at the plan's level, with the layout needed to decode it"""
    if mode not in MODES:
        raise UnsupportedCombination(f"unknown certificate mode {mode!r}")
    if not p.is_hermitian():
        raise UnsupportedCombination(ERROR_MESSAGES['not_hermitian'])
    algebra, nu, t = p.algebra, p.size, plan.level

    target = normal_form(p)
    if mode == REZNICK:
        target = norm_squared_power(algebra, theta, nu) * p
    elif mode == NNSD:
        target = MatrixPoly.identity(algebra, nu, -1.0)
    if target.degree() > 2 * t:
        raise DegreeOverflow(f"{ERROR_MESSAGES['degree_overflow']}: degree {target.degree()} > 2*{t}")

    roles: List[BlockRole] = []
    maps: List[Dict[Key, np.ndarray]] = []
    for entry in plan.entries:
        roles.append(BlockRole('module', entry.k, entry.basis, entry.weight))
        maps.append(_constraint_maps(entry.basis, entry.weight, nu))

    if mode == NNSD:
        t_c = t - math.ceil(p.degree() / 2)
        if t_c < 0:
            raise DegreeOverflow(f"{ERROR_MESSAGES['degree_overflow']}: transformer needs level {math.ceil(p.degree() / 2)}")
        basis = monomial_basis(algebra, t_c)
        roles.append(BlockRole('transformer', TRANSFORMER, basis, p))
        maps.append(_constraint_maps(basis, p, nu, sign=-1.0))
    if mode == STRICT:
        roles.append(BlockRole('margin'))
        maps.append({key: np.ones((1, 1)) for key in _identity_keys(algebra, nu)})
    free_column: Dict[Key, float] = {}
    if mode == REFUTE:
        roles.append(BlockRole('bound'))
        bound_map: Dict[Key, np.ndarray] = {}
        for alpha in plan.entry(0).basis:
            for mono, wt in reduce_monomial(algebra, monomial_add(alpha, alpha)):
                for i in range(nu):
                    key = (mono, i, i)
                    bound_map[key] = bound_map.get(key, np.zeros((1, 1))) - wt
        maps.append(bound_map)
        free_column = {key: 1.0 for key in _identity_keys(algebra, nu)}

    all_keys = set(free_column)
    for mp in maps:
        all_keys.update(mp)
    for mono, coef in target.terms.items():
        for i in range(nu):
            for j in range(i, nu):
                if coef[i, j] != 0.0:
                    all_keys.add((mono, i, j))
    ordered = sorted(all_keys, key=lambda key: (monomial_key(key[0]), key[1], key[2]))

    keys: List[Key] = []
    for key in ordered:
        rhs = target.coefficient(key[0])[key[1], key[2]]
        touched = key in free_column or any(key in mp and np.any(mp[key]) for mp in maps)
        if touched:
            keys.append(key)
        elif rhs != 0.0:
            raise DegreeOverflow(
                f"{ERROR_MESSAGES['degree_overflow']}: coefficient of {format_monomial(algebra, key[0])} "
                f"at [{key[1]},{key[2]}] is out of reach at level {t}")

    dims = [len(r.basis) * r.weight_size * nu if r.role in ('module', 'transformer') else 1 for r in roles]
    m = len(keys)
    A = [np.zeros((m, n, n)) for n in dims]
    b = np.zeros(m)
    for i, key in enumerate(keys):
        b[i] = target.coefficient(key[0])[key[1], key[2]]
        for j, mp in enumerate(maps):
            if key in mp:
                A[j][i] = mp[key]

    objective = [np.zeros((n, n)) for n in dims]
    F = g = None
    margin = None
    if mode == STRICT:
        margin = len(roles) - 1
        objective[margin] = np.ones((1, 1))
    elif mode == NNSD:
        objective[len(roles) - 1] = -np.eye(dims[-1])
    elif mode == REFUTE:
        objective[len(roles) - 1] = -trace_bound * np.ones((1, 1))
        F = np.array([[free_column.get(key, 0.0)] for key in keys])
        g = np.ones(1)

    labels = [f"{format_monomial(algebra, key[0])}[{key[1]},{key[2]}]" for key in keys]
    prob = SdpProblem(dims, objective, A, b, 'max', F=F, g=g, margin_block=margin, labels=labels)
    layout = GramLayout(mode, t, algebra, nu, roles, keys, target, theta, plan.homogeneous,
                        trace_bound if mode == REFUTE else None)
    logger.debug(f"{mode} SDP at level {t}: blocks {dims}, {m} constraints")
    return prob, layout


def _decode_block(role: BlockRole, X: np.ndarray, ambient: int) -> GramBlock:
    G = 0.5 * (X + X.T)
    lam_min = float(np.linalg.eigvalsh(G)[0])
    shift = max(0.0, -lam_min)
    if shift:
        G = G + shift * np.eye(G.shape[0])
    return GramBlock(role.k, list(role.basis), role.weight_size, ambient, G, shift)


def decode_certificate(sol: SdpSolution, layout: GramLayout, names: Optional[List[str]] = None) -> Certificate:
    """Turn a primal iterate into a Certificate, shifting each Gram block to be PSD"""
    if layout.mode == REFUTE:
        raise UnsupportedCombination("the bounded moment problem does not encode a certificate")
    if sol.X is None:
        raise DimensionMismatch("solution carries no primal iterate")
    blocks, transformer, epsilon = [], None, 0.0
    for j, role in enumerate(layout.roles):
        if role.role == 'module':
            blocks.append(_decode_block(role, sol.X[j], layout.ambient))
        elif role.role == 'transformer':
            transformer = _decode_block(role, sol.X[j], layout.ambient)
        elif role.role == 'margin':
            epsilon = float(sol.X[j][0, 0])
    return Certificate(
        mode=layout.mode, level=layout.level, algebra=layout.algebra, ambient_size=layout.ambient,
        blocks=blocks, epsilon=epsilon, theta=layout.theta, generator_names=list(names or []),
        transformer=transformer,
    )
