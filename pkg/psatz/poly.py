"""
Polynomials with matrix coefficients over the polynomial ring and the torus algebra
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .config import ERROR_MESSAGES
from .errors import AlgebraMismatch, DimensionMismatch, SizeMismatch, UnsupportedCombination

logger = logging.getLogger(__name__)

FREE_POLY = 'poly'
TORUS = 'torus'

Monomial = Tuple[int, ...]


@dataclass(frozen=True)
class AlgebraSpec:
    """Either R[x_1..x_d] or the torus quotient R[c_1,s_1,..,c_n,s_n]/(c_i^2+s_i^2-1)"""
    kind: str
    num_vars: int

    def __post_init__(self):
        if self.kind not in (FREE_POLY, TORUS):
            raise UnsupportedCombination(f"unknown algebra kind {self.kind!r}")
        if int(self.num_vars) < 1:
            raise DimensionMismatch("an algebra needs at least one variable")

    @property
    def is_torus(self) -> bool:
        return self.kind == TORUS

    @property
    def n_gens(self) -> int:
        return 2 * self.num_vars if self.is_torus else self.num_vars

    def generator_names(self) -> List[str]:
        if self.is_torus:
            names = []
            for i in range(1, self.num_vars + 1):
                names.extend([f"c{i}", f"s{i}"])
            return names
        return [f"x{i}" for i in range(1, self.num_vars + 1)]

    def one(self) -> Monomial:
        return (0,) * self.n_gens

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'vars': self.num_vars}


@dataclass(frozen=True)
class Point:
    """A point evaluation; torus coordinates are angles in radians"""
    coordinates: Tuple[float, ...]

    def generator_values(self, algebra: AlgebraSpec) -> np.ndarray:
        if len(self.coordinates) != algebra.num_vars:
            raise DimensionMismatch(
                f"point has {len(self.coordinates)} coordinates, algebra needs {algebra.num_vars}"
            )
        if not algebra.is_torus:
            return np.asarray(self.coordinates, dtype=float)
        values = []
        for phi in self.coordinates:
            values.extend([math.cos(phi), math.sin(phi)])
        return np.asarray(values, dtype=float)


def monomial_degree(m: Monomial) -> int:
    return sum(m)


def monomial_key(m: Monomial) -> Tuple[int, Tuple[int, ...]]:
    """Graded lexicographic sort key (x1 > x2 > ... within a degree)"""
    return (sum(m), tuple(-e for e in m))


def monomial_add(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


def is_normal(algebra: AlgebraSpec, m: Monomial) -> bool:
    if not algebra.is_torus:
        return True
    return all(e <= 1 for e in m[1::2])


def format_monomial(algebra: AlgebraSpec, m: Monomial) -> str:
    parts = []
    for name, e in zip(algebra.generator_names(), m):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return '*'.join(parts) if parts else '1'


@lru_cache(maxsize=65536)
def _reduce_monomial(m: Monomial) -> Tuple[Tuple[Monomial, float], ...]:
    # s^(2k+r) = s^r (1 - c^2)^k, expanded per angle pair
    expansion: Dict[Monomial, float] = {(): 1.0}
    for i in range(0, len(m), 2):
        ec, es = m[i], m[i + 1]
        k, r = divmod(es, 2)
        factor = [((ec + 2 * j, r), float(math.comb(k, j) * (-1) ** j)) for j in range(k + 1)]
        nxt: Dict[Monomial, float] = {}
        for prefix, w in expansion.items():
            for pair, v in factor:
                key = prefix + pair
                nxt[key] = nxt.get(key, 0.0) + w * v
        expansion = nxt
    return tuple((mono, w) for mono, w in expansion.items() if w != 0.0)


def reduce_monomial(algebra: AlgebraSpec, m: Monomial) -> Tuple[Tuple[Monomial, float], ...]:
    """Normal form of a single monomial as (monomial, weight) pairs"""
    if not algebra.is_torus or is_normal(algebra, m):
        return ((m, 1.0),)
    return _reduce_monomial(m)


class MatrixPoly:
    """Sparse polynomial whose coefficients are dense real matrices"""

    __slots__ = ('algebra', 'shape', 'terms')

    def __init__(self, algebra: AlgebraSpec, terms: Mapping[Monomial, object],
                 shape: Optional[Tuple[int, int]] = None):
        self.algebra = algebra
        clean: Dict[Monomial, np.ndarray] = {}
        for m, coef in terms.items():
            m = tuple(int(e) for e in m)
            if len(m) != algebra.n_gens or any(e < 0 for e in m):
                raise DimensionMismatch(f"monomial {m} does not fit {algebra.n_gens} generators")
            arr = np.array(coef, dtype=float, ndmin=2)
            if shape is None:
                shape = arr.shape
            if arr.shape != tuple(shape):
                raise SizeMismatch(f"coefficient of {m} has shape {arr.shape}, expected {shape}")
            if m in clean:
                clean[m] = clean[m] + arr
            else:
                clean[m] = arr
        if shape is None:
            raise SizeMismatch("the shape of a zero polynomial must be given")
        self.shape = (int(shape[0]), int(shape[1]))
        self.terms = {m: c for m, c in clean.items() if np.any(c)}

    # Constructors

    @classmethod
    def zero(cls, algebra: AlgebraSpec, rows: int, cols: Optional[int] = None) -> 'MatrixPoly':
        return cls(algebra, {}, (rows, rows if cols is None else cols))

    @classmethod
    def constant(cls, algebra: AlgebraSpec, matrix) -> 'MatrixPoly':
        arr = np.array(matrix, dtype=float, ndmin=2)
        return cls(algebra, {algebra.one(): arr}, arr.shape)

    @classmethod
    def identity(cls, algebra: AlgebraSpec, size: int, scale: float = 1.0) -> 'MatrixPoly':
        return cls.constant(algebra, scale * np.eye(size))

    @classmethod
    def generator(cls, algebra: AlgebraSpec, index: int, size: int = 1) -> 'MatrixPoly':
        m = [0] * algebra.n_gens
        m[index] = 1
        return cls(algebra, {tuple(m): np.eye(size)}, (size, size))

    @classmethod
    def scalar(cls, algebra: AlgebraSpec, coeffs: Mapping[Monomial, float], size: int = 1) -> 'MatrixPoly':
        return cls(algebra, {m: c * np.eye(size) for m, c in coeffs.items()}, (size, size))

    # Properties

    @property
    def rows(self) -> int:
        return self.shape[0]

    @property
    def cols(self) -> int:
        return self.shape[1]

    @property
    def size(self) -> int:
        return self.shape[0]

    @property
    def is_square(self) -> bool:
        return self.shape[0] == self.shape[1]

    def degree(self) -> int:
        return max((monomial_degree(m) for m in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def is_hermitian(self) -> bool:
        return self.is_square and all(np.array_equal(c, c.T) for c in self.terms.values())

    def is_homogeneous(self) -> bool:
        return len({monomial_degree(m) for m in self.terms}) <= 1

    def coefficient(self, m: Monomial) -> np.ndarray:
        c = self.terms.get(tuple(m))
        return np.zeros(self.shape) if c is None else c

    def monomials(self) -> List[Monomial]:
        return sorted(self.terms, key=monomial_key)

    # Arithmetic

    def _check_same(self, other: 'MatrixPoly'):
        if self.algebra != other.algebra:
            raise AlgebraMismatch(ERROR_MESSAGES['algebra_mismatch'])
        if self.shape != other.shape:
            raise SizeMismatch(f"{ERROR_MESSAGES['size_mismatch']}: {self.shape} vs {other.shape}")

    def __add__(self, other: 'MatrixPoly') -> 'MatrixPoly':
        self._check_same(other)
        terms = {m: c.copy() for m, c in self.terms.items()}
        for m, c in other.terms.items():
            terms[m] = terms[m] + c if m in terms else c.copy()
        return MatrixPoly(self.algebra, terms, self.shape)

    def __neg__(self) -> 'MatrixPoly':
        return self.scale(-1.0)

    def __sub__(self, other: 'MatrixPoly') -> 'MatrixPoly':
        return self + (-other)

    def scale(self, factor: float) -> 'MatrixPoly':
        return MatrixPoly(self.algebra, {m: factor * c for m, c in self.terms.items()}, self.shape)

    def __mul__(self, other: Union['MatrixPoly', float, int]) -> 'MatrixPoly':
        if isinstance(other, MatrixPoly):
            return mp_mul(self, other)
        return self.scale(float(other))

    __rmul__ = scale

    def __repr__(self) -> str:
        head = ', '.join(format_monomial(self.algebra, m) for m in self.monomials()[:6])
        return f"MatrixPoly({self.algebra.kind}, {self.shape}, [{head}])"


def max_coefficient_gap(a: MatrixPoly, b: MatrixPoly) -> Tuple[float, Optional[Monomial]]:
    """Largest absolute coefficient difference and the monomial where it occurs"""
    worst, where = 0.0, None
    for m in set(a.terms) | set(b.terms):
        gap = float(np.max(np.abs(a.coefficient(m) - b.coefficient(m))))
        if gap > worst:
            worst, where = gap, m
    return worst, where


def mp_mul(a: MatrixPoly, b: MatrixPoly) -> MatrixPoly:
    """Product in R (x) M(R); torus products come back in normal form"""
    if a.algebra != b.algebra:
        raise AlgebraMismatch(ERROR_MESSAGES['algebra_mismatch'])
    if a.cols != b.rows:
        raise SizeMismatch(f"{ERROR_MESSAGES['size_mismatch']}: {a.shape} times {b.shape}")
    terms: Dict[Monomial, np.ndarray] = {}
    for ma, ca in a.terms.items():
        for mb, cb in b.terms.items():
            m = monomial_add(ma, mb)
            prod = ca @ cb
            terms[m] = terms[m] + prod if m in terms else prod
    out = MatrixPoly(a.algebra, terms, (a.rows, b.cols))
    return torus_reduce(out) if a.algebra.is_torus else out


def mp_adjoint(a: MatrixPoly) -> MatrixPoly:
    return MatrixPoly(a.algebra, {m: c.T.copy() for m, c in a.terms.items()}, (a.cols, a.rows))


def mp_eval(a: MatrixPoly, pt: Union[Point, Sequence[float]]) -> np.ndarray:
    """Evaluate at a point; for the torus the point holds angles"""
    if not isinstance(pt, Point):
        pt = Point(tuple(float(v) for v in pt))
    values = pt.generator_values(a.algebra)
    out = np.zeros(a.shape)
    for m, c in a.terms.items():
        weight = 1.0
        for v, e in zip(values, m):
            if e:
                weight *= v ** e
        out += weight * c
    return out


def torus_reduce(a: MatrixPoly) -> MatrixPoly:
    """Rewrite s_i^k (k >= 2) through s_i^2 = 1 - c_i^2 until every s-exponent is at most 1"""
    if not a.algebra.is_torus:
        raise UnsupportedCombination(ERROR_MESSAGES['not_torus'])
    terms: Dict[Monomial, np.ndarray] = {}
    for m, c in a.terms.items():
        for mono, w in reduce_monomial(a.algebra, m):
            add = w * c
            terms[mono] = terms[mono] + add if mono in terms else add
    return MatrixPoly(a.algebra, terms, a.shape)


def normal_form(a: MatrixPoly) -> MatrixPoly:
    return torus_reduce(a) if a.algebra.is_torus else a


def _exponents_of_degree(n: int, degree: int) -> Iterable[Monomial]:
    # lex descending: (deg,0,..) first
    if n == 1:
        yield (degree,)
        return
    for first in range(degree, -1, -1):
        for rest in _exponents_of_degree(n - 1, degree - first):
            yield (first,) + rest


def monomial_basis(alg: AlgebraSpec, t: int, homogeneous: bool = False) -> List[Monomial]:
    """Normal-form monomials of degree <= t (exactly t if homogeneous), graded lex order"""
    if t < 0:
        raise DimensionMismatch("truncation degree must be nonnegative")
    if homogeneous and alg.is_torus:
        raise UnsupportedCombination(ERROR_MESSAGES['homogeneous_torus'])
    degrees = [t] if homogeneous else range(t + 1)
    basis = []
    for deg in degrees:
        for m in _exponents_of_degree(alg.n_gens, deg):
            if is_normal(alg, m):
                basis.append(m)
    return basis


def norm_squared_power(alg: AlgebraSpec, theta: int, size: int = 1) -> MatrixPoly:
    """(x_1^2 + ... + x_d^2)^theta times the identity"""
    if theta < 0:
        raise UnsupportedCombination(f"multiplier exponent must be nonnegative, got {theta}")
    one = MatrixPoly.identity(alg, size)
    square = MatrixPoly.zero(alg, size)
    for i in range(alg.n_gens):
        x = MatrixPoly.generator(alg, i, size)
        square = square + mp_mul(x, x)
    out = one
    for _ in range(theta):
        out = mp_mul(out, square)
    return out


def ball_polynomial(alg: AlgebraSpec, radius: float) -> MatrixPoly:
    """Scalar K^2 - x_1^2 - ... - x_d^2"""
    return MatrixPoly.identity(alg, 1, radius ** 2) - norm_squared_power(alg, 1, 1)
