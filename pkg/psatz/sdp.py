"""
Primal-dual path-following solver for block-diagonal semidefinite programs

Primal (maximization form):
    max  <C, X> + g'w
    s.t. <A_i, X> + (F w)_i = b_i,   X = diag(X_1, .., X_k) >= 0,   w free
Dual:
    min  b'y
    s.t. sum_i y_i A_i - Z = C,   F'y = g,   Z >= 0
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import SOLVER_OPTIONS, SYMMETRY_TOL
from .errors import MalformedProblem

logger = logging.getLogger(__name__)

OPTIMAL = 'Optimal'
FEASIBLE = 'Feasible'
INFEASIBLE = 'Infeasible'
STALLED = 'Stalled'


@dataclass
class SdpProblem:
    """Standard-form SDP; `A[j]` stacks the block-j parts of every constraint as an (m, n_j, n_j) array"""
    blocks: List[int]
    objective: List[np.ndarray]
    A: List[np.ndarray]
    b: np.ndarray
    sense: str = 'max'
    F: Optional[np.ndarray] = None
    g: Optional[np.ndarray] = None
    margin_block: Optional[int] = None
    labels: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.blocks = [int(n) for n in self.blocks]
        self.objective = [np.asarray(c, dtype=float) for c in self.objective]
        self.A = [np.asarray(a, dtype=float) for a in self.A]
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        if self.F is not None:
            self.F = np.asarray(self.F, dtype=float)
            if self.F.ndim == 1:
                self.F = self.F.reshape(-1, 1)
            self.g = np.zeros(self.F.shape[1]) if self.g is None else np.asarray(self.g, dtype=float).reshape(-1)

    @classmethod
    def from_constraints(cls, blocks: Sequence[int], objective: Sequence, constraints: Sequence[Tuple[Sequence, float]],
                         sense: str = 'max', **kwargs) -> 'SdpProblem':
        """Build from a list of (per-block matrices, rhs); a None matrix stands for a zero block"""
        m = len(constraints)
        A = [np.zeros((m, n, n)) for n in blocks]
        b = np.zeros(m)
        for i, (mats, rhs) in enumerate(constraints):
            if len(mats) != len(blocks):
                raise MalformedProblem(f"constraint {i} has {len(mats)} blocks, expected {len(blocks)}")
            for j, mat in enumerate(mats):
                if mat is not None:
                    arr = np.asarray(mat, dtype=float)
                    if arr.shape != (blocks[j], blocks[j]):
                        raise MalformedProblem(f"constraint {i} block {j} has shape {arr.shape}")
                    A[j][i] = arr
            b[i] = rhs
        return cls(list(blocks), [np.asarray(c, dtype=float) for c in objective], A, b, sense, **kwargs)

    @property
    def num_constraints(self) -> int:
        return int(self.b.shape[0])

    @property
    def num_free(self) -> int:
        return 0 if self.F is None else int(self.F.shape[1])

    @property
    def dimension(self) -> int:
        return sum(self.blocks)

    def free_matrix(self) -> np.ndarray:
        return np.zeros((self.num_constraints, 0)) if self.F is None else self.F

    def free_objective(self) -> np.ndarray:
        return np.zeros(0) if self.g is None else self.g

    def max_objective(self) -> Tuple[List[np.ndarray], np.ndarray]:
        sign = 1.0 if self.sense == 'max' else -1.0
        return [sign * c for c in self.objective], sign * self.free_objective()

    def has_zero_objective(self) -> bool:
        return not any(np.any(c) for c in self.objective) and not np.any(self.free_objective())

    def validate(self):
        """Reject malformed data before any iteration"""
        if self.sense not in ('max', 'min'):
            raise MalformedProblem(f"unknown objective sense {self.sense!r}")
        if not self.blocks or any(n < 1 for n in self.blocks):
            raise MalformedProblem(f"block sizes must be positive: {self.blocks}")
        if len(self.objective) != len(self.blocks) or len(self.A) != len(self.blocks):
            raise MalformedProblem("objective and constraint data must have one entry per block")
        m = self.num_constraints
        if m == 0:
            raise MalformedProblem("problem has no constraints")

        for j, n in enumerate(self.blocks):
            c = self.objective[j]
            if c.shape != (n, n):
                raise MalformedProblem(f"objective block {j} has shape {c.shape}, expected {(n, n)}")
            if np.max(np.abs(c - c.T)) > SYMMETRY_TOL:
                raise MalformedProblem(f"objective block {j} is not symmetric")
            a = self.A[j]
            if a.shape != (m, n, n):
                raise MalformedProblem(f"constraint block {j} has shape {a.shape}, expected {(m, n, n)}")
            asym = np.max(np.abs(a - a.transpose(0, 2, 1)), axis=(1, 2))
            if np.any(asym > SYMMETRY_TOL):
                raise MalformedProblem(f"constraint {int(np.argmax(asym))} block {j} is not symmetric")

        if self.F is not None:
            if self.F.shape[0] != m:
                raise MalformedProblem(f"free-variable matrix has {self.F.shape[0]} rows, expected {m}")
            if self.g.shape != (self.F.shape[1],):
                raise MalformedProblem("free-variable objective does not match the free-variable matrix")

        if self.margin_block is not None:
            if not 0 <= self.margin_block < len(self.blocks) or self.blocks[self.margin_block] != 1:
                raise MalformedProblem(f"margin block {self.margin_block} must be a 1x1 block")

        rows = [a.reshape(m, -1) for a in self.A] + [self.free_matrix(), self.b.reshape(m, 1)]
        stacked = np.hstack(rows)
        if np.unique(stacked, axis=0).shape[0] < m:
            raise MalformedProblem("constraint list contains duplicates")


@dataclass
class SdpSolution:
    status: str
    X: Optional[List[np.ndarray]] = None
    y: Optional[np.ndarray] = None
    Z: Optional[List[np.ndarray]] = None
    w: Optional[np.ndarray] = None
    objective: float = float('nan')
    dual_objective: float = float('nan')
    residuals: Dict[str, float] = field(default_factory=dict)
    iterations: int = 0
    ray: Optional[np.ndarray] = None
    message: str = ''

    @property
    def has_iterate(self) -> bool:
        return self.X is not None


# Block operators

def _apply(A: List[np.ndarray], X: List[np.ndarray]) -> np.ndarray:
    return sum(np.einsum('iab,ab->i', a, x) for a, x in zip(A, X))


def _adjoint(a: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum('i,iab->ab', y, a)


def _inner(U: List[np.ndarray], V: List[np.ndarray]) -> float:
    return float(sum(np.sum(u * v) for u, v in zip(U, V)))


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _schur(A: List[np.ndarray], X: List[np.ndarray], Zinv: List[np.ndarray]) -> np.ndarray:
    # M_ik = tr(A_i X A_k Z^-1)
    m = A[0].shape[0]
    M = np.zeros((m, m))
    for a, x, zi in zip(A, X, Zinv):
        B = x @ a @ zi
        M += a.reshape(m, -1) @ B.reshape(m, -1).T
    return M


def _max_step(X: List[np.ndarray], dX: List[np.ndarray]) -> float:
    """Largest alpha with X + alpha*dX still PSD (inf if unbounded)"""
    alpha = np.inf
    for x, dx in zip(X, dX):
        try:
            L = np.linalg.cholesky(x)
        except np.linalg.LinAlgError:
            return 0.0
        Linv = np.linalg.inv(L)
        lam = np.linalg.eigvalsh(_sym(Linv @ dx @ Linv.T))[0]
        if lam < 0:
            alpha = min(alpha, -1.0 / lam)
    return alpha


def _initial_point(prob: SdpProblem, C: List[np.ndarray]) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    X, Z = [], []
    for j, n in enumerate(prob.blocks):
        a_norms = np.linalg.norm(prob.A[j].reshape(prob.num_constraints, -1), axis=1)
        xi = max(10.0, np.sqrt(n), float(np.max(n * (1.0 + np.abs(prob.b)) / (1.0 + a_norms))))
        eta = max(10.0, np.sqrt(n), float(np.max(a_norms)), float(np.linalg.norm(C[j])))
        X.append(xi * np.eye(n))
        Z.append(eta * np.eye(n))
    return X, Z


def _direction(A, F, M, X, Zinv, H, rp, Rd, rf):
    """Solve the HKM Newton system for a given right-hand side H"""
    m, nf = F.shape
    r1 = _apply(A, H) + _apply(A, [x @ rd @ zi for x, rd, zi in zip(X, Rd, Zinv)]) - rp
    if nf:
        K = np.block([[M, -F], [F.T, np.zeros((nf, nf))]])
        rhs = np.concatenate([r1, rf])
    else:
        K, rhs = M, r1
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    if not np.all(np.isfinite(sol)):
        return None
    dy, dw = sol[:m], sol[m:]
    dZ = [_adjoint(a, dy) - rd for a, rd in zip(A, Rd)]
    dX = [_sym(h - x @ dz @ zi) for h, x, dz, zi in zip(H, X, dZ, Zinv)]
    return dX, dy, dw, dZ


def _path_following(prob: SdpProblem, opts: dict) -> SdpSolution:
    C, g = prob.max_objective()
    A, b, F = prob.A, prob.b, prob.free_matrix()
    n = prob.dimension
    X, Z = _initial_point(prob, C)
    y = np.zeros(prob.num_constraints)
    w = np.zeros(prob.num_free)

    b_scale = 1.0 + float(np.max(np.abs(b)))
    c_scales = [1.0 + float(np.max(np.abs(c))) for c in C]
    g_scale = 1.0 + (float(np.max(np.abs(g))) if g.size else 0.0)

    best, since_best = np.inf, 0
    message = 'iteration limit reached'
    converged = False
    it = 0
    for it in range(1, opts['max_iters'] + 1):
        rp = b - _apply(A, X) - F @ w
        Rd = [c - _adjoint(a, y) + z for c, a, z in zip(C, A, Z)]
        rf = g - F.T @ y
        pobj = _inner(C, X) + float(g @ w)
        dobj = float(b @ y)
        xz = _inner(X, Z)
        obj_scale = 1.0 + abs(pobj) + abs(dobj)

        rel_p = float(np.max(np.abs(rp))) / b_scale
        rel_d = max(max(float(np.max(np.abs(rd))) / cs for rd, cs in zip(Rd, c_scales)),
                    float(np.max(np.abs(rf))) / g_scale if rf.size else 0.0)
        rel_gap = abs(pobj - dobj) / obj_scale
        rel_xz = xz / obj_scale
        logger.debug(f"iter {it}: pobj={pobj:.6e} dobj={dobj:.6e} pinf={rel_p:.2e} "
                     f"dinf={rel_d:.2e} gap={rel_gap:.2e} xz={rel_xz:.2e}")

        if rel_p <= opts['tol_eq'] and rel_d <= opts['tol_dual'] and max(rel_gap, rel_xz) <= opts['tol_gap']:
            converged = True
            message = 'converged'
            break

        size = max(max(float(np.max(np.abs(x))) for x in X), max(float(np.max(np.abs(z))) for z in Z),
                   float(np.max(np.abs(y))) if y.size else 0.0)
        if size > opts['divergence']:
            message = 'iterates diverged'
            break

        merit = max(rel_p, rel_d, rel_gap, rel_xz)
        if merit < 0.9 * best:
            best, since_best = merit, 0
        else:
            since_best += 1
            if since_best >= opts['stall_window']:
                message = f"no progress for {since_best} iterations"
                break

        mu = xz / n
        try:
            Zinv = [_sym(np.linalg.inv(z)) for z in Z]
        except np.linalg.LinAlgError:
            message = 'dual slack became singular'
            break
        M = _schur(A, X, Zinv)

        # Predictor
        step = _direction(A, F, M, X, Zinv, [-x for x in X], rp, Rd, rf)
        if step is None:
            message = 'Newton system could not be solved'
            break
        dXa, _, _, dZa = step
        ap = min(1.0, _max_step(X, dXa))
        ad = min(1.0, _max_step(Z, dZa))
        mu_aff = _inner([x + ap * dx for x, dx in zip(X, dXa)], [z + ad * dz for z, dz in zip(Z, dZa)]) / n
        sigma = min(1.0, (max(mu_aff, 0.0) / mu) ** 3) if mu > 0 else 0.0

        # Corrector
        H = [sigma * mu * zi - x - dxa @ dza @ zi for zi, x, dxa, dza in zip(Zinv, X, dXa, dZa)]
        step = _direction(A, F, M, X, Zinv, H, rp, Rd, rf)
        if step is None:
            message = 'Newton system could not be solved'
            break
        dX, dy, dw, dZ = step
        ap = min(1.0, opts['step'] * _max_step(X, dX))
        ad = min(1.0, opts['step'] * _max_step(Z, dZ))
        if max(ap, ad) < opts['min_step']:
            message = f"step length {max(ap, ad):.1e} too small"
            break

        X = [x + ap * dx for x, dx in zip(X, dX)]
        w = w + ap * dw
        y = y + ad * dy
        Z = [z + ad * dz for z, dz in zip(Z, dZ)]

    sign = 1.0 if prob.sense == 'max' else -1.0
    status = (FEASIBLE if prob.has_zero_objective() else OPTIMAL) if converged else STALLED
    return SdpSolution(
        status=status, X=X, y=y, Z=Z, w=w,
        objective=sign * (_inner(C, X) + float(g @ w)),
        dual_objective=sign * float(b @ y),
        iterations=it, message=message,
    )


def _shift_problem(prob: SdpProblem) -> SdpProblem:
    """max -x' s.t. A(X - x'I) + Fw = b; its dual optimum is a Farkas ray when x' > 0"""
    m = prob.num_constraints
    traces = sum(np.trace(a, axis1=1, axis2=2) for a in prob.A)
    return SdpProblem(
        blocks=prob.blocks + [1],
        objective=[np.zeros((n, n)) for n in prob.blocks] + [-np.ones((1, 1))],
        A=prob.A + [(-traces).reshape(m, 1, 1)],
        b=prob.b,
        sense='max',
        F=prob.F,
        g=None if prob.F is None else np.zeros(prob.num_free),
    )


def ray_slack(prob: SdpProblem, y: np.ndarray) -> float:
    """How far sum_i y_i A_i falls below PSD, over all blocks (0 when it is PSD)"""
    return max(0.0, max(-float(np.linalg.eigvalsh(_sym(_adjoint(a, y)))[0]) for a in prob.A))


def farkas_margin(prob: SdpProblem, ray: np.ndarray, opts: Optional[dict] = None) -> Optional[float]:
    """Return -b'y of the normalized ray when it proves infeasibility, else None

    For feasible X, b'y = <A*(y), X> >= -slack * tr X, so a ray with PSD slack must beat
    slack * farkas_trace_bound; with zero slack the proof is unconditional.
    """
    opts = {**SOLVER_OPTIONS, **(opts or {})}
    if ray is None or not ray.size or not np.all(np.isfinite(ray)):
        return None
    scale = float(np.max(np.abs(ray)))
    if scale == 0.0:
        return None
    y = ray / scale
    slack = ray_slack(prob, y)
    if slack > opts['farkas_psd_tol']:
        return None
    if prob.num_free and float(np.max(np.abs(prob.free_matrix().T @ y))) > opts['farkas_psd_tol']:
        return None
    margin = -float(prob.b @ y)
    if margin < opts['farkas_margin'] or margin <= slack * opts['farkas_trace_bound']:
        return None
    return margin


def residuals(prob: SdpProblem, sol: SdpSolution) -> Tuple[float, float, float]:
    """Primal equality residual, smallest eigenvalue over the X blocks and duality gap, recomputed from scratch"""
    if sol.X is None or len(sol.X) != len(prob.blocks):
        return float('inf'), float('-inf'), float('inf')
    X = [np.asarray(x, dtype=float) for x in sol.X]
    w = np.zeros(prob.num_free) if sol.w is None else np.asarray(sol.w, dtype=float)
    primal_eq = float(np.max(np.abs(_apply(prob.A, X) + prob.free_matrix() @ w - prob.b)))
    min_eig = min(float(np.linalg.eigvalsh(_sym(x))[0]) for x in X)
    if sol.y is None:
        return primal_eq, min_eig, float('inf')
    pobj = _inner(prob.objective, X) + float(prob.free_objective() @ w)
    sign = 1.0 if prob.sense == 'max' else -1.0
    dobj = sign * float(prob.b @ np.asarray(sol.y, dtype=float))
    return primal_eq, min_eig, abs(pobj - dobj)


def _accepts(prob: SdpProblem, sol: SdpSolution, opts: dict) -> bool:
    primal_eq, min_eig, gap = residuals(prob, sol)
    sol.residuals = {'primal_eq': primal_eq, 'min_eig': min_eig, 'gap': gap}
    scale = 1.0 + abs(sol.objective) + abs(sol.dual_objective)
    return (primal_eq <= opts['tol_eq'] * (1.0 + float(np.max(np.abs(prob.b))))
            and min_eig >= -opts['tol_psd']
            and gap <= opts['tol_gap'] * scale)


def solve(prob: SdpProblem, opts: Optional[dict] = None) -> SdpSolution:
    """Solve an SDP; Infeasible is only reported with a verified Farkas ray"""
    opts = {**SOLVER_OPTIONS, **(opts or {})}
    prob.validate()
    logger.debug(f"Solving SDP: blocks={prob.blocks} constraints={prob.num_constraints} free={prob.num_free}")

    sol = _path_following(prob, opts)
    if sol.status in (OPTIMAL, FEASIBLE):
        if _accepts(prob, sol, opts):
            logger.debug(f"SDP {sol.status} after {sol.iterations} iterations, objective {sol.objective:.9g}")
            return sol
        sol.status = STALLED
        sol.message = f"converged iterate failed the residual re-check: {sol.residuals}"

    _accepts(prob, sol, opts)
    candidates = [('final iterate', sol.y)]
    shifted = _path_following(_shift_problem(prob), opts)
    candidates.append(('shift problem', shifted.y))
    for source, ray in candidates:
        margin = farkas_margin(prob, ray, opts)
        if margin is not None:
            logger.debug(f"SDP infeasible: Farkas ray from {source}, margin {margin:.3e}")
            sol.status = INFEASIBLE
            sol.ray = ray / float(np.max(np.abs(ray)))
            sol.message = (f"Farkas ray from {source} with margin {margin:.3e}, "
                           f"PSD slack {ray_slack(prob, sol.ray):.1e}")
            return sol

    logger.debug(f"SDP stalled after {sol.iterations} iterations: {sol.message}")
    return sol


def write_sdpa(prob: SdpProblem, path: str):
    """Write the problem in SDPA sparse format (c = b, F0 = C, Fi = A_i; free variables as a split LP block)"""
    prob.validate()
    C, g = prob.max_objective()
    m = prob.num_constraints
    sizes = list(prob.blocks)
    if prob.num_free:
        sizes.append(-2 * prob.num_free)

    lines = ['"psatz SDP: max <F0,Y> s.t. <Fi,Y> = ci, Y >= 0"']
    lines += [f"* constraint {i + 1}: {label}" for i, label in enumerate(prob.labels)]
    lines += [str(m), str(len(sizes)), ' '.join(str(s) for s in sizes), ' '.join(repr(float(v)) for v in prob.b)]

    def entries(matno: int, mats: List[np.ndarray], free_col: Optional[np.ndarray]):
        for j, mat in enumerate(mats):
            rows, cols = np.nonzero(np.triu(mat))
            for r, c in zip(rows, cols):
                lines.append(f"{matno} {j + 1} {r + 1} {c + 1} {float(mat[r, c])!r}")
        if free_col is not None:
            blk = len(mats) + 1
            for k, v in enumerate(free_col):
                if v != 0.0:
                    lines.append(f"{matno} {blk} {2 * k + 1} {2 * k + 1} {float(v)!r}")
                    lines.append(f"{matno} {blk} {2 * k + 2} {2 * k + 2} {float(-v)!r}")

    free = prob.free_matrix()
    entries(0, C, g if prob.num_free else None)
    for i in range(m):
        entries(i + 1, [a[i] for a in prob.A], free[i] if prob.num_free else None)

    with open(path, 'w', encoding='utf-8') as f:
        f.write('\n'.join(lines) + '\n')
    logger.info(f"SDP written to {path} in SDPA format")
