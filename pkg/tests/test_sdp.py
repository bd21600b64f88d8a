import numpy as np
import pytest

from psatz.errors import MalformedProblem
from psatz.sdp import (FEASIBLE, INFEASIBLE, OPTIMAL, SdpProblem, SdpSolution, farkas_margin, ray_slack, residuals,
                       solve, write_sdpa)

E11 = np.array([[1.0, 0.0], [0.0, 0.0]])
E22 = np.array([[0.0, 0.0], [0.0, 1.0]])
E12 = np.array([[0.0, 0.5], [0.5, 0.0]])


def unit_trace_problem():
    """min <diag(1, 2), X> s.t. tr X = 1"""
    return SdpProblem.from_constraints([2], [np.diag([1.0, 2.0])], [([np.eye(2)], 1.0)], sense='min')


def test_min_eigenvalue_by_trace_constraint():
    prob = unit_trace_problem()
    sol = solve(prob, {"tol_eq": 1e-10, "tol_gap": 1e-10})
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(1.0, abs=1e-8)
    assert sol.dual_objective == pytest.approx(1.0, abs=1e-8)
    np.testing.assert_allclose(sol.X[0], E11, atol=1e-8)


def test_fixed_entries_force_the_all_ones_matrix():
    # X11 = X22 = X12 = 1 leaves only the rank-one Gram matrix of (1, 1)
    prob = SdpProblem.from_constraints([2], [np.zeros((2, 2))], [([E11], 1.0), ([E22], 1.0), ([E12], 1.0)])
    sol = solve(prob)
    assert sol.status == FEASIBLE
    np.testing.assert_allclose(sol.X[0], np.ones((2, 2)), atol=1e-8)
    primal_eq, min_eig, _ = residuals(prob, sol)
    assert primal_eq <= 1e-8
    assert min_eig >= -1e-9


def test_two_blocks():
    # max x1 + x2 with x1 + 2 x2 = 2 over two 1x1 blocks
    prob = SdpProblem.from_constraints([1, 1], [np.ones((1, 1)), np.ones((1, 1))],
                                       [([np.ones((1, 1)), 2 * np.ones((1, 1))], 2.0)])
    sol = solve(prob)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(2.0, abs=1e-6)


def test_negative_diagonal_is_infeasible():
    prob = SdpProblem.from_constraints([2], [np.zeros((2, 2))], [([E11], -1.0)])
    sol = solve(prob)
    assert sol.status == INFEASIBLE
    assert sol.ray is not None
    assert farkas_margin(prob, sol.ray) > 0


def test_zero_objective_reports_feasible():
    prob = SdpProblem.from_constraints([2], [np.zeros((2, 2))], [([E11], 1.0), ([E22], 1.0)])
    sol = solve(prob)
    assert sol.status == FEASIBLE
    primal_eq, min_eig, _ = residuals(prob, sol)
    assert primal_eq < 1e-7
    assert min_eig > -1e-9


def test_free_variable():
    # max w s.t. X + w = 1, X >= 0
    prob = SdpProblem([1], [np.zeros((1, 1))], [np.ones((1, 1, 1))], [1.0], F=[[1.0]], g=[1.0])
    sol = solve(prob)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(1.0, abs=1e-6)
    assert sol.w[0] == pytest.approx(1.0, abs=1e-6)


def test_farkas_margin_of_hand_ray():
    prob = SdpProblem.from_constraints([2], [np.zeros((2, 2))], [([E11], -1.0)])
    assert farkas_margin(prob, np.array([1.0])) == pytest.approx(1.0)
    assert farkas_margin(prob, np.array([-1.0])) is None
    assert farkas_margin(prob, None) is None


def test_farkas_margin_rejects_ray_with_psd_slack():
    # X = diag(1, 0) is feasible, so no ray may certify infeasibility here
    prob = SdpProblem.from_constraints([2], [np.zeros((2, 2))], [([E11], 1.0), ([E22], 0.0)])
    ray = np.array([-9e-9, 1.0])
    assert ray_slack(prob, ray) == pytest.approx(9e-9)
    assert farkas_margin(prob, ray) is None


def test_farkas_margin_trace_bound_is_configurable():
    prob = SdpProblem.from_constraints([2], [np.zeros((2, 2))], [([E11], -1.0), ([E22], 0.0)])
    ray = np.array([1.0, -5e-9])
    assert farkas_margin(prob, ray) == pytest.approx(1.0)
    assert farkas_margin(prob, ray, {"farkas_trace_bound": 1e9}) is None


def test_residuals_are_recomputed():
    prob = unit_trace_problem()
    sol = solve(prob)
    bumped = SdpSolution(sol.status, X=[sol.X[0] + 0.1 * E11], y=sol.y, Z=sol.Z, w=sol.w)
    primal_eq, _, _ = residuals(prob, bumped)
    assert primal_eq == pytest.approx(0.1, abs=1e-6)


def test_residuals_of_exact_solution():
    prob = unit_trace_problem()
    # y is the dual of the internal max form, so the minimum 1 shows up as y = -1
    exact = SdpSolution(OPTIMAL, X=[E11.copy()], y=np.array([-1.0]), w=np.zeros(0))
    primal_eq, min_eig, gap = residuals(prob, exact)
    assert primal_eq <= 1e-12
    assert abs(min_eig) <= 1e-12
    assert gap <= 1e-12


def test_residuals_of_planted_point(rng):
    root = rng.standard_normal((3, 3))
    X_star = root @ root.T
    mats = [(lambda s: s + s.T)(rng.standard_normal((3, 3))) for _ in range(4)]
    prob = SdpProblem.from_constraints([3], [np.zeros((3, 3))], [([a], float(np.sum(a * X_star))) for a in mats])
    primal_eq, min_eig, _ = residuals(prob, SdpSolution(FEASIBLE, X=[X_star]))
    assert primal_eq <= 1e-10
    assert min_eig >= -1e-12


def test_residuals_without_iterate():
    prob = unit_trace_problem()
    primal_eq, min_eig, gap = residuals(prob, SdpSolution('Stalled'))
    assert primal_eq == float('inf')
    assert min_eig == float('-inf')
    assert gap == float('inf')


@pytest.mark.parametrize('kwargs, message', [
    ({'sense': 'maximize'}, 'sense'),
    ({'margin_block': 0}, 'margin block'),
])
def test_validate_rejects_options(kwargs, message):
    prob = SdpProblem.from_constraints([2], [np.zeros((2, 2))], [([E11], 1.0)], **kwargs)
    with pytest.raises(MalformedProblem, match=message):
        prob.validate()


def test_validate_rejects_asymmetric_data():
    skew = np.array([[0.0, 1.0], [0.0, 0.0]])
    prob = SdpProblem.from_constraints([2], [np.zeros((2, 2))], [([skew], 1.0)])
    with pytest.raises(MalformedProblem, match='not symmetric'):
        solve(prob)


def test_validate_rejects_duplicate_rows():
    prob = SdpProblem.from_constraints([2], [np.zeros((2, 2))], [([E11], 1.0), ([E11], 1.0)])
    with pytest.raises(MalformedProblem, match='duplicates'):
        prob.validate()


def test_validate_rejects_empty_problem():
    prob = SdpProblem([2], [np.zeros((2, 2))], [np.zeros((0, 2, 2))], np.zeros(0))
    with pytest.raises(MalformedProblem, match='no constraints'):
        prob.validate()


def test_from_constraints_checks_shapes():
    with pytest.raises(MalformedProblem):
        SdpProblem.from_constraints([2], [np.zeros((2, 2))], [([np.eye(3)], 1.0)])


def test_write_sdpa(tmp_path):
    prob = SdpProblem([2], [np.diag([1.0, 2.0])], [np.eye(2).reshape(1, 2, 2)], [1.0], F=[[1.0]], g=[0.5])
    path = tmp_path / 'trace.dat-s'
    write_sdpa(prob, str(path))
    lines = path.read_text().splitlines()
    assert lines[1:4] == ['1', '2', '2 -2']
    assert lines[4] == '1.0'
    assert '0 1 2 2 2.0' in lines
    assert '0 2 1 1 0.5' in lines
    assert '0 2 2 2 -0.5' in lines
    assert '1 1 1 1 1.0' in lines
    assert '1 2 2 2 -1.0' in lines


def test_solve_is_deterministic():
    first, second = solve(unit_trace_problem()), solve(unit_trace_problem())
    assert first.iterations == second.iterations
    np.testing.assert_array_equal(first.X[0], second.X[0])
    np.testing.assert_array_equal(first.y, second.y)


def test_write_sdpa_labels_constraints(tmp_path):
    prob = SdpProblem.from_constraints([2], [np.zeros((2, 2))], [([E11], 1.0), ([E22], 1.0)],
                                       labels=['x^0 (0, 0)', 'x^0 (1, 1)'])
    path = tmp_path / 'labeled.dat-s'
    write_sdpa(prob, str(path))
    lines = path.read_text().splitlines()
    assert lines[1:3] == ['* constraint 1: x^0 (0, 0)', '* constraint 2: x^0 (1, 1)']
    assert lines[3:6] == ['2', '1', '2']
