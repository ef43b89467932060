"""
标准Benders与子问题求解测试
"""
import numpy as np
import pytest

from decomposition.cuts import Cut, CutPool
from decomposition.master_problem import MasterProblemBuilder
from decomposition.results import RunStatus, relative_gap
from decomposition.standard_benders import StandardBenders, run_standard, solve_rmp
from decomposition.subproblem import SubproblemEvaluator
from problem.monolithic import solve_monolithic
from problem.structured_problem import node_view


def test_subproblem_value_and_subgradient(single_node_problem, backend):
    evaluator = SubproblemEvaluator(single_node_problem.template, backend)
    ev = evaluator.evaluate(np.array([2.0, -5.0]), np.array([1.0]))
    assert ev.theta == pytest.approx(9.0)
    # 每增加 1 单位容量少切 1 单位负荷；需求视图增大同样减少切负荷
    np.testing.assert_allclose(ev.lam, [-3.0, -3.0], atol=1e-9)
    np.testing.assert_allclose(ev.phi, [9.0])


@pytest.mark.parametrize("alpha", [0.0, 0.5, 2.0])
def test_subproblem_positive_homogeneity_in_cost(case_a_model, backend, rng, alpha):
    problem = case_a_model.problem
    evaluator = SubproblemEvaluator(problem.template, backend)
    master = problem.master
    node = problem.nodes[0]
    for _ in range(5):
        x = master.x_lower + rng.uniform(size=master.x_dim) * (master.x_upper - master.x_lower)
        x_i = node_view(x, node)
        c = node.c * rng.uniform(0.5, 2.0, size=node.c.shape)
        base = evaluator.evaluate(x_i, c).theta
        scaled = evaluator.evaluate(x_i, alpha * c).theta
        assert scaled == pytest.approx(alpha * base, rel=1e-8, abs=1e-8)


def test_cut_pool_deduplicates():
    pool = CutPool(1)
    cut = Cut(np.array([1.0]), 2.0, np.array([-1.0]))
    assert pool.add(0, cut)
    assert not pool.add(0, Cut(np.array([1.0]), 2.0, np.array([-1.0])))
    assert pool.total_cuts() == 1
    assert pool.model_value(0, np.array([0.0])) == pytest.approx(3.0)
    # 下界 β̲ = 0
    assert pool.model_value(0, np.array([10.0])) == pytest.approx(0.0)


def test_cut_pool_detects_old_and_reanchored_duplicates():
    pool = CutPool(1)
    first = Cut(np.array([1.0, 0.0]), 2.0, np.array([-1.0, 0.5]))
    assert pool.add(0, first)
    for k in range(200):
        assert pool.add(0, Cut(np.array([float(k), 0.0]), float(k), np.array([0.0, 1.0])))
    # 最早的割在两百个割之后仍被识别
    assert not pool.add(0, Cut(np.array([1.0, 0.0]), 2.0, np.array([-1.0, 0.5])))
    # 锚点不同但仿射函数相同: 2 − (x − 1) = 3 − (x − 0)
    assert not pool.add(0, Cut(np.array([0.0, 0.0]), 3.0, np.array([-1.0, 0.5])))
    assert pool.stats["duplicates"] == 2
    assert pool.total_cuts() == 201


def test_rmp_without_cuts_uses_floor(single_node_problem, backend):
    builder = MasterProblemBuilder(single_node_problem)
    rmp = solve_rmp(builder, CutPool(1), backend)
    assert rmp.lower_bound == pytest.approx(0.0)
    assert rmp.x[0] == pytest.approx(0.0)


def test_single_node_converges_to_optimum(single_node_problem, backend):
    result = run_standard(single_node_problem, eps=1e-4, backend=backend)
    assert result.status is RunStatus.CONVERGED
    assert result.upper_bound == pytest.approx(7.0, abs=1e-6)
    assert result.lower_bound <= 7.0 + 1e-9
    assert result.incumbent[0] == pytest.approx(4.0)


def test_two_node_matches_monolithic(two_node_problem, backend):
    optimum = solve_monolithic(two_node_problem, backend).objective
    result = run_standard(two_node_problem, eps=1e-4, backend=backend)
    assert result.converged
    assert result.upper_bound == pytest.approx(optimum, abs=1e-6)


def test_trace_invariants(two_node_problem, backend):
    result = StandardBenders(two_node_problem, eps=1e-4, backend=backend).run()
    L = [r.L_star for r in result.records]
    U = [r.U_star for r in result.records]
    assert all(b >= a - 1e-12 for a, b in zip(L, L[1:]))
    assert all(b <= a + 1e-12 for a, b in zip(U, U[1:]))
    for record in result.records:
        assert record.L_lbo == record.U_ubo
        assert record.n_exact_cum == record.iter * two_node_problem.node_count
    assert result.exact_evaluations == result.iterations * 2
    assert result.gap == pytest.approx(relative_gap(U[-1], L[-1]))


def test_iteration_limit_reports_best_gap(two_node_problem, backend):
    result = run_standard(two_node_problem, eps=1e-6, iter_limit=1, backend=backend)
    assert result.status is RunStatus.ITERATION_LIMIT
    assert result.iterations == 1
    assert result.best_gap == result.gap


def test_case_a_matches_monolithic(case_a_model, backend):
    problem = case_a_model.problem
    optimum = solve_monolithic(problem, backend).objective
    result = run_standard(problem, eps=0.01, backend=backend)
    assert result.converged
    assert result.lower_bound <= optimum * (1 + 1e-7)
    assert result.upper_bound >= optimum * (1 - 1e-7)
    assert result.upper_bound <= optimum * (1 + 2e-4)


def test_threaded_evaluation_matches_serial(two_node_problem):
    serial = run_standard(two_node_problem, eps=1e-4, threads=1)
    threaded = run_standard(two_node_problem, eps=1e-4, threads=2)
    assert serial.iterations == threaded.iterations
    assert threaded.upper_bound == pytest.approx(serial.upper_bound)


def test_audit_finds_no_violations(two_node_problem, backend):
    result = StandardBenders(two_node_problem, eps=1e-4, backend=backend, audit_samples=5).run()
    assert result.settings["audit_violations"] == 0
