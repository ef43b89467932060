"""
结构化问题与整体LP测试
"""
import numpy as np
import pytest

from conftest import shed_problem
from core.exceptions import DimensionError, MonolithicTooLarge
from problem.monolithic import assemble_monolithic, estimate_nonzeros, solve_monolithic
from problem.structured_problem import DecisionNode, StructuredProblem, node_view, validate


def test_validate_accepts_well_formed_problem(two_node_problem):
    report = validate(two_node_problem)
    assert report.ok, str(report)


def test_validate_lists_every_violation(two_node_problem):
    p = two_node_problem
    bad_nodes = [
        DecisionNode(id=0, pi=0.0, c=np.array([-1.0]), x_selector=p.nodes[0].x_selector),
        DecisionNode(id=2, pi=0.5, c=np.array([1.0, 2.0]), x_selector=p.nodes[1].x_selector[:, :2]),
    ]
    broken = StructuredProblem(master=p.master, template=p.template, nodes=bad_nodes)
    codes = set(validate(broken).codes())
    assert {"node_probability", "node_cost_sign", "node_ids", "node_cost_dim", "node_selector_dim"} <= codes


def test_validate_flags_unbounded_master(two_node_problem):
    p = two_node_problem
    upper = p.master.x_upper.copy()
    upper[0] = np.inf
    unbounded = StructuredProblem(master=p.master.with_bounds(p.master.x_lower, upper),
                                  template=p.template, nodes=p.nodes)
    assert "master_unbounded" in validate(unbounded).codes()


def test_node_view_extracts_selected_components(two_node_problem):
    x = np.array([2.5, -3.0, -5.0])
    np.testing.assert_allclose(node_view(x, two_node_problem.nodes[1]), [2.5, -5.0])


def test_node_view_rejects_wrong_length(two_node_problem):
    with pytest.raises(DimensionError):
        node_view(np.zeros(5), two_node_problem.nodes[0])


def test_monolithic_single_node_optimum(single_node_problem, backend):
    solution = solve_monolithic(single_node_problem, backend)
    assert solution.objective == pytest.approx(7.0)
    assert solution.x[0] == pytest.approx(4.0)
    np.testing.assert_allclose(solution.ys[0], [4.0, 1.0], atol=1e-9)


def test_monolithic_two_node_optimum(two_node_problem, backend):
    solution = solve_monolithic(two_node_problem, backend)
    assert solution.objective == pytest.approx(5.5)
    assert len(solution.ys) == 2


def test_monolithic_dimensions():
    problem = shed_problem([1.0, 2.0, 3.0])
    lp = assemble_monolithic(problem)
    assert lp.n_cols == problem.master.x_dim + 3 * problem.template.y_dim
    assert lp.n_rows == 3 * problem.template.con_dim


def test_monolithic_size_cap(two_node_problem):
    assert estimate_nonzeros(two_node_problem) > 1
    with pytest.raises(MonolithicTooLarge):
        assemble_monolithic(two_node_problem, nonzero_cap=1)
