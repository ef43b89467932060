"""
自适应预言机与求解点集测试
"""
import numpy as np
import pytest

from backend.lp_backend import LPBackend, SolveOutcome, SolveStatus
from core.exceptions import OracleDomainError
from decomposition.adaptive_oracles import (
    SolvedPoint,
    compute_seed_point,
    load_checkpoint,
    lower_oracle,
    query,
    save_checkpoint,
    seed,
    upper_oracle,
)
from decomposition.subproblem import SubproblemEvaluator
from problem.structured_problem import node_view


def random_query(problem, rng):
    master = problem.master
    node = problem.nodes[rng.integers(problem.node_count)]
    x = master.x_lower + rng.uniform(size=master.x_dim) * (master.x_upper - master.x_lower)
    c = node.c * rng.uniform(1.0, 2.0, size=node.c.shape)
    return node_view(x, node), c


def exact_point(evaluator, x_i, c):
    ev = evaluator.evaluate(x_i, c)
    return SolvedPoint(x=x_i.copy(), c=c.copy(), theta=ev.theta, lam=ev.lam, phi=ev.phi)


def test_seed_point_is_componentwise_infimum(two_node_problem, backend):
    x_low, c_low = compute_seed_point(two_node_problem, backend)
    np.testing.assert_allclose(x_low, [0.0, -5.0])
    np.testing.assert_allclose(c_low, [1.0])
    x_bounds, _ = compute_seed_point(two_node_problem, backend, strategy="bounds")
    np.testing.assert_allclose(x_bounds, x_low)


def test_seed_only_store_bounds(two_node_problem, backend):
    store = seed(two_node_problem, backend)
    assert len(store) == 1
    # 种子点 (cap=0, d=5) 处切负荷 5 单位
    assert store.seed_point.theta == pytest.approx(15.0)
    answer = query(store, np.array([4.0, -3.0]), np.array([1.0]), backend)
    assert answer.theta_hi == pytest.approx(15.0)
    # 种子割在 (4, −3) 处为负，下界取 0
    assert answer.theta_lo == pytest.approx(0.0, abs=1e-9)
    assert answer.gap == pytest.approx(15.0)


def test_exact_hit_returns_stored_values(two_node_problem, backend):
    store = seed(two_node_problem, backend)
    evaluator = SubproblemEvaluator(two_node_problem.template, backend)
    x_i, c = np.array([2.0, -5.0]), np.array([1.0])
    point = exact_point(evaluator, x_i, c)
    assert store.insert(point)
    answer = query(store, x_i, c, backend)
    assert answer.theta_lo == pytest.approx(point.theta)
    assert answer.theta_hi == pytest.approx(point.theta)
    np.testing.assert_allclose(answer.lam_lo, point.lam)


def test_duplicate_insert_is_skipped(two_node_problem, backend):
    store = seed(two_node_problem, backend)
    version = store.version
    assert not store.insert(store.seed_point)
    assert store.version == version


def test_sandwich_on_power_instance(tree_model, backend, rng):
    problem = tree_model.problem
    evaluator = SubproblemEvaluator(problem.template, backend)
    store = seed(problem, backend, evaluator)
    for _ in range(6):
        store.insert(exact_point(evaluator, *random_query(problem, rng)))

    snap = store.snapshot()
    for _ in range(40):
        x_i, c = random_query(problem, rng)
        exact = evaluator.evaluate(x_i, c).theta
        answer = query(snap, x_i, c, backend)
        tol = 1e-6 * (1.0 + abs(exact))
        assert answer.theta_lo <= exact + tol
        assert exact <= answer.theta_hi + tol


def test_lower_oracle_cut_is_globally_valid(tree_model, backend, rng):
    problem = tree_model.problem
    evaluator = SubproblemEvaluator(problem.template, backend)
    store = seed(problem, backend, evaluator)
    for _ in range(4):
        store.insert(exact_point(evaluator, *random_query(problem, rng)))

    x_hat, c = random_query(problem, rng)
    theta_lo, lam_lo = lower_oracle(store, x_hat, c, backend)
    for _ in range(10):
        x_other, _ = random_query(problem, rng)
        exact = evaluator.evaluate(x_other, c).theta
        assert theta_lo + lam_lo @ (x_other - x_hat) <= exact + 1e-6 * (1.0 + abs(exact))


def test_query_below_seed_raises(two_node_problem, backend):
    store = seed(two_node_problem, backend)
    with pytest.raises(OracleDomainError):
        upper_oracle(store, np.array([-1.0, -5.0]), np.array([1.0]), backend)
    with pytest.raises(OracleDomainError):
        lower_oracle(store, np.array([1.0, -5.0]), np.array([0.5]), backend)


def test_solved_point_rejects_inconsistent_theta():
    with pytest.raises(ValueError):
        SolvedPoint(x=np.zeros(1), c=np.ones(1), theta=2.0, lam=np.zeros(1), phi=np.ones(1))


def test_checkpoint_round_trip(two_node_problem, backend, tmp_path):
    store = seed(two_node_problem, backend)
    evaluator = SubproblemEvaluator(two_node_problem.template, backend)
    store.insert(exact_point(evaluator, np.array([3.0, -3.0]), np.array([1.0])))
    path = save_checkpoint(store, tmp_path / "store.json")

    restored = load_checkpoint(path)
    assert len(restored) == len(store)
    np.testing.assert_allclose(restored.seed_point.x, store.seed_point.x)
    q = (np.array([2.0, -4.0]), np.array([1.0]))
    assert query(restored, *q, backend).theta_hi == pytest.approx(query(store, *q, backend).theta_hi)


def test_checkpoint_rejects_unknown_format(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"format": "other", "version": 1, "points": []}')
    with pytest.raises(ValueError):
        load_checkpoint(path)


class FailingOracleBackend(LPBackend):
    """预言机LP一律数值失败，其余LP正常求解"""

    def solve(self, lp, opts=None):
        if lp.name in ("lower_oracle", "upper_oracle"):
            return SolveOutcome(SolveStatus.NUMERICAL_FAILURE, message="model_status 15 (Unknown)")
        return super().solve(lp, opts)


def test_oracle_failure_falls_back_to_single_point_bounds(tree_model, backend, rng):
    problem = tree_model.problem
    evaluator = SubproblemEvaluator(problem.template, backend)
    store = seed(problem, backend, evaluator)
    for _ in range(5):
        store.insert(exact_point(evaluator, *random_query(problem, rng)))

    failing = FailingOracleBackend()
    snap = store.snapshot()
    for _ in range(20):
        x_i, c = random_query(problem, rng)
        exact = evaluator.evaluate(x_i, c).theta
        tol = 1e-6 * (1.0 + abs(exact))
        full = query(snap, x_i, c, backend)
        degraded = query(snap, x_i, c, failing)
        assert 0.0 <= degraded.theta_lo <= full.theta_lo + tol
        assert degraded.theta_lo <= exact + tol
        assert degraded.theta_hi >= full.theta_hi - tol
        assert exact <= degraded.theta_hi + tol
        assert np.isfinite(degraded.theta_hi)


def test_upper_fallback_uses_seed_when_only_seed_is_dominated(two_node_problem, backend):
    store = seed(two_node_problem, backend)
    evaluator = SubproblemEvaluator(two_node_problem.template, backend)
    store.insert(exact_point(evaluator, np.array([3.0, -3.0]), np.array([1.0])))
    # x̂ = (1, −4) 只支配种子点 (0, −5)
    theta_hi, phi_hi = upper_oracle(store, np.array([1.0, -4.0]), np.array([1.0]), FailingOracleBackend())
    assert theta_hi == pytest.approx(store.seed_point.theta)
    np.testing.assert_allclose(phi_hi, store.seed_point.phi)


def test_lower_oracle_is_positively_homogeneous_in_cost(tree_model, backend, rng):
    problem = tree_model.problem
    evaluator = SubproblemEvaluator(problem.template, backend)
    store = seed(problem, backend, evaluator)
    points = [exact_point(evaluator, *random_query(problem, rng)) for _ in range(4)]
    for point in points:
        store.insert(point)

    for point in points:
        theta_lo, _ = lower_oracle(store, point.x, 2.0 * point.c, backend)
        assert theta_lo == pytest.approx(2.0 * point.theta, rel=1e-5, abs=1e-6)


def test_insert_refines_bounds_monotonically(tree_model, backend, rng):
    problem = tree_model.problem
    evaluator = SubproblemEvaluator(problem.template, backend)
    store = seed(problem, backend, evaluator)
    queries = [random_query(problem, rng) for _ in range(8)]
    previous = [query(store, x_i, c, backend) for x_i, c in queries]

    for _ in range(4):
        store.insert(exact_point(evaluator, *random_query(problem, rng)))
        current = [query(store, x_i, c, backend) for x_i, c in queries]
        for before, after in zip(previous, current):
            tol = 1e-6 * (1.0 + abs(before.theta_hi))
            assert after.theta_lo >= before.theta_lo - tol
            assert after.theta_hi <= before.theta_hi + tol
        previous = current


def test_subproblem_value_orientation(tree_model, backend, rng):
    problem = tree_model.problem
    evaluator = SubproblemEvaluator(problem.template, backend)
    for _ in range(3):
        x_i, c = random_query(problem, rng)
        base = evaluator.evaluate(x_i, c).theta
        tol = 1e-7 * (1.0 + abs(base))
        for j in range(x_i.shape[0]):
            raised = x_i.copy()
            raised[j] += 1.0 + abs(raised[j])
            # 放宽容量、需求或碳预算分量都不会使成本上升
            assert evaluator.evaluate(raised, c).theta <= base + tol
        for j in range(c.shape[0]):
            dearer = c.copy()
            dearer[j] *= 1.5
            assert evaluator.evaluate(x_i, dearer).theta >= base - tol
