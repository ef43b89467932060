"""
水平集稳定化测试
"""
import math

import numpy as np
import pytest
from pydantic import ValidationError

from decomposition.cuts import Cut, CutPool
from decomposition.level_set import (
    StabilisationConfig,
    TargetState,
    compute_target,
    improvement_ratio,
    leaves_level_set,
    model_level,
    solve_lmp,
    update_gamma,
)
from decomposition.master_problem import MasterProblemBuilder


@pytest.fixture
def stab():
    return StabilisationConfig(gamma0=0.5, dynamic=True, omega=0.5, p_low=0.1, p_high=0.9)


def test_target_interpolates_between_bounds():
    assert compute_target(10.0, 20.0, 0.25) == pytest.approx(12.5)
    assert compute_target(10.0, 20.0, 0.0) == 10.0
    assert compute_target(10.0, 20.0, 1.0) == 20.0


def test_target_is_infinite_before_first_upper_bound():
    assert math.isinf(compute_target(10.0, math.inf, 0.5))


def test_target_with_zero_gap():
    assert compute_target(5.0, 5.0, 0.3) == 5.0


def test_point_leaves_level_set_only_above_target():
    # T = 10 + 0.5 · (20 − 10) = 15
    assert leaves_level_set(15.5, 10.0, 20.0, 0.5)
    assert not leaves_level_set(15.0, 10.0, 20.0, 0.5)
    assert not leaves_level_set(12.0, 10.0, 20.0, 0.5)
    # 首次迭代无上界时不限制
    assert leaves_level_set(0.0, 10.0, math.inf, 0.5)


def test_gamma_grows_on_poor_improvement(stab):
    # 期望改进 10，实际改进 0.5: r = 0.05 ≤ p_low
    state = TargetState(gamma=0.5, lbo_prev=100.0, target_prev=90.0)
    assert update_gamma(state, 99.5, stab) == pytest.approx(0.75)
    assert state.lbo_prev == 99.5


def test_gamma_shrinks_on_good_improvement(stab):
    state = TargetState(gamma=0.5, lbo_prev=100.0, target_prev=90.0)
    assert update_gamma(state, 89.0, stab) == pytest.approx(0.25)


def test_gamma_unchanged_for_moderate_ratio(stab):
    state = TargetState(gamma=0.5, lbo_prev=100.0, target_prev=90.0)
    assert improvement_ratio(state, 95.0) == pytest.approx(0.5)
    assert update_gamma(state, 95.0, stab) == pytest.approx(0.5)


def test_gamma_unchanged_for_inexact_information(stab):
    # 实际改进非正
    state = TargetState(gamma=0.5, lbo_prev=100.0, target_prev=90.0)
    assert improvement_ratio(state, 101.0) is None
    assert update_gamma(state, 101.0, stab) == pytest.approx(0.5)
    # 首次迭代没有历史
    assert update_gamma(TargetState(gamma=0.5), 50.0, stab) == pytest.approx(0.5)


def test_gamma_is_clamped(stab):
    state = TargetState(gamma=0.998, lbo_prev=100.0, target_prev=90.0)
    assert update_gamma(state, 100.0 - 1e-6, stab) == pytest.approx(stab.gamma_max)
    state = TargetState(gamma=1.5e-4, lbo_prev=100.0, target_prev=90.0)
    assert update_gamma(state, 80.0, stab) == pytest.approx(stab.gamma_min)


def test_stabilisation_config_validation():
    with pytest.raises(ValidationError):
        StabilisationConfig(p_low=0.9, p_high=0.1)
    with pytest.raises(ValidationError):
        StabilisationConfig(gamma0=0.0)
    assert StabilisationConfig(gamma0=0.0, gamma_min=0.0).gamma0 == 0.0


def test_lmp_returns_reference_when_target_infinite(single_node_problem, backend):
    builder = MasterProblemBuilder(single_node_problem)
    x_ref = np.array([1.0, -5.0])
    lmp = solve_lmp(builder, CutPool(1), x_ref, math.inf, backend)
    np.testing.assert_allclose(lmp.x, x_ref)
    assert lmp.level_value == pytest.approx(1.0)


def test_lmp_projects_reference_onto_level_set(single_node_problem, backend):
    builder = MasterProblemBuilder(single_node_problem)
    pools = CutPool(1)
    # 精确割: β ≥ 15 − 3·cap
    pools.add(0, Cut(np.array([0.0, -5.0]), 15.0, np.array([-3.0, -3.0])))
    # 水平集 {cap + max(0, 15 − 3cap) ≤ 9} = [3, 4]，参考点 cap = 0
    lmp = solve_lmp(builder, pools, np.array([0.0, -5.0]), 9.0, backend)
    assert lmp.x[0] == pytest.approx(3.0, abs=1e-5)
    assert lmp.level_value <= 9.0 + 1e-6 * 10.0
    assert model_level(builder, pools, lmp.x) == pytest.approx(lmp.level_value)
    assert not lmp.fallback


def test_lmp_falls_back_to_rmp_when_level_set_empty(single_node_problem, backend):
    builder = MasterProblemBuilder(single_node_problem)
    pools = CutPool(1)
    pools.add(0, Cut(np.array([0.0, -5.0]), 15.0, np.array([-3.0, -3.0])))
    x_rmp = np.array([4.0, -5.0])
    lmp = solve_lmp(builder, pools, np.array([0.0, -5.0]), 6.0, backend, x_rmp=x_rmp)
    assert lmp.fallback
    np.testing.assert_allclose(lmp.x, x_rmp)
