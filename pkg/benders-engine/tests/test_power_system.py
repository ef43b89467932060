"""
电力系统实例生成测试
"""
import json

import numpy as np
import pytest

from backend.lp_backend import LPBackend
from core.exceptions import InstanceParseError, InstanceValidationError
from decomposition.adaptive_benders import EngineConfig, run_adaptive
from decomposition.level_set import StabilisationConfig
from power_system.instance import build_model, load_instance, parse_document, save_instance
from power_system.schema import TreeSpec, UncertainParameter
from power_system.toy_cases import ToyCaseParams, instance_document, toy_case_model
from power_system.tree import build_tree
from power_system.vss import compute_vss
from problem.monolithic import solve_monolithic
from problem.structured_problem import node_view


def test_tree_shape_and_probabilities():
    spec = TreeSpec(stages=3, kappa=5, co2_budget=UncertainParameter(root=100.0),
                    demand_scale=UncertainParameter(root=1.0, outcomes=[1.0, 1.1, 1.2]))
    tree = build_tree(spec, discount_rate=0.05)
    assert len(tree) == 13
    assert tree.stage_counts() == [1, 3, 9]
    for s in range(3):
        assert sum(n.probability for n in tree.stage_nodes(s)) == pytest.approx(1.0)
    assert tree.nodes[1].discount == pytest.approx(1.05 ** -5)
    assert tree.nodes[4].demand_scale == pytest.approx(1.0 * 1.0)
    assert tree.nodes[12].demand_scale == pytest.approx(1.2 * 1.2)
    assert tree.ancestors(12) == (0, 3, 12)


def test_two_uncertainties_give_ninety_one_nodes():
    doc, _ = instance_document("synthetic_tree", ToyCaseParams(periods=4, stages=3, branch=3, uncertainties=2))
    assert len(build_tree(doc.tree)) == 91


def test_alive_installs_respects_lifetime():
    spec = TreeSpec(stages=3, kappa=5, co2_budget=UncertainParameter(root=1.0))
    tree = build_tree(spec)
    assert tree.alive_installs(2, lifetime=30) == [0, 1, 2]
    assert tree.alive_installs(2, lifetime=5) == [1, 2]
    assert tree.alive_installs(2, lifetime=3) == [2]


def test_expected_value_tree_uses_stage_means():
    spec = TreeSpec(stages=2, co2_budget=UncertainParameter(root=10.0),
                    demand_scale=UncertainParameter(root=1.0, outcomes=[0.9, 1.3]))
    ev = build_tree(spec).expected_value_tree()
    assert len(ev) == 2
    assert ev.is_deterministic
    assert ev.nodes[1].demand_scale == pytest.approx(1.1)


def test_empty_outcome_list_is_rejected():
    spec = TreeSpec(stages=2, co2_budget=UncertainParameter(root=1.0, outcomes=[]))
    with pytest.raises(InstanceValidationError):
        build_tree(spec)


def test_invalid_json_reports_position():
    with pytest.raises(InstanceParseError) as info:
        parse_document('{\n  "regions": ["R1",\n}')
    assert info.value.line == 3


def test_schema_violation_reports_locations():
    with pytest.raises(InstanceValidationError) as info:
        parse_document(json.dumps({"regions": ["R1"], "profiles": {"path": "p.csv"}}))
    assert "tree" in info.value.locations


def test_line_with_unknown_region_is_rejected(small_params):
    doc, _ = instance_document("C", small_params)
    raw = json.loads(doc.model_dump_json())
    raw["lines"][0]["to_region"] = "R9"
    with pytest.raises(InstanceValidationError):
        parse_document(json.dumps(raw))


def test_profile_weights_must_cover_year(small_params):
    doc, profile = instance_document("A", small_params)
    profile.weights = profile.weights * 0.5
    with pytest.raises(InstanceValidationError):
        build_model(doc, profile)


def test_save_and_load_round_trip(small_params, tmp_path):
    doc, profile = instance_document("synthetic_tree", small_params.model_copy(update={"stages": 2}))
    path = save_instance(doc, profile, tmp_path)
    loaded_doc, loaded_profile = load_instance(path)
    original = build_model(doc, profile).problem
    restored = build_model(loaded_doc, loaded_profile).problem
    assert restored.node_count == original.node_count
    np.testing.assert_allclose(restored.master.f, original.master.f)
    np.testing.assert_allclose(restored.template.A.toarray(), original.template.A.toarray(), rtol=1e-10)


def test_case_a_node_encoding(case_a_model):
    problem = case_a_model.problem
    layout = case_a_model.master_layout
    assert problem.node_count == 1
    node = problem.nodes[0]
    np.testing.assert_allclose(node.c, [5.0, 0.0])
    x = np.arange(problem.master.x_dim, dtype=float)
    view = node_view(x, node)
    assert view[0] == layout.acc_index(0, 0)
    assert view[-2] == layout.dem_index(0)
    assert view[-1] == layout.co2_index(0)
    # 需求分量为负缩放系数
    assert problem.master.x_lower[layout.dem_index(0)] == -1.0


def test_case_b_energy_balance_and_emissions(small_params):
    model = toy_case_model("B", small_params)
    solution = solve_monolithic(model.problem, LPBackend())
    y = solution.ys[0]
    op = model.operational_layout
    topo = model.topology
    for z in model.document.regions:
        supply = sum(y[op.pg[g]] for g in topo.thermal[z]) + y[op.shed[z]] - y[op.gshed[z]]
        np.testing.assert_allclose(supply, model.profile.demand[z], atol=1e-6)

    emissions = sum(
        model.profile.annual_weights @ (y[op.pg[t.name]] * t.emission_factor)
        for t in model.document.technologies
    )
    budget = solution.x[model.master_layout.co2_index(0)]
    assert emissions <= budget * (1 + 1e-9) + 1e-9


def test_case_c_builds_no_line(case_c_model):
    problem = case_c_model.problem
    layout = case_c_model.master_layout
    p = layout.tech_names.index("Line_R1_R2")
    solution = solve_monolithic(problem, LPBackend())
    assert solution.x[layout.acc_index(p, 0)] == pytest.approx(0.0, abs=1e-6)

    cfg = EngineConfig(eps=0.01, stabilisation=StabilisationConfig(gamma0=0.2))
    result = run_adaptive(problem, cfg)
    assert result.converged
    line = result.incumbent[layout.acc_index(p, 0)]
    unit_cost = problem.master.f[layout.inst_index(p, 0)] + problem.master.f[layout.acc_index(p, 0)]
    # 任何建线方案的总成本至少比最优值高 单位成本 × 线路容量
    assert unit_cost * line <= result.upper_bound - result.lower_bound + 1e-6 * abs(result.upper_bound)


def test_vss_is_zero_for_deterministic_tree(case_a_model):
    report = compute_vss(case_a_model)
    assert report.vss == 0.0
    assert report.percent == 0.0
    assert report.ev_policy_cost == report.stochastic_optimum


def two_scenario_model(scale=1.0):
    params = ToyCaseParams(periods=4, stages=2, branch=2, uncertainties=1, regions=1, seed=3)
    doc, profile = instance_document("synthetic_tree", params)
    if scale != 1.0:
        doc = doc.scaled_costs(scale)
    return build_model(doc, profile)


def test_vss_is_nonnegative_for_stochastic_tree():
    report = compute_vss(two_scenario_model())
    assert report.vss >= -1e-6 * abs(report.stochastic_optimum)
    assert report.ev_policy_cost >= report.stochastic_optimum - 1e-6 * abs(report.stochastic_optimum)
    assert report.percent == pytest.approx(100.0 * report.vss / report.stochastic_optimum)
    assert report.root_decision is not None


@pytest.mark.slow
def test_vss_scales_with_costs():
    base = compute_vss(two_scenario_model())
    doubled = compute_vss(two_scenario_model(2.0))
    assert doubled.stochastic_optimum == pytest.approx(2 * base.stochastic_optimum, rel=1e-7)
    assert doubled.vss == pytest.approx(2 * base.vss, abs=1e-6 * abs(doubled.stochastic_optimum))


def stabilisation_pair(which):
    problem = toy_case_model(which, ToyCaseParams()).problem
    backend = LPBackend()
    plain = run_adaptive(problem, EngineConfig(eps=0.01), backend)
    stabilised = run_adaptive(problem, EngineConfig(eps=0.01, stabilisation=StabilisationConfig(gamma0=0.2)), backend)
    assert plain.converged and stabilised.converged
    return plain, stabilised


@pytest.mark.slow
@pytest.mark.parametrize("which", ["B", "C"])
def test_stabilisation_shortens_degenerate_runs(which):
    plain, stabilised = stabilisation_pair(which)
    assert stabilised.iterations < plain.iterations
    assert stabilised.path_length < plain.path_length
    assert stabilised.upper_bound == pytest.approx(plain.upper_bound, rel=2e-4)


@pytest.mark.slow
def test_stabilisation_costs_nothing_on_case_a():
    plain, stabilised = stabilisation_pair("A")
    # 二维容量空间下两者步数相当
    assert abs(stabilised.iterations - plain.iterations) <= 2
    assert stabilised.upper_bound == pytest.approx(plain.upper_bound, rel=2e-4)
