"""Sampled-tree estimators: single-tree BP, entropy, coupling, majority, mixing."""

import math
from itertools import product
from math import comb

import numpy as np
import pytest

from treebp.bms import SurveySpec, binary_entropy
from treebp.density_evolution import TreeModel
from treebp.llr_dist import edge_llr_map
from treebp.monte_carlo import (
    LLR_MAX,
    BoundaryCondition,
    bp_upward,
    degradation_check,
    estimate_entropy,
    estimate_entropy_pair,
    majority_closed_forms,
    majority_stats,
    sample_tree,
    wsm_probe,
)


def test_boundary_condition_parse_and_validate():
    assert BoundaryCondition.parse("perfect").kind == "perfect"
    assert BoundaryCondition.parse("none").kind == "none"
    plus = BoundaryCondition.parse("plus:4.5")
    assert plus.kind == "plus" and plus.value == 4.5
    assert BoundaryCondition.parse("minus").value == LLR_MAX
    with pytest.raises(ValueError):
        BoundaryCondition.parse("sideways")
    with pytest.raises(ValueError):
        BoundaryCondition.plus(0.0)
    with pytest.raises(ValueError):
        BoundaryCondition("custom")


def test_sample_tree_node_counts():
    tree = sample_tree(TreeModel.regular(3, 0.5), 2, SurveySpec.bec(0.4), seed=7)
    assert tree.level_sizes == [1, 3, 9]
    assert tree.n_nodes == 13
    with pytest.raises(ValueError):
        sample_tree(TreeModel.regular(3, 0.5), -1, SurveySpec.trivial())


def test_sample_tree_spin_correlation_extremes():
    # theta near 1: every spin matches the root; theta = 0: leaf spins fair
    tight = sample_tree(TreeModel.regular(2, 0.999999999), 3, SurveySpec.trivial(), seed=1)
    root = tight.spins[0][0]
    assert all(np.all(level == root) for level in tight.spins)

    loose = sample_tree(TreeModel.regular(2, 0.0), 12, SurveySpec.trivial(), seed=2)
    leaves = loose.spins[12]
    assert abs(float(leaves.mean())) < 4.0 / math.sqrt(leaves.size)


def test_sample_tree_poisson_offspring():
    tree = sample_tree(TreeModel.poisson(3.0, 0.5), 2, SurveySpec.trivial(), seed=3)
    assert tree.level_sizes[0] == 1
    # offspring counts are whatever the draw produced; structure must agree
    assert tree.parents[1].size == tree.level_sizes[1]
    assert tree.parents[2].size == tree.level_sizes[2]
    if tree.level_sizes[2]:
        assert tree.parents[2].max() < tree.level_sizes[1]


def test_bp_upward_zero_boundary_trivial_survey():
    tree = sample_tree(TreeModel.regular(3, 0.5), 2, SurveySpec.trivial(), seed=3)
    assert bp_upward(tree, BoundaryCondition.none()) == 0.0


def test_bp_upward_single_chain_perfect_leaf():
    tree = sample_tree(TreeModel.regular(1, 0.6), 1, SurveySpec.trivial(), seed=5)
    want = math.log(1.6 / 0.4)
    got = bp_upward(tree, BoundaryCondition.perfect(), include_root_survey=False)
    assert abs(got) == pytest.approx(want, abs=1e-12)
    assert math.copysign(1.0, got) == tree.spins[1][0]


def test_bp_upward_theta_zero_leaves_only_survey():
    tree = sample_tree(TreeModel.regular(3, 0.0), 2, SurveySpec.bsc(0.2), seed=9)
    with_root = bp_upward(tree, BoundaryCondition.perfect())
    assert with_root == pytest.approx(float(tree.survey_llr[0][0]), abs=1e-12)
    without = bp_upward(tree, BoundaryCondition.perfect(), include_root_survey=False)
    assert without == 0.0


def test_bp_upward_depth_zero_is_boundary_value():
    tree = sample_tree(TreeModel.regular(3, 0.5), 0, SurveySpec.bec(0.2), seed=1)
    assert bp_upward(tree, BoundaryCondition.none()) == 0.0
    perfect = bp_upward(tree, BoundaryCondition.perfect())
    assert abs(perfect) == LLR_MAX


def test_bp_upward_custom_boundary_length_checked():
    tree = sample_tree(TreeModel.regular(2, 0.5), 2, SurveySpec.trivial(), seed=0)
    with pytest.raises(ValueError):
        bp_upward(tree, BoundaryCondition.custom([1.0, 2.0, 3.0]))
    val = bp_upward(tree, BoundaryCondition.custom([0.0, 0.0, 0.0, 0.0]))
    assert val == 0.0


def test_estimate_entropy_theta_zero_no_root_survey():
    result = estimate_entropy(TreeModel.regular(3, 0.0), SurveySpec.bsc(0.1), 3,
                              BoundaryCondition.perfect(), 200, seed=1,
                              include_root_survey=False)
    assert result.estimate == pytest.approx(math.log(2.0), abs=1e-15)
    assert result.stderr == 0.0


def test_estimate_entropy_depth_zero_perfect():
    result = estimate_entropy(TreeModel.regular(3, 0.5), SurveySpec.bec(0.5), 0,
                              BoundaryCondition.perfect(), 100, seed=1)
    assert result.estimate == pytest.approx(0.0, abs=1e-9)


def test_estimate_entropy_matches_depth_one_enumeration():
    # exact depth-1 oracle: d spins flip independently, survey only at root
    d, theta, alpha = 3, 0.7, 0.2
    sat = edge_llr_map(math.inf, theta)
    cost = math.log((1.0 - alpha) / alpha)
    delta = 0.5 * (1.0 - theta)
    h_exact = 0.0
    for flipped in range(d + 1):
        p_tree = comb(d, flipped) * delta ** flipped * (1.0 - delta) ** (d - flipped)
        for w_sign, p_w in ((1.0, 1.0 - alpha), (-1.0, alpha)):
            r = min(max(sat * (d - 2 * flipped) + w_sign * cost, -LLR_MAX), LLR_MAX)
            h_exact += p_tree * p_w * float(binary_entropy(1.0 / (1.0 + math.exp(abs(r)))))
    est = estimate_entropy(TreeModel.regular(d, theta), SurveySpec.bsc(alpha), 1,
                           BoundaryCondition.perfect(), 200000, seed=11)
    assert est.estimate == pytest.approx(h_exact, abs=4.0 * est.stderr)


def test_estimate_entropy_pair_ordering_and_reproducibility():
    pair = estimate_entropy_pair(TreeModel.regular(3, 0.7), SurveySpec.bec(0.6), 4,
                                 20000, seed=3)
    # extra conditioning cannot raise entropy beyond pairing noise
    assert pair.diff.estimate >= -3.0 * pair.diff.stderr
    assert pair.leaves.estimate <= pair.no_leaves.estimate + 3.0 * pair.diff.stderr

    again = estimate_entropy_pair(TreeModel.regular(3, 0.7), SurveySpec.bec(0.6), 4,
                                  20000, seed=3)
    assert again.leaves.estimate == pair.leaves.estimate
    assert again.no_leaves.estimate == pair.no_leaves.estimate


def test_estimates_invariant_under_worker_count():
    base = estimate_entropy_pair(TreeModel.regular(3, 0.7), SurveySpec.bec(0.6), 4,
                                 20000, seed=3, workers=1)
    multi = estimate_entropy_pair(TreeModel.regular(3, 0.7), SurveySpec.bec(0.6), 4,
                                  20000, seed=3, workers=3)
    assert base.leaves.estimate == multi.leaves.estimate
    assert base.no_leaves.estimate == multi.no_leaves.estimate
    assert base.diff.stderr == multi.diff.stderr


def test_estimate_entropy_poisson_runs():
    result = estimate_entropy(TreeModel.poisson(2.0, 0.6), SurveySpec.bec(0.5), 3,
                              BoundaryCondition.none(), 5000, seed=4)
    assert 0.0 <= result.estimate <= math.log(2.0) + 1e-12


def test_degradation_theta_zero_equality():
    # leaves carry nothing, so both coupled deltas coincide sample-wise
    report = degradation_check(TreeModel.regular(3, 0.0), SurveySpec.bec(0.5), 3,
                               20000, 10, seed=6)
    assert report.ok
    for b in report.bins:
        assert b.mean_delta == pytest.approx(b.delta_tilde_center, abs=1e-12)


def test_degradation_depth_zero_strict():
    report = degradation_check(TreeModel.regular(3, 0.7), SurveySpec.bec(0.5), 0,
                               1000, 5, seed=6, include_root_survey=False)
    assert report.ok
    assert all(b.mean_delta <= 1e-12 for b in report.bins)
    assert all(b.delta_tilde_center == pytest.approx(0.5) for b in report.bins)


def test_degradation_moderate_case_unflagged():
    report = degradation_check(TreeModel.regular(3, 0.7), SurveySpec.bec(0.6), 4,
                               30000, 15, seed=5)
    assert report.n_flagged == 0
    assert sum(b.n for b in report.bins) == 30000
    with pytest.raises(ValueError):
        degradation_check(TreeModel.regular(3, 0.7), SurveySpec.bec(0.6), 4, 100, 0)


def test_majority_closed_form_mean_example():
    mean, _ = majority_closed_forms(2, 0.6, 0.1, 3, "regular")
    assert mean == pytest.approx((1.0 - 0.2) * 1.2 ** 3, abs=1e-12)
    assert mean == pytest.approx(1.3824, abs=1e-12)


def test_majority_closed_form_poisson_variance_example():
    _, var = majority_closed_forms(4.0, 0.7, 0.1, 2, "poisson")
    # 4 eta (1-eta) d^k + (1-2 eta)^2 d^k ((d theta^2)^k - 1)/(d theta^2 - 1)
    growth = (1.96 ** 2 - 1.0) / 0.96
    assert var == pytest.approx(0.36 * 16.0 + 0.64 * 16.0 * growth, abs=1e-10)
    assert var == pytest.approx(36.0704, abs=1e-10)


def test_majority_closed_form_depth_one_enumeration():
    # depth 1, d independent children: mean and variance from first principles
    d, theta, eta = 3, 0.55, 0.2
    m1 = (1.0 - 2.0 * eta) * theta
    mean, var = majority_closed_forms(d, theta, eta, 1, "regular")
    assert mean == pytest.approx(d * m1, abs=1e-12)
    assert var == pytest.approx(d * (1.0 - m1 * m1), abs=1e-12)


def test_majority_stats_matches_closed_forms():
    report = majority_stats(3, 0.6, 0.15, 5, 40000, "regular", seed=2)
    assert abs(report.sample_mean - report.closed_form_mean) <= 4.0 * report.sample_mean_stderr
    assert abs(report.sample_var - report.closed_form_var) <= 4.0 * report.sample_var_stderr
    assert report.chi2_lower_bound == pytest.approx(1.0 / (report.ratio + 1.0), abs=1e-12)


def test_majority_stats_poisson_and_validation():
    report = majority_stats(3.0, 0.8, 0.1, 5, 30000, "poisson", seed=8)
    assert abs(report.sample_mean - report.closed_form_mean) <= 4.0 * report.sample_mean_stderr
    assert report.ratio_limit == pytest.approx(1.0 / (3.0 * 0.64 - 1.0), abs=1e-12)
    with pytest.raises(ValueError):
        majority_stats(3, 0.6, 0.0, 5, 1000)
    with pytest.raises(ValueError):
        majority_stats(3, 0.6, 0.6, 5, 1000)
    with pytest.raises(ValueError):
        majority_stats(3.5, 0.6, 0.1, 5, 1000, "regular")
    with pytest.raises(ValueError):
        majority_stats(3, 0.6, 0.1, 0, 1000)


def test_majority_stats_worker_invariance():
    one = majority_stats(3, 0.6, 0.15, 4, 50000, "regular", seed=2, workers=1)
    two = majority_stats(3, 0.6, 0.15, 4, 50000, "regular", seed=2, workers=4)
    assert one.sample_mean == two.sample_mean
    assert one.sample_var == two.sample_var


def test_wsm_contraction_rate_bound():
    report = wsm_probe(TreeModel.regular(2, 0.4), SurveySpec.trivial(), 8, 16, seed=1)
    assert report.regime == "contraction"
    assert report.rate_bound == pytest.approx(0.8)
    assert report.measured_rate <= 0.8 * 1.05
    # mean gap shrinks toward the root
    gaps = report.level_gaps
    assert all(gaps[j] <= gaps[j + 1] + 1e-12 for j in range(len(gaps) - 1))


def test_wsm_theta_zero_gap_collapses():
    report = wsm_probe(TreeModel.regular(2, 0.0), SurveySpec.bsc(0.3), 4, 8, seed=1)
    assert report.level_gaps[0] == 0.0
    assert all(g == 0.0 for g in report.level_gaps[:-1])


def test_wsm_separation_found_and_persists():
    report = wsm_probe(TreeModel.regular(3, 0.5), SurveySpec.bsc(0.49), 6, 64, seed=2)
    assert report.regime == "separation"
    assert report.status == "ok"
    assert report.x_found is not None and report.x_found > 0.0
    assert report.min_llr > report.x_found
    assert report.persists


def test_wsm_validation():
    with pytest.raises(ValueError):
        wsm_probe(TreeModel.poisson(3.0, 0.5), SurveySpec.bsc(0.49), 4, 16)
    with pytest.raises(ValueError):
        wsm_probe(TreeModel.regular(3, 0.5), SurveySpec.bec(0.5), 4, 16)
    with pytest.raises(ValueError):
        wsm_probe(TreeModel.regular(2, 0.4), SurveySpec.trivial(), 0, 16)
    with pytest.raises(ValueError):
        wsm_probe(TreeModel.regular(2, 0.4), SurveySpec.trivial(), 4, 16,
                  boundary_magnitude=0.0)


def test_result_dictionaries():
    result = estimate_entropy(TreeModel.regular(2, 0.5), SurveySpec.bec(0.5), 2,
                              BoundaryCondition.none(), 500, seed=1)
    assert set(result.as_dict()) == {"estimate", "stderr", "n_samples", "seed"}
    report = degradation_check(TreeModel.regular(2, 0.5), SurveySpec.bec(0.5), 2, 500, 4)
    doc = report.as_dict()
    assert {"bins", "n_flagged", "n_skipped", "ok"} <= set(doc)
