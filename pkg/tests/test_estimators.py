import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsmoment.core import (
    PAPER_PROFILE,
    TEST_PROFILE,
    BudgetBreakdown,
    ConstantProfile,
    EstimatorParams,
    NoCollision,
    UnsupportedExponent,
    WeightedInstance,
)
from wsmoment.estimators import (
    collision_estimate,
    estimate_moment,
    estimate_sum,
    inner_expectation,
    required_budget,
    sum_stage_budget,
)
from wsmoment.exact import exact_moment, lb_hit_probability
from wsmoment.instances import PowerLaw, Uniform, gen_lb_proportional, gen_synthetic
from wsmoment.oracles import SampleKind, build_coupled_oracles, build_oracle, derive_seed


def test_budget_default_profile_example():
    params = EstimatorParams(t=2, eps=0.1, delta=0.05, eps1=0.05, scale=PAPER_PROFILE)
    b = required_budget(2, 10**4, params)
    # 48 * 100 / 0.01, and ceil(48 ln 40) with 48 ln 40 = 177.066...
    assert b.inner == 480000
    assert b.outer == 178
    # ceil(480 * 100 * ln 40 / 0.05), mpmath reference
    assert b.sum_stage == 3541325
    assert b.total == 3541325 + 178 * 480000


def test_budget_single_element():
    params = EstimatorParams(t=2, eps=0.3, delta=0.1)
    assert required_budget(2, 1, params).inner == math.ceil(48 / 0.09)


def test_budget_small_t_branch():
    params = EstimatorParams(t=0.75, eps=0.2, delta=0.1, scale=TEST_PROFILE)
    # n^(1/t - 1) = 1000^(1/3) = 10
    assert required_budget(0.75, 1000, params).inner == 750


def test_budget_t_one_is_sum_stage_only():
    params = EstimatorParams(t=1, eps=0.2, delta=0.1, scale=TEST_PROFILE)
    b = required_budget(1, 400, params)
    assert (b.inner, b.outer) == (0, 0) and b.total == b.sum_stage


@pytest.mark.parametrize("t", [0.4, 0.5, 0.1])
def test_budget_unsupported(t):
    with pytest.raises(UnsupportedExponent):
        required_budget(t, 100, EstimatorParams(t=t, eps=0.1, delta=0.1))


def test_sum_single_element():
    s = estimate_sum(build_oracle(WeightedInstance((7.0,)), 3), 0.1, 0.1, PAPER_PROFILE)
    assert s.w_hat == pytest.approx(7.0, rel=1e-15)


def test_sum_uniform_weights():
    inst = gen_synthetic(100, Uniform(1))
    good = 0
    for seed in range(100):
        s = estimate_sum(build_oracle(inst, derive_seed(2024, seed)), 0.2, 0.2, TEST_PROFILE)
        good += 80 <= s.w_hat <= 120
    assert good >= 80


def test_sum_budget_is_exact():
    inst = gen_synthetic(500, PowerLaw(1.5), seed=1)
    handle = build_oracle(inst, 5)
    s = estimate_sum(handle, 0.1, 0.05, TEST_PROFILE)
    m = math.ceil(10 * math.sqrt(500) * math.log(40) / 0.1)
    assert s.samples == m == handle.queries_used()[0]
    assert s.batches == math.ceil(9 * math.log(40))


def test_no_collision_surfaces():
    inst = WeightedInstance((1.0,) * 10**6)
    with pytest.raises(NoCollision):
        estimate_sum(build_oracle(inst, 1), 0.1, 0.1, TEST_PROFILE, samples=2, batches=1)


def test_collision_estimate_formula():
    idx = np.array([0, 1, 0, 2, 0, 1])
    w = np.array([2.0, 4.0, 2.0, 8.0, 2.0, 4.0])
    # pairs: element 0 three times -> 3 pairs at 1/2, element 1 twice -> 1 pair at 1/4
    assert collision_estimate(idx, w) == pytest.approx(15 / (3 / 2 + 1 / 4))


def test_uniform_weights_collapse_to_sum_estimate():
    inst = gen_synthetic(100, Uniform(1))
    params = EstimatorParams(t=2, eps=0.2, delta=0.1, scale=TEST_PROFILE)
    rep = estimate_moment(build_oracle(inst, 9), params)
    assert rep.value == rep.w_hat


def _random_weights(rng, n):
    kind = rng.integers(3)
    if kind == 0:
        return rng.uniform(0, 1, n)
    if kind == 1:
        return (rng.pareto(1.1, n) + 1) ** 2
    ws = rng.uniform(0, 1, n)
    ws[rng.random(n) < 0.3] = 0.0
    ws[0] = max(ws[0], 0.5)
    return ws


@pytest.mark.parametrize("t", [1.5, 2.0, 3.0, 0.75])
def test_unbiased_with_true_total(t):
    rng = np.random.default_rng(int(t * 100))
    for _ in range(30):
        inst = WeightedInstance(tuple(_random_weights(rng, int(rng.integers(1, 101)))))
        W = exact_moment(inst, 1)
        S = exact_moment(inst, t)
        w = np.array(inst.weights)
        arithmetic = math.fsum(((w[w > 0] / W) * (W * w[w > 0] ** (t - 1))).tolist())
        assert arithmetic == pytest.approx(S, rel=1e-12)
        assert inner_expectation(build_oracle(inst, 0), t, W) == pytest.approx(S, rel=1e-12)


def test_second_moment_matches_variance_formula():
    inst = gen_synthetic(10, PowerLaw(2), seed=0)
    W = exact_moment(inst, 1)
    _, w = build_oracle(inst, 77).draw_many(SampleKind.PROPORTIONAL, 10**6)
    x = W * w ** (2 - 1)
    assert np.mean(x**2) == pytest.approx(W * exact_moment(inst, 3), rel=0.05)


@pytest.mark.parametrize("eps1", [0.01, 0.1, 0.25, 0.5])
def test_estimated_probability_sandwich(eps1):
    w = np.array([0.5, 1.0, 7.0, 3.25])
    W = math.fsum(w)
    p = w / W
    for w_hat in ((1 - eps1) * W, W, (1 + eps1) * W):
        p_tilde = w / w_hat
        assert np.all(p / (1 + eps1) <= p_tilde * (1 + 1e-15))
        assert np.all(p_tilde <= p / (1 - eps1) * (1 + 1e-15))


def test_norm_inequalities():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        n = int(rng.integers(1, 50))
        x = rng.exponential(1.0, n) ** rng.uniform(0.2, 3)
        r, p = sorted(rng.uniform(0.1, 6, 2))
        if r == p:
            continue
        norm = lambda q: math.fsum((x**q).tolist()) ** (1 / q)
        assert norm(p) <= norm(r) * (1 + 1e-12)
        assert norm(r) <= n ** (1 / r - 1 / p) * norm(p) * (1 + 1e-12)


def test_output_is_median_of_batch_means():
    inst = gen_synthetic(300, PowerLaw(1.5), seed=2)
    params = EstimatorParams(t=2.5, eps=0.3, delta=0.2, scale=TEST_PROFILE)
    budget = BudgetBreakdown(sum_stage=400, inner=50, outer=11, sum_batches=4)
    rep = estimate_moment(build_oracle(inst, 5), params, budget=budget)

    twin = build_oracle(inst, 5)
    s = estimate_sum(twin, params.eps1, params.delta, params.scale, samples=400, batches=4)
    ys = []
    for _ in range(11):
        _, w = twin.draw_many(SampleKind.PROPORTIONAL, 50)
        ys.append(s.w_hat * float(np.sum(w**1.5)) / 50)
    assert rep.w_hat == s.w_hat
    assert rep.value == float(np.median(ys))
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert float(np.median(rng.permutation(ys))) == rep.value


def test_t_one_delegates_to_sum():
    inst = gen_synthetic(200, PowerLaw(2), seed=1)
    params = EstimatorParams(t=1, eps=0.2, delta=0.1, scale=TEST_PROFILE)
    rep = estimate_moment(build_oracle(inst, 4), params)
    s = estimate_sum(build_oracle(inst, 4), params.eps1, params.delta, params.scale)
    assert rep.value == s.w_hat == rep.w_hat
    assert rep.samples_proportional == s.samples


def test_moment_rejects_small_t():
    with pytest.raises(UnsupportedExponent):
        estimate_moment(build_oracle(WeightedInstance((1.0, 2.0)), 0),
                        EstimatorParams(t=0.4, eps=0.1, delta=0.1))


@given(st.integers(1, 3000), st.sampled_from([0.6, 0.8, 1.0, 1.5, 2.0, 3.0]),
       st.floats(0.15, 0.6), st.floats(0.05, 0.5), st.integers(0, 2**32))
@settings(max_examples=25, deadline=None)
def test_ledger_delta_equals_budget(n, t, eps, delta, seed):
    inst = gen_synthetic(n, PowerLaw(2), seed=seed)
    params = EstimatorParams(t=t, eps=eps, delta=delta, scale=TEST_PROFILE)
    handle = build_oracle(inst, seed)
    handle.draw_many(SampleKind.PROPORTIONAL, 3)
    rep = estimate_moment(handle, params)
    expected = required_budget(t, n, params)
    assert rep.budget == expected
    assert rep.samples_proportional == expected.total
    assert handle.queries_used() == (3 + expected.total, 0)


def test_small_t_estimator_accuracy():
    inst = gen_synthetic(1000, PowerLaw(1.5), seed=3)
    params = EstimatorParams(t=0.75, eps=0.2, delta=0.1, scale=TEST_PROFILE)
    S = exact_moment(inst, 0.75)
    ok = sum(abs(estimate_moment(build_oracle(inst, derive_seed(8, i)), params).value - S) <= 0.2 * S
             for i in range(40))
    assert ok >= 32


def test_default_profile_single_run_is_accurate():
    inst = gen_synthetic(2000, PowerLaw(2), seed=4)
    params = EstimatorParams(t=3, eps=0.2, delta=0.1)
    rep = estimate_moment(build_oracle(inst, 1), params)
    assert rep.value == pytest.approx(exact_moment(inst, 3), rel=0.2)


def test_heavy_instance_unseen_at_small_budget():
    pair = gen_lb_proportional(10**4, 2, 0.1)
    p = lb_hit_probability(pair).p_proportional
    W_light = exact_moment(pair.light, 1)
    S_light = exact_moment(pair.light, 2)
    params = EstimatorParams(t=2, eps=0.1, delta=0.1)
    budget = BudgetBreakdown(sum_stage=0, inner=100, outer=1)
    trials, unseen = 400, 0
    heavy_mask = np.zeros(pair.n, dtype=bool)
    heavy_mask[list(pair.heavy_indices)] = True
    for i in range(trials):
        _, heavy = build_coupled_oracles(pair.light, pair.heavy, pair.heavy_indices, derive_seed(6, i))
        rep = estimate_moment(heavy, params, budget=budget, w_hat=W_light)
        if rep.value == pytest.approx(S_light, rel=1e-12):
            unseen += 1
    # unseen iff the heavy element is absent; compare against (1-p)^100 at 4 sigma
    q = (1 - p) ** 100
    assert abs(unseen / trials - q) <= 4 * math.sqrt(q * (1 - q) / trials)


def test_rejects_zero_inner_budget():
    with pytest.raises(ValueError):
        estimate_moment(build_oracle(WeightedInstance((1.0, 2.0)), 0), EstimatorParams(2, 0.2, 0.1),
                        budget=BudgetBreakdown(10, 0, 3))


def test_batches_capped_by_sample_count():
    profile = ConstantProfile(sum_c=1, inner_c=1, outer_c=30, name="tiny")
    m, batches = sum_stage_budget(4, 0.5, 0.5, profile)
    # m = ceil(2 ln 4 / 0.5) = 6 draws cannot fill ceil(30 ln 4) = 42 batches of two
    assert (m, batches) == (6, 3)
