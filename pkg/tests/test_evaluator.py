import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mgclp.evaluator import (CoverageState, OpenPlan, OracleTooLarge, apply_add, brute_force_opt,
                             customer_values, jcf_value, marginal_gain, objective)
from mgclp.instance_io import Instance

from conftest import random_instance


@pytest.mark.parametrize("theta, cov, expected", [
    (0.2, [1.0], 1.0), (0.2, [0.5, 0.5], 0.70), (1.0, [0.3, 0.9], 0.9), (0.5, [], 0.0)])
def test_jcf_value(theta, cov, expected):
    assert jcf_value(theta, cov) == pytest.approx(expected, abs=1e-12)


def test_open_plan_basics():
    p = OpenPlan([3, 1, 3])
    assert p.key() == (1, 3, 3) and p.total == 3 and p[3] == 2 and p[0] == 0
    assert p == OpenPlan({1: 1, 3: 2}) and hash(p) == hash(OpenPlan({3: 2, 1: 1}))
    assert p.added(0).key() == (0, 1, 3, 3) and p.key() == (1, 3, 3)
    assert list(p.as_array(4)) == [0, 1, 0, 2]
    assert p.n_coloc_locations() == 1 and p.max_coloc() == 2
    assert OpenPlan().max_coloc() == 0
    assert OpenPlan.from_counts(np.array([0, 2, 1])) == OpenPlan([1, 1, 2])


def test_objective_trivial_cases():
    f = np.array([[1.0, 1.0, 1.0], [0.5, 0.0, 0.2]])
    inst = Instance(f, np.ones(3), 2, 0.3)
    assert objective(inst, OpenPlan()) == 0.0
    assert objective(inst, OpenPlan([0])) == pytest.approx(3.0)


def test_colocation_only_changes_product_part():
    inst = Instance(np.array([[0.5]]), np.ones(1), 3, 0.2)
    # 0.2 * 0.5 + 0.8 * (1 - 0.25)
    assert objective(inst, OpenPlan([0, 0])) == pytest.approx(0.7)


def test_objective_matches_jcf_per_customer(rng):
    for _ in range(20):
        inst = random_instance(rng)
        plan = OpenPlan(rng.integers(0, inst.n_locations, inst.K).tolist())
        expected = sum(inst.w[j] * jcf_value(inst.theta, [inst.f[i, j] for i in plan.key()])
                       for j in range(inst.n_customers))
        assert objective(inst, plan) == pytest.approx(expected, abs=1e-12)


def test_marginal_gain_examples():
    f = np.array([[0.0, 0.0], [0.4, 0.7]])
    inst = Instance(f, np.array([2.0, 1.0]), 2, 0.6)
    st0 = CoverageState(inst)
    assert marginal_gain(st0, 0) == 0.0
    assert marginal_gain(st0, 1) == pytest.approx(f[1] @ inst.w)


def test_marginal_gain_against_recompute(rng):
    for _ in range(30):
        inst = random_instance(rng, n_max=6, m_max=6)
        plan = OpenPlan(rng.integers(0, inst.n_locations, int(rng.integers(0, 4))).tolist())
        state = CoverageState(inst, plan)
        for i in range(inst.n_locations):
            delta = objective(inst, plan.added(i)) - objective(inst, plan)
            assert marginal_gain(state, i) == pytest.approx(delta, abs=1e-12)
            assert state.gains()[i] == pytest.approx(delta, abs=1e-12)
            assert marginal_gain(state, i) >= 0.0


def test_apply_add_absorbing_and_colocation():
    inst = Instance(np.array([[1.0, 0.5], [0.3, 0.5]]), np.ones(2), 3, 0.2)
    st0 = CoverageState(inst)
    apply_add(st0, 0)
    assert st0.surv[0] == 0.0 and st0.best[0] == 1.0
    apply_add(st0, 1)
    assert st0.surv[0] == 0.0 and st0.best[0] == 1.0
    st1 = CoverageState(inst)
    apply_add(apply_add(st1, 1), 1)
    assert st1.surv[1] == pytest.approx(0.25) and st1.best[1] == 0.5
    assert st1.plan == OpenPlan([1, 1])


def test_apply_add_sequence_matches_rebuild(rng):
    for _ in range(20):
        inst = random_instance(rng)
        state = CoverageState(inst)
        adds = rng.integers(0, inst.n_locations, 5)
        for i in adds:
            apply_add(state, int(i))
        fresh = CoverageState(inst, OpenPlan(adds.tolist()))
        assert np.allclose(state.best, fresh.best, atol=1e-12)
        assert np.allclose(state.surv, fresh.surv, atol=1e-12)
        assert state.value() == pytest.approx(objective(inst, OpenPlan(adds.tolist())), abs=1e-12)
        assert np.allclose(state.customer_values(), customer_values(inst, state.plan))


def test_state_copy_is_independent():
    inst = Instance(np.array([[0.5]]), np.ones(1), 2, 0.0)
    a = CoverageState(inst)
    b = a.copy()
    a.add(0)
    assert b.value() == 0.0 and a.value() == 0.5


def test_brute_force_hand_examples():
    inst = Instance(np.array([[0.5]]), np.ones(1), 3, 0.0)
    val, plan = brute_force_opt(inst)
    assert val == pytest.approx(0.875) and plan == OpenPlan([0, 0, 0])
    val, plan = brute_force_opt(Instance(inst.f, inst.w, 3, 1.0))
    assert val == pytest.approx(0.5) and plan == OpenPlan([0])
    assert brute_force_opt(inst.with_budget(0)) == (0.0, OpenPlan())


def test_brute_force_guard():
    with pytest.raises(OracleTooLarge):
        brute_force_opt(Instance(np.zeros((16, 2)), np.ones(2), 2, 0.5))
    with pytest.raises(OracleTooLarge):
        brute_force_opt(Instance(np.zeros((3, 2)), np.ones(2), 5, 0.5))


def test_brute_force_against_independent_enumeration(rng):
    # second oracle: enumerate count vectors directly
    for _ in range(15):
        inst = random_instance(rng, n_max=5, m_max=5)
        best = 0.0
        for counts in itertools.product(range(inst.K + 1), repeat=inst.n_locations):
            if sum(counts) <= inst.K:
                best = max(best, objective(inst, np.array(counts)))
        assert brute_force_opt(inst)[0] == pytest.approx(best, abs=1e-12)


instances = st.builds(
    lambda n, m, th, seed: random_instance(np.random.default_rng(seed), n_max=n, m_max=m,
                                           n_min=n, m_min=m, theta=th),
    st.integers(1, 6), st.integers(1, 6), st.sampled_from([0.0, 0.2, 0.5, 0.8, 1.0]),
    st.integers(0, 10**6))
plans = st.lists(st.integers(0, 5), max_size=5)


@settings(max_examples=150, deadline=None)
@given(instances, plans, plans, st.integers(0, 5))
def test_monotone_and_submodular(inst, a, extra, i):
    n = inst.n_locations
    S = OpenPlan([t % n for t in a])
    T = OpenPlan([t % n for t in a + extra])  # S is a sub-multiset of T
    i %= n
    assert objective(inst, S) <= objective(inst, T) + 1e-9
    gain_s = objective(inst, S.added(i)) - objective(inst, S)
    gain_t = objective(inst, T.added(i)) - objective(inst, T)
    assert gain_s >= gain_t - 1e-9
