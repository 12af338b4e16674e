import itertools

import numpy as np
import pytest

from mgclp.cuts import (CUSTOMER, FULL, MAX_PART, PRODUCT, Cut, VarIndex, initial_cuts,
                        is_integral, max_cut_coefficients, max_part_bounds, plan_incidence,
                        scut_coefficients, separate_fractional, separate_integer,
                        separate_penalty, top_k_members)
from mgclp.evaluator import brute_force_opt, coverage_terms, customer_values, objective
from mgclp.instance_io import Instance

from conftest import random_instance


def _plans(n, K):
    """Every count vector with total at most K."""
    for counts in itertools.product(range(K + 1), repeat=n):
        if sum(counts) <= K:
            yield np.array(counts)


def _component(inst, counts, family, j=None):
    best, surv = coverage_terms(inst, counts)
    if family == FULL:
        return objective(inst, counts)
    if family == CUSTOMER:
        return inst.w[j] * customer_values(inst, counts)[j]
    if family == PRODUCT:
        return (1 - inst.theta) * inst.w[j] * (1 - surv[j])
    return inst.theta * inst.w[j] * best[j]


def _etas(inst, counts, formulation):
    best, surv = coverage_terms(inst, counts)
    out = {}
    if formulation == "F1":
        out[FULL] = np.array([objective(inst, counts)])
    if formulation == "F2":
        out[CUSTOMER] = inst.w * customer_values(inst, counts)
    if formulation in ("F3", "F4"):
        out[PRODUCT] = (1 - inst.theta) * inst.w * (1 - surv)
    if formulation == "F4":
        out[MAX_PART] = inst.theta * inst.w * best
    return out


def test_empty_plan_full_cut():
    inst = Instance(np.array([[0.5, 1.0], [0.2, 0.0]]), np.array([2.0, 1.0]), 2, 0.3)
    cut = scut_coefficients(inst, [0, 0], FULL)
    assert cut.constant == 0.0
    assert cut.coeffs[VarIndex(0, 1)] == pytest.approx(2.0)
    assert cut.coeffs[VarIndex(1, 1)] == pytest.approx(0.4)


def test_product_coefficient_hand_example():
    inst = Instance(np.array([[0.5]]), np.array([3.0]), 2, 0.0)
    cut = scut_coefficients(inst, [1], PRODUCT, 0)
    # surv 0.5 times f 0.5, scaled by (1 - theta) w
    assert cut.constant == pytest.approx(1.5)
    assert cut.coeffs == {VarIndex(0, 2): pytest.approx(0.25 * 3.0)}


def test_unknown_family_rejected():
    inst = Instance(np.array([[0.5]]), np.array([1.0]), 1, 0.5)
    with pytest.raises(ValueError):
        scut_coefficients(inst, [0], "bogus")
    with pytest.raises(ValueError):
        scut_coefficients(inst, [0], CUSTOMER)
    with pytest.raises(ValueError):
        max_cut_coefficients(inst, 0, 1)


def test_max_cut_examples():
    inst = Instance(np.array([[0.2], [0.5], [0.9]]), np.array([2.0]), 1, 0.5)
    cut0 = max_cut_coefficients(inst, 0, 0)
    assert cut0.constant == 0.0
    assert cut0.coeffs == {VarIndex(0, 1): pytest.approx(0.2), VarIndex(1, 1): pytest.approx(0.5),
                           VarIndex(2, 1): pytest.approx(0.9)}
    top = max_cut_coefficients(inst, 0, 2)
    assert set(top.coeffs) == {VarIndex(2, 1)}
    for subset in itertools.product([0, 1], repeat=3):
        x = np.array(subset, dtype=float)[:, None]
        lowest = min(max_cut_coefficients(inst, 0, r).rhs(x) for r in range(3))
        best = max([f for f, s in zip((0.2, 0.5, 0.9), subset) if s], default=0.0)
        assert lowest == pytest.approx(0.5 * 2.0 * best, abs=1e-12)
        _, rhs = max_part_bounds(inst, x[:, 0])
        assert rhs[0] == pytest.approx(lowest, abs=1e-12)


def test_max_cuts_touch_only_first_copies(rng):
    for _ in range(20):
        inst = random_instance(rng, k_max=3)
        for j in range(inst.n_customers):
            for r in range(inst.n_locations):
                cut = max_cut_coefficients(inst, j, r)
                assert all(v.copy == 1 for v in cut.coeffs)
                assert all(c >= 0 for c in cut.coeffs.values())


def test_max_part_bounds_match_enumeration(rng):
    for _ in range(30):
        inst = random_instance(rng)
        x1 = rng.random(inst.n_locations)
        rank, rhs = max_part_bounds(inst, x1)
        x = np.zeros((inst.n_locations, inst.K))
        x[:, 0] = x1
        for j in range(inst.n_customers):
            vals = [max_cut_coefficients(inst, j, r).rhs(x) for r in range(inst.n_locations)]
            assert rhs[j] == pytest.approx(min(vals), abs=1e-12)
            assert vals[rank[j]] == pytest.approx(min(vals), abs=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_scut_validity_and_tightness_exhaustive(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n_max=6, m_max=5, k_max=3, n_min=2, k_min=1)
    plans = list(_plans(inst.n_locations, inst.K))
    points = [plan_incidence(p, inst.n_locations, inst.K) for p in plans]
    for gen in plans:
        cuts = [scut_coefficients(inst, gen, FULL)]
        cuts += [scut_coefficients(inst, gen, fam, j)
                 for fam in (CUSTOMER, PRODUCT) for j in range(inst.n_customers)]
        for cut in cuts:
            assert np.all(cut.val >= 0)
            j = cut.customer
            assert cut.rhs(plan_incidence(gen, inst.n_locations, inst.K)) == pytest.approx(
                _component(inst, gen, cut.family, j), abs=1e-9)
            for counts, x in zip(plans, points):
                assert _component(inst, counts, cut.family, j) <= cut.rhs(x) + 1e-9


@pytest.mark.parametrize("seed", range(6))
def test_penalty_cut_validity_exhaustive(seed):
    rng = np.random.default_rng(100 + seed)
    inst = random_instance(rng, n_max=6, m_max=5, k_max=3, n_min=2)
    plans = list(_plans(inst.n_locations, inst.K))
    points = [plan_incidence(p, inst.n_locations, inst.K) for p in plans]
    for formulation in ("F1", "F2", "F3", "F4"):
        for _ in range(5):
            x_tilde = rng.random((inst.n_locations, inst.K))
            x_tilde = -np.sort(-x_tilde, axis=1)
            big = {k: v + 100.0 for k, v in _etas(inst, np.zeros(inst.n_locations, int),
                                                  formulation).items()}
            for cut in separate_penalty(inst, x_tilde, big, formulation):
                assert cut.family != MAX_PART
                for counts, x in zip(plans, points):
                    assert _component(inst, counts, cut.family, cut.customer) <= cut.rhs(x) + 1e-9


def test_penalty_cut_tight_at_generating_plan(rng):
    for _ in range(20):
        inst = random_instance(rng, n_min=2)
        x = plan_incidence(np.eye(inst.n_locations, dtype=int)[0] * inst.K,
                           inst.n_locations, inst.K)
        etas = {k: v + 100.0 for k, v in _etas(inst, np.zeros(inst.n_locations, int), "F2").items()}
        counts = x.sum(axis=1).astype(int)
        for cut in separate_penalty(inst, x, etas, "F2"):
            assert cut.rhs(x) == pytest.approx(_component(inst, counts, CUSTOMER, cut.customer),
                                               abs=1e-9)


@pytest.mark.parametrize("formulation", ["F1", "F2", "F3", "F4"])
def test_separate_integer_exact(formulation, rng):
    for _ in range(40):
        inst = random_instance(rng)
        z, plan = brute_force_opt(inst)
        counts = plan.as_array(inst.n_locations)
        x = plan_incidence(counts, inst.n_locations, inst.K)
        etas = _etas(inst, counts, formulation)
        assert separate_integer(inst, x, etas, formulation) == []
        family = next(iter(etas))
        etas[family] = etas[family] + 1.0
        cuts = separate_integer(inst, x, etas, formulation)
        assert len(cuts) == etas[family].size
        for cut in cuts:
            assert cut.family == family
            eta = etas[family][0 if cut.customer is None else cut.customer]
            assert cut.violation(x, eta) == pytest.approx(1.0, abs=1e-9)


def test_separate_integer_accepts_iff_value_at_most_truth(rng):
    for _ in range(60):
        inst = random_instance(rng)
        counts = np.zeros(inst.n_locations, dtype=int)
        for i in rng.integers(0, inst.n_locations, inst.K):
            counts[i] += 1
        x = plan_incidence(counts, inst.n_locations, inst.K)
        truth = objective(inst, counts)
        for delta in (-0.5, 0.0, 0.5):
            cuts = separate_integer(inst, x, {FULL: np.array([truth + delta])}, "F1")
            assert bool(cuts) == (delta > 0)


def test_fractional_top_k_examples():
    x = np.array([[0.9], [0.8], [0.1]])
    assert top_k_members(x, 2)[:, 0].tolist() == [True, True, False]
    uniform = np.full((3, 2), 0.5)
    assert top_k_members(uniform, 3).tolist() == [[True, True], [True, False], [False, False]]
    # the same inputs give the same set every time
    assert np.array_equal(top_k_members(uniform, 3), top_k_members(uniform.copy(), 3))


def test_fractional_on_integral_point_matches_integer(rng):
    for _ in range(30):
        inst = random_instance(rng)
        counts = np.zeros(inst.n_locations, dtype=int)
        for i in rng.integers(0, inst.n_locations, inst.K):
            counts[i] += 1
        x = plan_incidence(counts, inst.n_locations, inst.K)
        etas = {PRODUCT: np.full(inst.n_customers, 10.0), MAX_PART: np.full(inst.n_customers, 10.0)}
        a = separate_integer(inst, x, etas, "F4")
        b = separate_fractional(inst, x, etas, "F4")
        assert len(a) == len(b)
        for c1, c2 in zip(a, b):
            assert c1.eta_key == c2.eta_key and c1.constant == pytest.approx(c2.constant)
            assert np.array_equal(c1.idx, c2.idx)


def test_one_cut_per_eta_per_round(rng):
    inst = random_instance(rng, n_min=3, m_min=3)
    x = rng.random((inst.n_locations, inst.K))
    etas = {CUSTOMER: np.full(inst.n_customers, 50.0)}
    cuts = separate_fractional(inst, x, etas, "F2")
    keys = [c.eta_key for c in cuts]
    assert len(keys) == len(set(keys))


def test_initial_cuts_count():
    inst = Instance(np.array([[0.5, 1.0], [0.2, 0.0], [0.0, 0.3]]), np.ones(2), 2, 0.4)
    assert len(initial_cuts(inst, "F1")) == 1
    assert len(initial_cuts(inst, "F2")) == 2
    assert len(initial_cuts(inst, "F3")) == 2
    assert len(initial_cuts(inst, "F4")) == 4


def test_is_integral():
    assert is_integral(np.array([0.0, 1.0, 1 - 1e-8]))
    assert not is_integral(np.array([0.5]))


def test_cut_accepts_copy_set():
    inst = Instance(np.array([[0.5], [0.4]]), np.ones(1), 2, 0.0)
    a = scut_coefficients(inst, {(0, 1)}, PRODUCT, 0)
    b = scut_coefficients(inst, [1, 0], PRODUCT, 0)
    assert isinstance(a, Cut) and a.coeffs == b.coeffs and a.constant == b.constant
