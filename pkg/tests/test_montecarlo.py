import math

import numpy as np
import pytest

from repeaterlab import _kernels as K
from repeaterlab.chain import ChainConfig
from repeaterlab.exact import evaluate_exact
from repeaterlab.montecarlo import (
    BatchedEstimate,
    batch_seeds,
    end_age_aggregates,
    evaluate_policy,
    fidelity_array,
    improvement_factor,
    simulate_episode,
)
from repeaterlab.noise import fidelity_of_age
from repeaterlab.policies import RandomPolicy, SwapAsapPolicy, WaitForAllPolicy


def within(est, value, sigmas=4.0):
    return abs(est.mean - value) <= sigmas * est.std_error


def test_batched_estimate():
    est = BatchedEstimate.from_batches([1.0, 2.0, 3.0, np.nan], 10)
    assert est.mean == 2.0 and est.batch_count == 3
    assert est.std_error == pytest.approx(1.0 / math.sqrt(3))
    assert math.isnan(BatchedEstimate.from_batches([], 10).mean)
    assert est.to_dict()["runs"] == 10


def test_seeds_are_reproducible_and_distinct():
    a, b = batch_seeds(7, 5), batch_seeds(7, 5)
    assert a == b and len(set(a)) == 5 and a != batch_seeds(8, 5)


def test_fidelity_array_matches_scalar():
    ages = np.array([0, 1, 2, 5])
    np.testing.assert_allclose(fidelity_array(ages, 3), [fidelity_of_age(int(a), 3) for a in ages])


@pytest.mark.parametrize("pol", [SwapAsapPolicy(False), SwapAsapPolicy(True), WaitForAllPolicy(), RandomPolicy()],
                         ids=["fixed", "dynamic", "wait-for-all", "random"])
def test_python_engine_matches_exact(pol):
    cfg = ChainConfig(3, 1, (0.5, 0.7), 0.6)
    ex = evaluate_exact(pol, cfg)
    rng = np.random.default_rng(0)
    eps = [simulate_episode(pol, cfg, rng) for _ in range(4000)]
    w = np.array([e.waiting_time for e in eps])
    a = np.array([e.final_age for e in eps])
    assert abs(w.mean() - ex["waiting"]) < 4 * w.std() / math.sqrt(len(w))
    assert abs(a.mean() - ex["age"]) < 4 * a.std() / math.sqrt(len(a)) + 1e-12


@pytest.mark.parametrize("dynamic", [False, True])
def test_direct_swap_asap_kernel_matches_exact(dynamic):
    cfg = ChainConfig(4, 2, (0.5, 0.8, 0.6), 0.7)
    pol = SwapAsapPolicy(dynamic)
    ex = evaluate_exact(pol, cfg)
    waits, ages, capped, _, _ = K.swap_asap_direct(4, np.array(cfg.p_link), cfg.p_swap, 2, pol.cutoff_array(cfg),
                                                   dynamic, True, 40000, 11, 10**6)
    assert not capped.any()
    assert abs(waits.mean() - ex["waiting"]) < 4 * waits.std() / math.sqrt(len(waits))
    assert abs(ages.mean() - ex["age"]) < 4 * ages.std() / math.sqrt(len(ages))


def test_evaluate_is_reproducible():
    cfg = ChainConfig.homogeneous(4, 2, 0.5, 0.5)
    a = evaluate_policy(SwapAsapPolicy(True), cfg, 5, 200, seed=3)
    b = evaluate_policy(SwapAsapPolicy(True), cfg, 5, 200, seed=3)
    c = evaluate_policy(SwapAsapPolicy(True), cfg, 5, 200, seed=4)
    assert a.waiting == b.waiting and a.waiting != c.waiting


def test_evaluate_agrees_with_exact():
    cfg = ChainConfig.homogeneous(4, 1, 0.6, 0.5)
    ev = evaluate_policy(SwapAsapPolicy(), cfg, 20, 500, seed=1)
    ex = evaluate_exact(SwapAsapPolicy(), cfg)
    assert within(ev.waiting, ex["waiting"]) and within(ev.age, ex["age"]) and within(ev.fidelity, ex["fidelity"])


def test_step_cap_excludes_and_warns():
    cfg = ChainConfig.homogeneous(3, 1, 0.05, 0.05)
    with pytest.warns(RuntimeWarning):
        ev = evaluate_policy(SwapAsapPolicy(), cfg, 2, 50, seed=0, step_cap=5)
    assert ev.capped > 0


def test_swap_asap_discards_at_the_cutoff():
    cfg = ChainConfig(5, 2, (0.9, 0.3, 0.3, 0.9), 0.5)
    ev = evaluate_policy(SwapAsapPolicy(), cfg, 2, 500, seed=0)
    np.testing.assert_allclose(ev.cutoffs, 2.0)


def test_improvement_factor():
    assert improvement_factor(8.0, 10.0) == pytest.approx(0.2)
    assert improvement_factor(8.0, 10.0, literal=True) == pytest.approx(-0.25)
    with pytest.raises(ValueError):
        improvement_factor(0.0, 1.0)


def test_end_age_variants_differ_only_by_overflow():
    cfg = ChainConfig(4, 1, (0.9, 0.5, 0.9), 0.5)
    agg = end_age_aggregates(SwapAsapPolicy(), cfg, 5, 400, seed=0)
    assert agg["capped"].mean <= cfg.m_star
    assert agg["summed"].mean >= agg["capped"].mean


def test_perfect_chain_takes_one_step(rng):
    cfg = ChainConfig.homogeneous(4, 2, 1.0, 1.0)
    ep = simulate_episode(SwapAsapPolicy(), cfg, rng)
    assert (ep.waiting_time, ep.final_age) == (1, 0)


def test_wait_for_all_simulation():
    cfg = ChainConfig.homogeneous(3, 0, 0.5, 0.5)
    ev = evaluate_policy(WaitForAllPolicy(), cfg, seed=0)
    assert (ev.waiting.batch_count, ev.waiting.runs_per_batch) == (50, 1000)
    assert abs(ev.waiting.mean - 8.0) <= 3 * ev.waiting.std_error


def test_improvement_factor_examples():
    assert improvement_factor(5.0, 5.0) == 0.0
    assert improvement_factor(2.5, 5.0) == 0.5
