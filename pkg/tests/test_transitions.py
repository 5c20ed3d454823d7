from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import sa_three_node_waiting
from repeaterlab.actions import GlobalAction, enumerate_actions
from repeaterlab.chain import ChainConfig, ChainState, enumerate_states, validate_state
from repeaterlab.transitions import InvalidTransition, branch_outcomes, step, swap_update, wait_update


def test_wait_update():
    assert [wait_update(a, 2) for a in (-1, 0, 1, 2)] == [-1, 1, 2, -1]
    assert wait_update(0, 0) == -1
    with pytest.raises(ValueError):
        wait_update(3, 2)


def test_swap_update():
    assert swap_update(1, 1, 2, True) == 2
    assert swap_update(2, 1, 2, True) == -1
    assert swap_update(0, 0, 2, False) == -1
    with pytest.raises(ValueError):
        swap_update(-1, 0, 2, True)


def test_request_ages_others_and_starts_fresh():
    cfg = ChainConfig.homogeneous(3, 2, 1.0, 1.0)
    out = step(ChainState.of((1, 2, 0)), GlobalAction((2,), ()), cfg, np.random.default_rng(0))
    assert out.next_state == ChainState.of((1, 2, 1), (2, 3, 0))
    assert out.time_consumed == 1


def test_expiry_at_cutoff():
    cfg = ChainConfig.homogeneous(3, 1, 0.0, 1.0)
    out = step(ChainState.of((1, 2, 1)), GlobalAction((2,), ()), cfg, np.random.default_rng(0))
    assert out.next_state == ChainState(())


def test_request_frees_memories():
    cfg = ChainConfig.homogeneous(3, 2, 0.0, 1.0)
    out = step(ChainState.of((1, 3, 0)), GlobalAction((1,), ()), cfg, np.random.default_rng(0))
    assert out.next_state == ChainState(())


def test_swap_is_free_and_adds_ages():
    cfg = ChainConfig.homogeneous(3, 2, 0.5, 1.0)
    out = step(ChainState.of((1, 2, 1), (2, 3, 0)), GlobalAction((), (2,)), cfg, np.random.default_rng(0))
    assert out.next_state == ChainState.of((1, 3, 1)) and out.time_consumed == 0


def test_swap_with_one_link_discards_it():
    cfg = ChainConfig.homogeneous(4, 2, 0.5, 1.0)
    out = step(ChainState.of((1, 2, 0)), GlobalAction((3,), (2,)), cfg, np.random.default_rng(0))
    assert ChainState.of((1, 2, 0)) != out.next_state
    assert all(link[:2] != (1, 2) for link in out.next_state.links)


def test_sequential_swaps():
    cfg = ChainConfig.homogeneous(4, 2, 0.5, 1.0)
    s = ChainState.of((1, 2, 0), (2, 3, 1), (3, 4, 0))
    out = branch_outcomes(s, GlobalAction((), (2, 3)), cfg)
    assert len(out) == 1 and out[0].next_state == ChainState.of((1, 4, 1))
    # swapping beyond the cutoff loses the pair
    s = ChainState.of((1, 2, 2), (2, 3, 1), (3, 4, 0))
    assert branch_outcomes(s, GlobalAction((), (2, 3)), cfg)[0].next_state == ChainState(())


def test_deferred_overflow():
    cfg = ChainConfig.homogeneous(3, 2, 0.5, 1.0, discard_overflow=False)
    out = branch_outcomes(ChainState.of((1, 2, 2), (2, 3, 2)), GlobalAction((), (2,)), cfg)
    assert out[0].next_state == ChainState.of((1, 3, 4))


def test_invalid_inputs():
    cfg = ChainConfig.homogeneous(3, 1, 0.5, 0.5)
    with pytest.raises(InvalidTransition):
        step(ChainState.of((1, 2, 5)), GlobalAction((1,), ()), cfg, np.random.default_rng(0))
    with pytest.raises(InvalidTransition):
        step(ChainState(()), GlobalAction((1,), (2,)), cfg, np.random.default_rng(0))


cfg_strategy = st.builds(
    lambda n, m, ps, p: ChainConfig.homogeneous(n, m, p, ps),
    st.integers(2, 4), st.integers(0, 2), st.sampled_from([0.0, 0.3, 1.0]), st.sampled_from([0.0, 0.5, 1.0]),
)


@given(cfg_strategy, st.data())
def test_branches_are_distributions(cfg, data):
    states = enumerate_states(cfg)
    s = data.draw(st.sampled_from(states))
    a = data.draw(st.sampled_from(enumerate_actions(cfg)))
    out = branch_outcomes(s, a, cfg)
    assert abs(sum(o.probability for o in out) - 1.0) < 1e-12
    assert len({o.next_state for o in out}) == len(out)
    assert all(validate_state(o.next_state, cfg) for o in out)
    assert all(o.time_consumed == int(a.consumes_time) for o in out)
    sampled = step(s, a, cfg, np.random.default_rng(data.draw(st.integers(0, 2**31))))
    assert sampled.next_state in {o.next_state for o in out}


def test_sampling_frequencies_match_branches():
    cfg = ChainConfig.homogeneous(3, 1, 0.4, 0.7)
    s, a = ChainState.of((1, 2, 0)), GlobalAction((2,), ())
    probs = {o.next_state: o.probability for o in branch_outcomes(s, a, cfg)}
    rng = np.random.default_rng(3)
    n = 20000
    counts = {}
    for _ in range(n):
        nxt = step(s, a, cfg, rng).next_state
        counts[nxt] = counts.get(nxt, 0) + 1
    for state, p in probs.items():
        assert abs(counts.get(state, 0) / n - p) < 4 * np.sqrt(p * (1 - p) / n) + 1e-9


def test_hand_built_oracle_value():
    assert sa_three_node_waiting(Fraction(1, 2), Fraction(1, 2)) == Fraction(48, 7)


def test_step_examples():
    rng = np.random.default_rng(0)
    cfg = ChainConfig.homogeneous(4, 2, 1.0, 1.0)
    out = step(ChainState(()), GlobalAction((1, 2, 3), ()), cfg, rng)
    assert out.next_state == ChainState.of((1, 2, 0), (2, 3, 0), (3, 4, 0)) and out.time_consumed == 1
    cfg = ChainConfig.homogeneous(3, 0, 0.5, 1.0)
    out = step(ChainState.of((1, 2, 0), (2, 3, 0)), GlobalAction((), (2,)), cfg, rng)
    assert out.next_state == ChainState.of((1, 3, 0)) and out.time_consumed == 0
    cfg = ChainConfig.homogeneous(3, 2, 0.5, 0.5)
    got = {o.next_state: o.probability for o in branch_outcomes(ChainState.of((1, 2, 2)), GlobalAction((2,), ()), cfg)}
    assert got == {ChainState.of((2, 3, 0)): 0.5, ChainState(()): 0.5}
    got = {o.next_state: o.probability for o in branch_outcomes(ChainState(()), GlobalAction((1,), ()), cfg)}
    assert got == {ChainState.of((1, 2, 0)): 0.5, ChainState(()): 0.5}


@given(cfg_strategy, st.data())
def test_swap_only_steps_keep_surviving_ages(cfg, data):
    s = data.draw(st.sampled_from(enumerate_states(cfg)))
    free = [a for a in enumerate_actions(cfg) if not a.consumes_time]
    if not free:
        return
    a = data.draw(st.sampled_from(free))
    touched = set(a.swaps)
    for o in branch_outcomes(s, a, cfg):
        assert o.time_consumed == 0
        for i, j, m in s.links:
            if i not in touched and j not in touched:
                assert o.next_state.age(i, j) == m
