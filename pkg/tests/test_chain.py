import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import brute_structures
from repeaterlab.chain import (
    ChainConfig,
    ChainState,
    StateSpaceTooLarge,
    UnknownState,
    canonical_index,
    count_states,
    enumerate_states,
    is_terminal,
    terminal_mask,
    validate_state,
)


def brute_count(n, m_star):
    return sum((m_star + 1) ** len(s) for s in brute_structures(n))


@pytest.mark.parametrize("n,m_star", [(2, 0), (2, 2), (3, 1), (3, 2), (4, 0), (4, 2), (5, 1), (5, 2)])
def test_counts_match_brute_force(n, m_star):
    assert count_states(n, m_star) == brute_count(n, m_star)
    cfg = ChainConfig.homogeneous(n, m_star, 0.5, 0.5)
    assert len(enumerate_states(cfg)) == brute_count(n, m_star)


def test_known_counts():
    # frozen from the brute-force oracle above
    assert [count_states(n, 2) for n in range(2, 9)] == [4, 19, 100, 562, 3304, 20071, 124996]
    assert count_states(3, 1) == 11
    assert count_states(2, 0) == 2


def test_enumeration_is_valid_and_unique():
    cfg = ChainConfig.homogeneous(4, 2, 0.5, 0.5)
    states = enumerate_states(cfg)
    assert len(set(states)) == len(states)
    assert all(validate_state(s, cfg) for s in states)
    assert states[0] == ChainState(())
    for k, s in enumerate(states):
        assert canonical_index(s, cfg) == k


def test_limit_guard():
    with pytest.raises(StateSpaceTooLarge):
        count_states(8, 2, limit=1000)
    with pytest.raises(StateSpaceTooLarge):
        enumerate_states(ChainConfig.homogeneous(7, 2, 0.5, 0.5), limit=1000)


def test_unknown_state():
    cfg = ChainConfig.homogeneous(3, 1, 0.5, 0.5)
    with pytest.raises(UnknownState):
        canonical_index(ChainState.of((1, 2, 5)), cfg)


def test_validate_examples():
    cfg = ChainConfig.homogeneous(4, 2, 0.5, 0.5)
    assert validate_state(ChainState.of((1, 2, 0), (2, 4, 1)), cfg)
    assert not validate_state(ChainState.of((1, 3, 0), (1, 2, 0)), cfg)  # two links ahead of node 1
    assert not validate_state(ChainState.of((1, 3, 0), (2, 4, 0)), cfg)  # crossing
    assert not validate_state(ChainState.of((1, 2, 3)), cfg)  # older than the cutoff
    assert not validate_state(ChainState.of((1, 5, 0)), cfg)  # no node 5


def test_terminal():
    cfg = ChainConfig.homogeneous(4, 2, 0.5, 0.5)
    assert is_terminal(ChainState.of((1, 4, 2)), cfg)
    assert not is_terminal(ChainState.of((1, 3, 0), (3, 4, 0)), cfg)
    mask = terminal_mask(cfg)
    # the end-to-end link, optionally with a nested (2, 3) link, at every age
    assert mask.sum() == 3 * (1 + 3)


def test_state_round_trips():
    s = ChainState.of((1, 2, 0), (2, 5, 1))
    assert ChainState.from_json(s.to_json()) == s
    assert ChainState.from_matrix(s.to_matrix(5)) == s
    m = s.to_matrix(5)
    assert m[0, 1] == 0 and m[1, 4] == 1 and m[0, 2] == -1


def test_config_validation_and_dict():
    with pytest.raises(ValueError):
        ChainConfig(3, 1, (0.5,), 0.5)
    with pytest.raises(ValueError):
        ChainConfig.homogeneous(3, -1, 0.5, 0.5)
    with pytest.raises(ValueError):
        ChainConfig.homogeneous(3, 1, 1.5, 0.5)
    cfg = ChainConfig(4, 2, (0.9, 0.3, 0.5), 0.5, allow_noop=True)
    assert ChainConfig.from_dict(cfg.to_dict()) == cfg


@st.composite
def random_links(draw):
    n = draw(st.integers(2, 6))
    m_star = draw(st.integers(0, 3))
    pairs = draw(st.lists(st.tuples(st.integers(1, n), st.integers(1, n)), max_size=5))
    links = {}
    for a, b in pairs:
        if a != b:
            links[(min(a, b), max(a, b))] = draw(st.integers(0, m_star + 1))
    return n, m_star, links


@given(random_links())
def test_validate_agrees_with_brute_force(case):
    n, m_star, links = case
    cfg = ChainConfig.homogeneous(n, m_star, 0.5, 0.5)
    state = ChainState(tuple((i, j, m) for (i, j), m in links.items()))
    admissible = {frozenset(s) for s in brute_structures(n)}
    expected = frozenset(links) in admissible and all(m <= m_star for m in links.values())
    assert validate_state(state, cfg) == expected
