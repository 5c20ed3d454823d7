"""The chain MDP compiled into dense arrays.

Every (state, action) pair is expanded once with ``branch_outcomes`` and the
result is stored as padded ``(next state index, cumulative probability)``
lists. Exact analysis, value iteration, Q-learning and the fast simulators
all read these arrays instead of re-deriving transitions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .actions import GlobalAction, enumerate_actions
from .chain import ChainConfig, ChainState, enumerate_states, is_terminal
from .transitions import branch_outcomes


@dataclass(frozen=True, eq=False)
class CompiledChain:
    config: ChainConfig
    states: tuple[ChainState, ...]
    actions: tuple[GlobalAction, ...]
    next_idx: np.ndarray  # (S, A, K) int32, padded with -1
    prob: np.ndarray  # (S, A, K) float64
    cum_prob: np.ndarray  # (S, A, K) float64, last valid entry is 1
    n_branch: np.ndarray  # (S, A) int32
    timed: np.ndarray  # (A,) bool, action requests at least one link
    terminal: np.ndarray  # (S,) bool
    end_age: np.ndarray  # (S,) age of the end-to-end link, -1 if none
    link_age: np.ndarray  # (S, n-1) age of each elementary link, -1 if inactive
    request_flags: np.ndarray  # (A, n-1) bool
    swap_flags: np.ndarray  # (A, n) bool
    self_loop: np.ndarray  # (S, A) bool, zero-time action leaving the state unchanged
    discard_age: np.ndarray  # (S, A, n-1) age at which each elementary link is discarded, -1 if kept
    state_index: dict

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def link_active(self) -> np.ndarray:
        return self.link_age >= 0

    def index(self, state: ChainState) -> int:
        return self.state_index[state]

    def action_index(self, action: GlobalAction) -> int:
        return self.actions.index(action)

    def transition_matrix(self, action: int) -> np.ndarray:
        """Dense (S, S) matrix of one action; rows sum to one."""
        S = self.n_states
        out = np.zeros((S, S))
        k = self.n_branch[:, action]
        for s in range(S):
            np.add.at(out[s], self.next_idx[s, action, : k[s]], self.prob[s, action, : k[s]])
        return out


def _discard_ages(state: ChainState, action: GlobalAction, m_star: int, n: int) -> list[int]:
    """Elementary links lost to a request or to expiry during a counted step."""
    out = [-1] * (n - 1)
    if not action.consumes_time:
        return out
    for i in range(1, n):
        age = state.age(i, i + 1)
        if age < 0:
            continue
        if i in action.requests or age >= m_star:
            out[i - 1] = min(age, m_star)
    return out


@lru_cache(maxsize=16)
def compile_chain(config: ChainConfig) -> CompiledChain:
    """Build (and cache) the dense transition tables of ``config``."""
    if not config.discard_overflow:
        raise ValueError("deferred swap overflow leaves the finite state space; use the direct simulator")
    states = tuple(enumerate_states(config))
    actions = tuple(enumerate_actions(config))
    index = {s: i for i, s in enumerate(states)}
    S, A, n = len(states), len(actions), config.n

    rows = []
    K = 1
    for s in states:
        row = []
        for a in actions:
            outs = branch_outcomes(s, a, config)
            row.append(outs)
            K = max(K, len(outs))
        rows.append(row)

    next_idx = -np.ones((S, A, K), dtype=np.int32)
    prob = np.zeros((S, A, K))
    n_branch = np.zeros((S, A), dtype=np.int32)
    self_loop = np.zeros((S, A), dtype=bool)
    discard_age = -np.ones((S, A, n - 1), dtype=np.int32)
    for si, row in enumerate(rows):
        for ai, outs in enumerate(row):
            n_branch[si, ai] = len(outs)
            for k, o in enumerate(outs):
                next_idx[si, ai, k] = index[o.next_state]
                prob[si, ai, k] = o.probability
            a = actions[ai]
            if not a.consumes_time and len(outs) == 1 and outs[0].next_state == states[si]:
                self_loop[si, ai] = True
            discard_age[si, ai] = _discard_ages(states[si], a, config.m_star, n)
    cum_prob = np.cumsum(prob, axis=2)
    # guard the sampler against rounding: the last real branch always closes at 1
    for si in range(S):
        for ai in range(A):
            cum_prob[si, ai, n_branch[si, ai] - 1 :] = 1.0

    link_age = -np.ones((S, n - 1), dtype=np.int32)
    end_age = -np.ones(S, dtype=np.int32)
    for si, s in enumerate(states):
        for i in range(1, n):
            link_age[si, i - 1] = s.age(i, i + 1)
        end_age[si] = s.age(1, n)

    return CompiledChain(
        config=config,
        states=states,
        actions=actions,
        next_idx=next_idx,
        prob=prob,
        cum_prob=cum_prob,
        n_branch=n_branch,
        timed=np.array([a.consumes_time for a in actions], dtype=bool),
        terminal=np.array([is_terminal(s, config) for s in states], dtype=bool),
        end_age=end_age,
        link_age=link_age,
        request_flags=np.array([a.request_flags(n) for a in actions], dtype=bool).reshape(A, n - 1),
        swap_flags=np.array([a.swap_flags(n) for a in actions], dtype=bool).reshape(A, n),
        self_loop=self_loop,
        discard_age=discard_age,
        state_index=index,
    )


def decision_kernel(compiled: CompiledChain, policy_probs: np.ndarray) -> np.ndarray:
    """Row-stochastic (S, S) matrix of one policy decision; terminal rows absorb."""
    S, A, K = compiled.next_idx.shape
    out = np.zeros((S, S))
    w = policy_probs[:, :, None] * compiled.prob
    valid = compiled.next_idx >= 0
    rows = np.broadcast_to(np.arange(S)[:, None, None], (S, A, K))
    np.add.at(out, (rows[valid], compiled.next_idx[valid]), w[valid])
    term = np.flatnonzero(compiled.terminal)
    out[term] = 0.0
    out[term, term] = 1.0
    return out


__all__ = ["CompiledChain", "compile_chain", "decision_kernel"]
