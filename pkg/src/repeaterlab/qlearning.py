"""Tabular Q-learning over the chain MDP.

The training loop itself lives in a compiled kernel; the Python functions
here (``q_update``, ``select_action``) spell out the same rules one step at a
time and are what the tests pin down.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels as K
from .chain import ChainConfig, ChainState, is_terminal
from .policies import TabularPolicy
from .tables import compile_chain
from .transitions import wait_update

REWARD_KINDS = ("waiting", "fidelity")


@dataclass(frozen=True)
class Hyperparams:
    alpha: float = 0.01
    gamma: float = 0.8
    # probability of taking the greedy action while training
    greedy_prob: float = 0.15
    episodes: int = 500_000
    max_steps_per_episode: int = 10_000
    # charge and discount zero-time (swap-only) decisions like counted steps
    free_steps_cost: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if not 0.0 <= self.greedy_prob <= 1.0:
            raise ValueError(f"greedy_prob must be in [0, 1], got {self.greedy_prob}")
        if self.episodes < 0 or self.max_steps_per_episode < 1:
            raise ValueError("episodes must be >= 0 and max_steps_per_episode >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Hyperparams":
        return cls(**data)


@dataclass(eq=False)
class QTable:
    values: np.ndarray
    config: ChainConfig
    hyper: Hyperparams
    reward_kind: str = "waiting"
    episodes: int = 0
    seed: int | None = None

    def __post_init__(self):
        c = compile_chain(self.config)
        if self.values.shape != (c.n_states, c.n_actions):
            raise ValueError(f"table shape {self.values.shape} does not match ({c.n_states}, {c.n_actions})")

    def greedy_policy(self) -> TabularPolicy:
        return TabularPolicy(self)

    def greedy_actions(self) -> np.ndarray:
        return np.argmax(self.values, axis=1)


def reward_waiting(next_state: ChainState, config: ChainConfig) -> float:
    return 100.0 if is_terminal(next_state, config) else -1.0


def reward_fidelity(next_state: ChainState, config: ChainConfig) -> float:
    """100/(age+1) on reaching the end-to-end link; the shift keeps age 0 finite."""
    if is_terminal(next_state, config):
        return 100.0 / (next_state.age(1, config.n) + 1)
    return -1.0


def reward_vector(config: ChainConfig, kind: str = "waiting") -> np.ndarray:
    """Reward for arriving in each enumerated state."""
    if kind not in REWARD_KINDS:
        raise ValueError(f"unknown reward kind {kind!r}")
    fn = reward_waiting if kind == "waiting" else reward_fidelity
    return np.array([fn(s, config) for s in compile_chain(config).states])


def q_update(q: np.ndarray, state_idx: int, action_idx: int, reward: float, next_idx: int | None,
             hyper: Hyperparams) -> float:
    """One Bellman update in place; ``next_idx=None`` marks a terminal successor."""
    S, A = q.shape
    if not (0 <= state_idx < S and 0 <= action_idx < A) or (next_idx is not None and not 0 <= next_idx < S):
        raise IndexError("state or action index out of range")
    best = 0.0 if next_idx is None else float(q[next_idx].max())
    q[state_idx, action_idx] += hyper.alpha * (reward + hyper.gamma * best - q[state_idx, action_idx])
    return float(q[state_idx, action_idx])


def select_action(q: np.ndarray, state_idx: int, hyper: Hyperparams, rng: np.random.Generator) -> int:
    """Greedy (lowest index on ties) with probability ``greedy_prob``, else uniform."""
    if rng.random() < hyper.greedy_prob:
        return int(np.argmax(q[state_idx]))
    return int(rng.integers(q.shape[1]))


def train(config: ChainConfig, hyper: Hyperparams | None = None, reward_kind: str = "waiting",
          seed: int = 0, init: np.ndarray | None = None) -> QTable:
    """Train a Q-table; episodes start from uniformly drawn non-terminal states.

    By default only counted steps earn the -1 reward and the discount, so the
    learner minimizes waiting time rather than the number of decisions.
    """
    hyper = hyper or Hyperparams()
    c = compile_chain(config)
    reward = reward_vector(config, reward_kind)
    q = np.zeros((c.n_states, c.n_actions)) if init is None else np.array(init, dtype=float)
    starts = np.flatnonzero(~c.terminal).astype(np.int64)
    K.train_q(q, c.next_idx, c.cum_prob, c.n_branch, c.terminal, reward, starts,
              hyper.alpha, hyper.gamma, hyper.greedy_prob, hyper.episodes, hyper.max_steps_per_episode,
              _kernel_seed(seed), c.timed, c.self_loop, hyper.free_steps_cost)
    if not hyper.free_steps_cost and c.self_loop.any():
        # never-taken entries sit below every learned value, so the greedy policy avoids them
        q[c.self_loop] = min(q[~c.self_loop].min(), 0.0) - 1.0
    return QTable(q, config, hyper, reward_kind, hyper.episodes, seed)


def _kernel_seed(seed: int) -> int:
    return int(np.random.SeedSequence(seed).generate_state(1)[0])


# ---------------------------------------------------------------------------
# a single elementary link as a continuing task


def _link_next_age(m_star: int) -> np.ndarray:
    """State index after waiting, with state k meaning age k-1."""
    return np.array([wait_update(k - 1, m_star) + 1 for k in range(m_star + 2)], dtype=np.int64)


def train_elementary_link(m_star: int, p_link: float, hyper: Hyperparams | None = None, seed: int = 0,
                          steps_per_episode: int = 100) -> np.ndarray:
    """Q-values (ages -1..m_star) x (wait, request) for keeping one link alive.

    Every action takes one time step and the reward is +1 whenever the link
    is active afterwards, so the learned policy trades requesting against
    holding a link until it expires.
    """
    hyper = hyper or Hyperparams(episodes=20_000)
    q = np.zeros((m_star + 2, 2))
    reward = np.array([0.0] + [1.0] * (m_star + 1))
    K.train_q_continuing(q, _link_next_age(m_star), p_link, reward, hyper.alpha, hyper.gamma,
                         hyper.greedy_prob, hyper.episodes, steps_per_episode, _kernel_seed(seed))
    return q


def link_policy_activity(actions, m_star: int, p_link: float, runs: int = 50, steps: int = 1000,
                         burn_in: int = 100, seed: int = 0) -> np.ndarray:
    """Per-run fraction of time the link is active under a per-age wait(0)/request(1) policy."""
    return K.link_activity(np.asarray(actions, dtype=np.int64), _link_next_age(m_star), p_link,
                           runs, steps, burn_in, _kernel_seed(seed))


__all__ = [
    "Hyperparams",
    "QTable",
    "REWARD_KINDS",
    "reward_waiting",
    "reward_fidelity",
    "reward_vector",
    "q_update",
    "select_action",
    "train",
    "train_elementary_link",
    "link_policy_activity",
]
