"""Policies: maps from chain states to global actions.

Every policy can act on a single state (``decide``) and can also be laid out
as an (S, A) matrix of action probabilities over a compiled chain, which is
what the exact solver and the compiled simulators consume.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .actions import GlobalAction, action_index, eligible_swap_nodes, enumerate_actions
from .chain import ChainConfig, ChainState
from .tables import CompiledChain, compile_chain


class PolicyMismatch(ValueError):
    pass


def _cutoffs(config: ChainConfig, cutoffs) -> tuple[int, ...]:
    if cutoffs is None:
        return (config.m_star,) * (config.n - 1)
    cutoffs = tuple(int(c) for c in cutoffs)
    if len(cutoffs) != config.n - 1:
        raise ValueError(f"expected {config.n - 1} cutoffs, got {len(cutoffs)}")
    if any(c < 0 for c in cutoffs):
        raise ValueError("cutoffs must be non-negative")
    return cutoffs


def _swap_runs(state: ChainState) -> list[list[int]]:
    """Eligible swap nodes grouped into chains joined end to end."""
    ahead = {i: j for i, j, _ in state.links}
    runs: list[list[int]] = []
    for v in sorted(eligible_swap_nodes(state)):
        if runs and ahead[runs[-1][-1]] == v:
            runs[-1].append(v)
        else:
            runs.append([v])
    return runs


def _refresh_requests(state: ChainState, config: ChainConfig, cutoffs) -> tuple[int, ...]:
    """Links whose memories are idle, plus elementary links older than their cutoff."""
    busy_ahead = {i for i, _, _ in state.links}
    busy_behind = {j for _, j, _ in state.links}
    out = []
    for i in range(1, config.n):
        age = state.age(i, i + 1)
        if (i not in busy_ahead and i + 1 not in busy_behind) or (age >= 0 and age > cutoffs[i - 1]):
            out.append(i)
    return tuple(out)


def _request_all(config: ChainConfig) -> GlobalAction:
    return GlobalAction(tuple(range(1, config.n)), ())


def swap_asap_fixed_decide(state: ChainState, config: ChainConfig, cutoffs: Sequence[int] | None = None) -> GlobalAction:
    """Swap everywhere possible, else (re)request links.

    Swaps happen in a decision of their own, before the next counted step, so
    fresh links are joined before they age. Adjacent swaps resolve left to
    right, which makes a chain of swaps all-or-nothing.
    """
    cutoffs = _cutoffs(config, cutoffs)
    nodes = eligible_swap_nodes(state)
    if nodes:
        return GlobalAction((), tuple(nodes))
    req = _refresh_requests(state, config, cutoffs)
    return GlobalAction(req, ()) if req else _request_all(config)


def swap_asap_dynamic_decide(state: ChainState, config: ChainConfig, cutoffs: Sequence[int] | None = None) -> GlobalAction:
    """Like the fixed variant, but each chain of swaps starts with every other node.

    The remaining nodes of a chain swap in the following decision, and only if
    their neighbours survived; a failure then costs only the links involved.
    """
    cutoffs = _cutoffs(config, cutoffs)
    runs = _swap_runs(state)
    if runs:
        return GlobalAction((), tuple(v for run in runs for v in run[::2]))
    req = _refresh_requests(state, config, cutoffs)
    return GlobalAction(req, ()) if req else _request_all(config)


def wait_for_all_decide(state: ChainState, config: ChainConfig) -> GlobalAction:
    """Keep requesting until every elementary link is up, then swap all at once."""
    n = config.n
    if all(state.age(i, i + 1) >= 0 for i in range(1, n)) and n > 2:
        return GlobalAction((), tuple(range(2, n)))
    # links at the cutoff would expire during this step anyway, so renew them now
    req = _refresh_requests(state, config, (config.m_star - 1,) * (n - 1))
    return GlobalAction(req, ()) if req else _request_all(config)


def random_decide(state: ChainState, config: ChainConfig, rng: np.random.Generator) -> GlobalAction:
    actions = enumerate_actions(config)
    return actions[int(rng.integers(len(actions)))]


def _check_table_config(table_config: ChainConfig, config: ChainConfig):
    if (table_config.n, table_config.m_star, table_config.allow_noop) != (config.n, config.m_star, config.allow_noop):
        raise PolicyMismatch(
            f"table built for n={table_config.n}, m_star={table_config.m_star}, "
            f"allow_noop={table_config.allow_noop}; got n={config.n}, m_star={config.m_star}"
        )


def tabular_decide(state: ChainState, qtable, config: ChainConfig) -> GlobalAction:
    """Greedy action of a Q-table; ties go to the lowest action index."""
    _check_table_config(qtable.config, config)
    compiled = compile_chain(qtable.config)
    row = qtable.values[compiled.index(state)]
    return compiled.actions[int(np.argmax(row))]


class Policy:
    kind = "abstract"
    deterministic = True

    def decide(self, state: ChainState, config: ChainConfig, rng: np.random.Generator | None = None) -> GlobalAction:
        raise NotImplementedError

    def probabilities(self, compiled: CompiledChain) -> np.ndarray:
        """(S, A) action probabilities over a compiled chain."""
        S, A = compiled.n_states, compiled.n_actions
        out = np.zeros((S, A))
        config = compiled.config
        for si, s in enumerate(compiled.states):
            if compiled.terminal[si]:
                out[si, 0] = 1.0
                continue
            out[si, action_index(self.decide(s, config), config)] = 1.0
        return out

    def descriptor(self) -> dict:
        return {"kind": self.kind}

    @property
    def label(self) -> str:
        return self.kind


class SwapAsapPolicy(Policy):
    def __init__(self, dynamic: bool = False, cutoffs: Sequence[int] | None = None):
        self.dynamic = bool(dynamic)
        self.cutoffs = None if cutoffs is None else tuple(int(c) for c in cutoffs)
        self.kind = "swap-asap-dynamic" if self.dynamic else "swap-asap-fixed"

    def decide(self, state, config, rng=None):
        if self.dynamic:
            return swap_asap_dynamic_decide(state, config, self.cutoffs)
        return swap_asap_fixed_decide(state, config, self.cutoffs)

    def descriptor(self):
        d = {"kind": self.kind}
        if self.cutoffs is not None:
            d["cutoffs"] = list(self.cutoffs)
        return d

    def cutoff_array(self, config: ChainConfig) -> np.ndarray:
        return np.array(_cutoffs(config, self.cutoffs), dtype=np.int64)


class WaitForAllPolicy(Policy):
    kind = "wait-for-all"

    def decide(self, state, config, rng=None):
        return wait_for_all_decide(state, config)


class RandomPolicy(Policy):
    kind = "random"
    deterministic = False

    def decide(self, state, config, rng=None):
        if rng is None:
            raise ValueError("the random policy needs an rng")
        return random_decide(state, config, rng)

    def probabilities(self, compiled):
        S, A = compiled.n_states, compiled.n_actions
        return np.full((S, A), 1.0 / A)


class TabularPolicy(Policy):
    """Greedy policy of a Q-table (or of any (S, A) score matrix with a config)."""

    kind = "tabular"

    def __init__(self, qtable):
        self.qtable = qtable

    def decide(self, state, config, rng=None):
        return tabular_decide(state, self.qtable, config)

    def probabilities(self, compiled):
        _check_table_config(self.qtable.config, compiled.config)
        values = self.qtable.values
        if values.shape != (compiled.n_states, compiled.n_actions):
            raise PolicyMismatch(f"table shape {values.shape} does not match the chain")
        out = np.zeros(values.shape)
        out[np.arange(values.shape[0]), np.argmax(values, axis=1)] = 1.0
        return out


class ActionTablePolicy(Policy):
    """Deterministic policy given as one action index per enumerated state."""

    kind = "action-table"

    def __init__(self, config: ChainConfig, action_indices):
        self.config = config
        self.action_indices = np.asarray(action_indices, dtype=np.int64)

    def decide(self, state, config, rng=None):
        _check_table_config(self.config, config)
        compiled = compile_chain(self.config)
        return compiled.actions[int(self.action_indices[compiled.index(state)])]

    def probabilities(self, compiled):
        _check_table_config(self.config, compiled.config)
        out = np.zeros((compiled.n_states, compiled.n_actions))
        out[np.arange(compiled.n_states), self.action_indices] = 1.0
        return out


def policy_arrays(probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a probability matrix into the (det, cdf) pair the kernels read."""
    det = np.where(probs.max(axis=1) == 1.0, probs.argmax(axis=1), -1).astype(np.int64)
    cdf = np.cumsum(probs, axis=1)
    cdf[:, -1] = 1.0
    return det, cdf


def policy_from_descriptor(desc: dict, config: ChainConfig | None = None) -> Policy:
    """Build a policy from ``{"kind": ..., "cutoffs": [...], "qtable": path}``."""
    kind = desc.get("kind")
    if kind in ("swap-asap-fixed", "swap-asap-dynamic"):
        return SwapAsapPolicy(dynamic=kind.endswith("dynamic"), cutoffs=desc.get("cutoffs"))
    if kind == "random":
        return RandomPolicy()
    if kind == "wait-for-all":
        return WaitForAllPolicy()
    if kind == "tabular":
        from .io import load_qtable

        path = desc.get("qtable")
        if not path:
            raise ValueError("tabular policy needs a 'qtable' path")
        return TabularPolicy(load_qtable(path, expect=config, transfer=bool(desc.get("transfer", False))))
    raise ValueError(f"unknown policy kind {kind!r}")


__all__ = [
    "Policy",
    "PolicyMismatch",
    "SwapAsapPolicy",
    "WaitForAllPolicy",
    "RandomPolicy",
    "TabularPolicy",
    "ActionTablePolicy",
    "swap_asap_fixed_decide",
    "swap_asap_dynamic_decide",
    "wait_for_all_decide",
    "random_decide",
    "tabular_decide",
    "policy_arrays",
    "policy_from_descriptor",
]
