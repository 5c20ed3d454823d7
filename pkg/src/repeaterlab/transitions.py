"""Stochastic dynamics of the chain MDP.

One step applies, in order:

1. if the action requests any elementary link, every active link ages by one
   time step (links already at the cutoff are discarded);
2. each requested link frees the two memories it needs (discarding whatever
   they hold) and succeeds with its link probability, at age 0;
3. swaps resolve left to right, each reading the link set left by the
   previous ones.

A successful swap whose summed age exceeds m_star is discarded, unless the
config defers that check, in which case the link lives until the next aging.

Only steps that request at least one link count towards the waiting time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .actions import GlobalAction, validate_action
from .chain import ChainConfig, ChainState, is_terminal, validate_state


class InvalidTransition(ValueError):
    pass


@dataclass(frozen=True)
class StepOutcome:
    next_state: ChainState
    time_consumed: int
    probability: float = 1.0


def wait_update(age: int, m_star: int) -> int:
    if not -1 <= age <= m_star:
        raise ValueError(f"age {age} outside [-1, {m_star}]")
    if age == -1:
        return -1
    return -1 + ((age + 2) % (m_star + 2))


def swap_update(age1: int, age2: int, m_star: int, success: bool) -> int:
    """Age of the link produced by a swap, or -1 if none survives."""
    if age1 < 0 or age2 < 0:
        raise ValueError("swap needs two active parent links")
    if not success:
        return -1
    age = age1 + age2
    return age if age <= m_star else -1


def _merge(age1: int, age2: int, config: ChainConfig, ok: bool) -> int:
    if config.discard_overflow:
        return swap_update(age1, age2, config.m_star, ok)
    return age1 + age2 if ok else -1


def _check(state, action, config):
    if not validate_state(state, config):
        raise InvalidTransition(f"invalid state {state.links}")
    if not validate_action(action, config):
        raise InvalidTransition(f"invalid action {action}")


def _age_all(links: dict, m_star: int) -> dict:
    out = {}
    for pair, age in links.items():
        if age > m_star:
            continue
        new = wait_update(age, m_star)
        if new >= 0:
            out[pair] = new
    return out


def _free_memories(links: dict, i: int) -> None:
    """Drop whatever occupies node i's forward memory and node i+1's backward memory."""
    for pair in [p for p in links if p[0] == i or p[1] == i + 1]:
        del links[pair]


def _swap_parents(links: dict, v: int):
    left = next((p for p in links if p[1] == v), None)
    right = next((p for p in links if p[0] == v), None)
    return left, right


def step(state: ChainState, action: GlobalAction, config: ChainConfig, rng: np.random.Generator) -> StepOutcome:
    """Sample one transition."""
    _check(state, action, config)
    links = {(i, j): m for i, j, m in state.links}
    timed = action.consumes_time
    if timed:
        links = _age_all(links, config.m_star)
    for i in action.requests:
        _free_memories(links, i)
        if rng.random() < config.p_link[i - 1]:
            links[(i, i + 1)] = 0
    for v in action.swaps:
        left, right = _swap_parents(links, v)
        if left is not None and right is not None:
            ok = rng.random() < config.p_swap
            age = _merge(links.pop(left), links.pop(right), config, ok)
            if age >= 0:
                links[(left[0], right[1])] = age
        elif left is not None:
            del links[left]
        elif right is not None:
            del links[right]
    nxt = ChainState(tuple((i, j, m) for (i, j), m in links.items()))
    return StepOutcome(nxt, int(timed), 1.0)


def branch_outcomes(state: ChainState, action: GlobalAction, config: ChainConfig) -> list[StepOutcome]:
    """Every reachable next state with its probability (identical states merged)."""
    _check(state, action, config)
    links = {(i, j): m for i, j, m in state.links}
    timed = action.consumes_time
    if timed:
        links = _age_all(links, config.m_star)
    branches = [(links, 1.0)]
    for i in action.requests:
        p = config.p_link[i - 1]
        nxt = []
        for cur, w in branches:
            base = dict(cur)
            _free_memories(base, i)
            if p > 0:
                ok = dict(base)
                ok[(i, i + 1)] = 0
                nxt.append((ok, w * p))
            if p < 1:
                nxt.append((base, w * (1 - p)))
        branches = nxt
    for v in action.swaps:
        nxt = []
        for cur, w in branches:
            left, right = _swap_parents(cur, v)
            if left is None or right is None:
                base = dict(cur)
                for pair in (left, right):
                    if pair is not None:
                        del base[pair]
                nxt.append((base, w))
                continue
            for ok, pw in ((True, config.p_swap), (False, 1 - config.p_swap)):
                if pw == 0:
                    continue
                base = dict(cur)
                age = _merge(base.pop(left), base.pop(right), config, ok)
                if age >= 0:
                    base[(left[0], right[1])] = age
                nxt.append((base, w * pw))
        branches = nxt
    merged: dict[ChainState, float] = {}
    for cur, w in branches:
        s = ChainState(tuple((i, j, m) for (i, j), m in cur.items()))
        merged[s] = merged.get(s, 0.0) + w
    return [StepOutcome(s, int(timed), w) for s, w in merged.items()]


__all__ = [
    "StepOutcome",
    "InvalidTransition",
    "wait_update",
    "swap_update",
    "step",
    "branch_outcomes",
    "is_terminal",
]
