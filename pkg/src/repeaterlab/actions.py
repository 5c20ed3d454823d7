"""Global actions: per-link requests and per-node swaps."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache

from .chain import ChainConfig, ChainState


@dataclass(frozen=True)
class GlobalAction:
    """Elementary-link requests (link ``i`` joins nodes ``i`` and ``i+1``) and swap nodes.

    Both fields are sorted tuples of 1-based indices. Links not requested wait.
    """

    requests: tuple[int, ...] = ()
    swaps: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "requests", tuple(sorted(set(int(i) for i in self.requests))))
        object.__setattr__(self, "swaps", tuple(sorted(set(int(v) for v in self.swaps))))

    @classmethod
    def from_flags(cls, request, swap) -> "GlobalAction":
        """From boolean arrays indexed by link (length n-1) and node (length n)."""
        return cls(
            tuple(i + 1 for i, r in enumerate(request) if r),
            tuple(v + 1 for v, s in enumerate(swap) if s),
        )

    def request_flags(self, n: int) -> tuple[bool, ...]:
        return tuple(i in self.requests for i in range(1, n))

    def swap_flags(self, n: int) -> tuple[bool, ...]:
        return tuple(v in self.swaps for v in range(1, n + 1))

    @property
    def consumes_time(self) -> bool:
        return bool(self.requests)

    @property
    def is_noop(self) -> bool:
        return not self.requests and not self.swaps

    def to_json(self) -> str:
        return json.dumps({"request": list(self.requests), "swap": list(self.swaps)})

    @classmethod
    def from_json(cls, text: str) -> "GlobalAction":
        data = json.loads(text)
        return cls(tuple(data.get("request", ())), tuple(data.get("swap", ())))

    def __str__(self):
        n = max((*self.requests, *(v - 1 for v in self.swaps), 0)) + 1
        parts = []
        for i in range(1, n + 1):
            if i > 1 and i in self.swaps:
                parts.append("Rsw")
            if i < n:
                parts.append("Rl" if i in self.requests else "W")
        return " ".join(parts)


def validate_action(action: GlobalAction, config: ChainConfig) -> bool:
    n = config.n
    if any(not 1 <= i <= n - 1 for i in action.requests):
        return False
    # end nodes have a single memory and cannot swap
    if any(not 2 <= v <= n - 1 for v in action.swaps):
        return False
    for v in action.swaps:
        if v - 1 in action.requests or v in action.requests:
            return False
    if action.is_noop and not config.allow_noop:
        return False
    return True


@lru_cache(maxsize=64)
def _enumerate(n: int, allow_noop: bool) -> tuple[GlobalAction, ...]:
    interior = range(2, n)
    out = []
    for k in range(0, n - 1):
        for swaps in itertools.combinations(interior, k):
            blocked = {v - 1 for v in swaps} | set(swaps)
            free = [i for i in range(1, n) if i not in blocked]
            for r in range(len(free) + 1):
                for req in itertools.combinations(free, r):
                    a = GlobalAction(req, swaps)
                    if a.is_noop and not allow_noop:
                        continue
                    out.append(a)
    # index 0 is "request every link", a safe default for untrained table rows
    out.sort(key=lambda a: (a.swaps, -len(a.requests), a.requests))
    return tuple(out)


def enumerate_actions(config: ChainConfig) -> list[GlobalAction]:
    """Legal actions in canonical order: by swap set, then larger request sets first."""
    return list(_enumerate(config.n, config.allow_noop))


@lru_cache(maxsize=64)
def _action_index(n: int, allow_noop: bool) -> dict:
    return {a: k for k, a in enumerate(_enumerate(n, allow_noop))}


def action_index(action: GlobalAction, config: ChainConfig) -> int:
    try:
        return _action_index(config.n, config.allow_noop)[action]
    except KeyError:
        raise KeyError(f"illegal action {action} for n={config.n}") from None


def eligible_swap_nodes(state: ChainState) -> set[int]:
    """Nodes holding an active link on both sides."""
    lefts = {i for i, _, _ in state.links}
    rights = {j for _, j, _ in state.links}
    return lefts & rights


def free_links(state: ChainState, n: int) -> list[int]:
    """Elementary links whose two memories are both idle."""
    busy_ahead = {i for i, _, _ in state.links}
    busy_behind = {j for _, j, _ in state.links}
    return [i for i in range(1, n) if i not in busy_ahead and i + 1 not in busy_behind]
