"""Repeater-chain configurations and states.

A state is stored sparsely as a sorted tuple of ``(i, j, age)`` triples with
``1 <= i < j <= n`` and ``0 <= age <= m_star``. Pairs that do not appear are
inactive (age -1 in the matrix picture). Every node has two memories, one
facing each direction, so a node holds at most one link to a higher-numbered
node and at most one link to a lower-numbered node.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

DEFAULT_STATE_LIMIT = 10**7


class StateSpaceTooLarge(RuntimeError):
    pass


class UnknownState(KeyError):
    pass


@dataclass(frozen=True)
class PauliChannelParams:
    """Coherence times (in time steps) of the per-memory Pauli channel.

    ``m1_star`` governs amplitude-damping-like noise and may be ``math.inf``;
    ``m2_star`` governs dephasing.
    """

    m1_star: float = math.inf
    m2_star: float = 10.0

    def __post_init__(self):
        if not (self.m1_star >= 1):
            raise ValueError(f"m1_star must be >= 1 or inf, got {self.m1_star}")
        if not (self.m2_star >= 1):
            raise ValueError(f"m2_star must be >= 1, got {self.m2_star}")
        if self.m2_star > 2 * self.m1_star:
            # the twirled channel would need a negative Z probability
            raise ValueError(f"m2_star must be <= 2 m1_star, got {self.m2_star} > 2*{self.m1_star}")

    @classmethod
    def dephasing(cls, m_star: int) -> "PauliChannelParams":
        """Pure dephasing with ``m2_star = 5 m_star``."""
        return cls(m1_star=math.inf, m2_star=5.0 * max(m_star, 1))


@dataclass(frozen=True)
class ChainConfig:
    n: int
    m_star: int
    p_link: tuple[float, ...]
    p_swap: float
    noise: PauliChannelParams | None = None
    allow_noop: bool = False
    # when False, a swap result older than m_star survives until the next aging step
    discard_overflow: bool = True

    def __post_init__(self):
        if isinstance(self.p_link, (int, float)):
            object.__setattr__(self, "p_link", (float(self.p_link),) * (self.n - 1))
        else:
            object.__setattr__(self, "p_link", tuple(float(p) for p in self.p_link))
        if self.n < 2:
            raise ValueError(f"need at least 2 nodes, got n={self.n}")
        if self.m_star < 0:
            raise ValueError(f"m_star must be >= 0, got {self.m_star}")
        if len(self.p_link) != self.n - 1:
            raise ValueError(f"expected {self.n - 1} link probabilities, got {len(self.p_link)}")
        for p in (*self.p_link, self.p_swap):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability out of range: {p}")
        if self.noise is None:
            object.__setattr__(self, "noise", PauliChannelParams.dephasing(self.m_star))

    @classmethod
    def homogeneous(cls, n: int, m_star: int, p_link: float, p_swap: float, **kw) -> "ChainConfig":
        return cls(n=n, m_star=m_star, p_link=(p_link,) * (n - 1), p_swap=p_swap, **kw)

    @property
    def is_homogeneous(self) -> bool:
        return len(set(self.p_link)) <= 1

    def replace(self, **changes) -> "ChainConfig":
        if "p_link" in changes and isinstance(changes["p_link"], (int, float)):
            changes["p_link"] = (float(changes["p_link"]),) * (changes.get("n", self.n) - 1)
        if "m_star" in changes and "noise" not in changes and self.noise == PauliChannelParams.dephasing(self.m_star):
            changes["noise"] = None
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m_star": self.m_star,
            "p_link": list(self.p_link),
            "p_swap": self.p_swap,
            "noise": {"m1_star": _enc_inf(self.noise.m1_star), "m2_star": _enc_inf(self.noise.m2_star)},
            "allow_noop": self.allow_noop,
            "discard_overflow": self.discard_overflow,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChainConfig":
        data = dict(data)
        p_link = data["p_link"]
        if isinstance(p_link, (int, float)):
            p_link = [p_link] * (data["n"] - 1)
        noise = data.get("noise")
        if isinstance(noise, dict):
            noise = PauliChannelParams(_dec_inf(noise["m1_star"]), _dec_inf(noise["m2_star"]))
        return cls(
            n=int(data["n"]),
            m_star=int(data["m_star"]),
            p_link=tuple(p_link),
            p_swap=float(data["p_swap"]),
            noise=noise,
            allow_noop=bool(data.get("allow_noop", False)),
            discard_overflow=bool(data.get("discard_overflow", True)),
        )


def _enc_inf(x: float):
    return "inf" if math.isinf(x) else x


def _dec_inf(x) -> float:
    return math.inf if x in ("inf", "Infinity", None) else float(x)


@dataclass(frozen=True, order=True)
class ChainState:
    links: tuple[tuple[int, int, int], ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(sorted(tuple(int(v) for v in t) for t in self.links)))

    @classmethod
    def of(cls, *triples: Sequence[int]) -> "ChainState":
        return cls(tuple(tuple(t) for t in triples))

    def age(self, i: int, j: int) -> int:
        """Age of link (i, j), or -1 if inactive."""
        if i > j:
            i, j = j, i
        for a, b, m in self.links:
            if a == i and b == j:
                return m
        return -1

    def ahead(self, v: int) -> tuple[int, int, int] | None:
        """The link held by node ``v``'s memory facing higher-numbered nodes."""
        for t in self.links:
            if t[0] == v:
                return t
        return None

    def behind(self, v: int) -> tuple[int, int, int] | None:
        for t in self.links:
            if t[1] == v:
                return t
        return None

    def to_matrix(self, n: int) -> np.ndarray:
        mat = -np.ones((n, n), dtype=int)
        for i, j, m in self.links:
            mat[i - 1, j - 1] = mat[j - 1, i - 1] = m
        return mat

    @classmethod
    def from_matrix(cls, mat) -> "ChainState":
        mat = np.asarray(mat)
        n = mat.shape[0]
        return cls(tuple((i + 1, j + 1, int(mat[i, j])) for i in range(n) for j in range(i + 1, n) if mat[i, j] >= 0))

    def to_json(self) -> str:
        return json.dumps([list(t) for t in self.links])

    @classmethod
    def from_json(cls, text: str) -> "ChainState":
        return cls(tuple(tuple(t) for t in json.loads(text)))

    def __len__(self):
        return len(self.links)

    def __iter__(self):
        return iter(self.links)


def _structure_ok(pairs: Iterable[tuple[int, int]], n: int) -> bool:
    ahead, behind = set(), set()
    pairs = list(pairs)
    for i, j in pairs:
        if not (1 <= i < j <= n):
            return False
        if i in ahead or j in behind:
            return False
        ahead.add(i)
        behind.add(j)
    for a in range(len(pairs)):
        i, j = pairs[a]
        for b in range(a + 1, len(pairs)):
            k, l = pairs[b]
            if i < k < j < l or k < i < l < j:
                return False
    return True


def validate_state(state: ChainState, config: ChainConfig) -> bool:
    pairs = [(i, j) for i, j, _ in state.links]
    if len(set(pairs)) != len(pairs):
        return False
    if any(not 0 <= m <= max_age(config) for _, _, m in state.links):
        return False
    return _structure_ok(pairs, config.n)


def max_age(config: ChainConfig) -> int:
    """Largest age a stored link can carry (above m_star only with deferred overflow)."""
    if config.discard_overflow:
        return config.m_star
    return (config.n - 1) * config.m_star


def is_terminal(state: ChainState, config: ChainConfig) -> bool:
    return state.age(1, config.n) >= 0


def _link_structures(n: int, limit: int):
    """All admissible link sets, as lists of (i, j), built node by node."""
    out = []
    count = 0

    def rec(v, pairs, behind_used):
        nonlocal count
        if v > n:
            out.append(tuple(pairs))
            count += 1
            if count > limit:
                raise StateSpaceTooLarge(f"more than {limit} link structures for n={n}")
            return
        rec(v + 1, pairs, behind_used)
        for j in range(v + 1, n + 1):
            if j in behind_used:
                continue
            if any(i < v < jj < j for i, jj in pairs):
                continue
            pairs.append((v, j))
            behind_used.add(j)
            rec(v + 1, pairs, behind_used)
            behind_used.discard(j)
            pairs.pop()

    rec(1, [], set())
    return out


def count_states(n: int, m_star: int, limit: int = DEFAULT_STATE_LIMIT) -> int:
    return sum((m_star + 1) ** len(s) for s in _link_structures(n, limit))


@lru_cache(maxsize=32)
def _enumerate(n: int, m_star: int, limit: int) -> tuple[ChainState, ...]:
    structures = _link_structures(n, limit)
    total = sum((m_star + 1) ** len(s) for s in structures)
    if total > limit:
        raise StateSpaceTooLarge(f"{total} states for n={n}, m_star={m_star} exceeds limit {limit}")
    states = []
    ages = range(m_star + 1)
    for pairs in structures:
        for combo in _product(ages, len(pairs)):
            states.append(tuple(sorted((i, j, m) for (i, j), m in zip(pairs, combo))))
    states.sort()
    return tuple(ChainState(s) for s in states)


def _product(values, k):
    if k == 0:
        yield ()
        return
    for head in values:
        for tail in _product(values, k - 1):
            yield (head, *tail)


def enumerate_states(config: ChainConfig, limit: int = DEFAULT_STATE_LIMIT) -> list[ChainState]:
    """Every valid state, in canonical (lexicographic) order; index 0 is empty."""
    return list(_enumerate(config.n, config.m_star, limit))


@lru_cache(maxsize=32)
def _index_map(n: int, m_star: int) -> dict:
    return {s: k for k, s in enumerate(_enumerate(n, m_star, DEFAULT_STATE_LIMIT))}


def canonical_index(state: ChainState, config: ChainConfig) -> int:
    try:
        return _index_map(config.n, config.m_star)[state]
    except KeyError:
        raise UnknownState(f"{state.links} is not a valid state for n={config.n}, m_star={config.m_star}") from None


def terminal_mask(config: ChainConfig) -> np.ndarray:
    return np.array([is_terminal(s, config) for s in enumerate_states(config)], dtype=bool)
