"""Pearson correlators between actions and link status.

Three observables are binary functions of a (state, action) pair: whether
the action requests a given elementary link, whether it swaps at a given
node, and whether a given elementary link is active in the state. Equal-time
correlators sample states uniformly from the non-terminal space; unequal-time
correlators follow trajectories from the all-inactive state and pair the
first observable at decision ``t`` with the second at decision ``t + tau``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .chain import ChainConfig
from .montecarlo import BatchedEstimate, batch_seeds
from .policies import Policy, policy_arrays
from .tables import CompiledChain, compile_chain

_KINDS = ("request", "swap", "active")


@dataclass(frozen=True)
class Observable:
    kind: str
    index: int

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"observable kind must be one of {_KINDS}, got {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "Observable":
        """``"request:2"``, ``"swap:3"`` or ``"active:1"``."""
        kind, _, idx = text.partition(":")
        return cls(kind.strip(), int(idx))

    def __str__(self):
        return f"{self.kind}:{self.index}"

    def check(self, config: ChainConfig) -> None:
        hi = config.n if self.kind == "swap" else config.n - 1
        if not 1 <= self.index <= hi:
            raise ValueError(f"{self} out of range for n={config.n}")

    def values(self, compiled: CompiledChain, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        if self.kind == "request":
            return compiled.request_flags[actions, self.index - 1].astype(float)
        if self.kind == "swap":
            return compiled.swap_flags[actions, self.index - 1].astype(float)
        return (compiled.link_age[states, self.index - 1] >= 0).astype(float)


def pearson(xs, ys) -> float:
    """|corr(x, y)|; nan when either input is constant."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("need two equal-length sequences of at least two values")
    sx, sy = x.std(), y.std()
    if sx == 0 or sy == 0:
        return math.nan
    r = abs(float(np.mean(x * y) - x.mean() * y.mean()) / (sx * sy))
    return min(r, 1.0)


def equal_time_correlator(policy: Policy, config: ChainConfig, pair: tuple[Observable, Observable],
                          batches: int = 50, samples: int = 1000, seed: int = 0) -> BatchedEstimate:
    """Correlator over uniformly drawn non-terminal states and the policy's action in each."""
    for o in pair:
        o.check(config)
    c = compile_chain(config)
    det, cdf = policy_arrays(policy.probabilities(c))
    pool = np.flatnonzero(~c.terminal)
    vals = []
    for s in batch_seeds(seed, batches):
        rng = np.random.default_rng(s)
        states = pool[rng.integers(len(pool), size=samples)].astype(np.int64)
        actions = K.sample_actions(det, cdf, states, s)
        vals.append(pearson(pair[0].values(c, states, actions), pair[1].values(c, states, actions)))
    return BatchedEstimate.from_batches(vals, samples)


def unequal_time_correlator(policy: Policy, config: ChainConfig, pair: tuple[Observable, Observable],
                            t: int = 5, taus=(0, 1, 2, 3, 4, 5), batches: int = 50, runs: int = 1000,
                            seed: int = 0) -> dict[int, BatchedEstimate]:
    """Correlator between the first observable at decision t and the second at t + tau.

    Time counts policy decisions from the all-inactive state; a run that
    reaches the end-to-end link restarts from all-inactive.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    taus = [int(x) for x in taus]
    if min(taus) < 0:
        raise ValueError("tau must be >= 0")
    for o in pair:
        o.check(config)
    c = compile_chain(config)
    det, cdf = policy_arrays(policy.probabilities(c))
    length = t + max(taus) + 1
    per_tau = {tau: [] for tau in taus}
    for s in batch_seeds(seed, batches):
        states, actions = K.record_trajectories(c.next_idx, c.cum_prob, c.n_branch, c.terminal,
                                                det, cdf, 0, runs, length, s)
        first = pair[0].values(c, states[:, t], actions[:, t])
        for tau in taus:
            second = pair[1].values(c, states[:, t + tau], actions[:, t + tau])
            per_tau[tau].append(pearson(first, second))
    return {tau: BatchedEstimate.from_batches(v, runs) for tau, v in per_tau.items()}


__all__ = ["Observable", "pearson", "equal_time_correlator", "unequal_time_correlator"]
