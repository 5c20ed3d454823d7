"""Exact policy evaluation and the optimal waiting time for small chains.

A policy turns the chain into an absorbing Markov chain over decisions. Swap
decisions take no time, so the decision chain is folded: the chain kept here
jumps from one counted step to the next, with any free decisions in between
absorbed into the jump. Its step count is then exactly the waiting time, and
the usual fundamental-matrix identities apply.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .chain import ChainConfig
from .noise import fidelity_of_age
from .policies import ActionTablePolicy, Policy
from .tables import CompiledChain, compile_chain
from .transitions import wait_update


class NotConverged(RuntimeError):
    pass


@dataclass(eq=False)
class PolicyMatrix:
    """Counted-step chain of one policy.

    ``ready`` lists the compiled state indices from which counted steps start;
    ``Q_block`` moves between them and ``R_block`` absorbs into ``terminal``.
    ``start_ready`` and ``start_absorbed`` give where the free decisions before
    the first counted step lead from each state (rows indexed like ``good``).
    """

    compiled: CompiledChain
    probs: np.ndarray
    kernel: np.ndarray
    cost: np.ndarray
    good: np.ndarray
    ready: np.ndarray
    terminal: np.ndarray
    Q_block: np.ndarray
    R_block: np.ndarray
    start_ready: np.ndarray
    start_absorbed: np.ndarray

    def fundamental(self) -> np.ndarray:
        return np.linalg.inv(np.eye(len(self.ready)) - self.Q_block)


def _sub_kernel(compiled: CompiledChain, probs: np.ndarray) -> np.ndarray:
    S, A, K = compiled.next_idx.shape
    out = np.zeros((S, S))
    w = probs[:, :, None] * compiled.prob
    valid = compiled.next_idx >= 0
    rows = np.broadcast_to(np.arange(S)[:, None, None], (S, A, K))
    np.add.at(out, (rows[valid], compiled.next_idx[valid]), w[valid])
    out[compiled.terminal] = 0.0
    return out


def _absorbing_states(kernel: np.ndarray, terminal: np.ndarray) -> np.ndarray:
    """Mask of non-terminal states that reach a terminal state with probability one."""
    S = kernel.shape[0]
    edges = kernel > 0
    # states with some path to a terminal state
    reach = terminal.copy()
    while True:
        new = reach | (edges & reach[None, :]).any(axis=1)
        if (new == reach).all():
            break
        reach = new
    stuck = ~reach
    # states with some path into a stuck state
    bad = stuck.copy()
    while True:
        new = bad | (edges & bad[None, :]).any(axis=1)
        if (new == bad).all():
            break
        bad = new
    return ~bad & ~terminal


def build_policy_matrix(policy: Policy | np.ndarray, config: ChainConfig) -> PolicyMatrix:
    """Counted-step absorbing chain of ``policy`` (a Policy or an (S, A) probability matrix)."""
    compiled = compile_chain(config)
    probs = policy.probabilities(compiled) if isinstance(policy, Policy) else np.asarray(policy, dtype=float)
    if probs.shape != (compiled.n_states, compiled.n_actions):
        raise ValueError(f"policy matrix shape {probs.shape} does not match the chain")
    if not np.allclose(probs.sum(axis=1), 1.0) or (probs < 0).any():
        raise ValueError("policy rows must be probability distributions")
    timed = compiled.timed
    free_k = _sub_kernel(compiled, probs * ~timed[None, :])
    timed_k = _sub_kernel(compiled, probs * timed[None, :])
    kernel = free_k + timed_k
    term = np.flatnonzero(compiled.terminal)
    kernel[term, term] = 1.0
    cost = (probs * timed[None, :]).sum(axis=1)
    cost[compiled.terminal] = 0.0

    good = np.flatnonzero(_absorbing_states(kernel, compiled.terminal))
    # expected visits under free decisions only, within the absorbing part
    Z = np.linalg.inv(np.eye(len(good)) - free_k[np.ix_(good, good)])
    free_abs = Z @ free_k[np.ix_(good, term)]
    H = Z * cost[good][None, :]
    keep = cost[good] > 0
    ready = good[keep]
    c_ready = cost[ready]
    T_rg = timed_k[np.ix_(ready, good)] / c_ready[:, None]
    T_re = timed_k[np.ix_(ready, term)] / c_ready[:, None]
    Q_block = T_rg @ H[:, keep]
    R_block = T_re + T_rg @ free_abs
    return PolicyMatrix(
        compiled=compiled,
        probs=probs,
        kernel=kernel,
        cost=cost,
        good=good,
        ready=ready,
        terminal=term,
        Q_block=Q_block,
        R_block=R_block,
        start_ready=H[:, keep],
        start_absorbed=free_abs,
    )


def _initial_rows(matrix: PolicyMatrix, initial) -> tuple[np.ndarray, np.ndarray] | None:
    """Ready and absorbed distributions reached from ``initial`` before any time passes."""
    S = matrix.compiled.n_states
    if initial is None:
        p0 = np.zeros(S)
        p0[0] = 1.0
    else:
        p0 = np.asarray(initial, dtype=float)
        if p0.shape != (S,):
            raise ValueError(f"initial distribution must have length {S}")
    on_terminal = p0[matrix.terminal]
    rest = p0.copy()
    rest[matrix.terminal] = 0.0
    pos = np.full(S, -1)
    pos[matrix.good] = np.arange(len(matrix.good))
    support = np.flatnonzero(rest > 0)
    if (pos[support] < 0).any():
        return None
    w = rest[support]
    return w @ matrix.start_ready[pos[support]], on_terminal + w @ matrix.start_absorbed[pos[support]]


def expected_waiting_exact(matrix: PolicyMatrix, initial=None) -> float:
    """Expected counted time to absorption; ``inf`` if absorption is not certain."""
    rows = _initial_rows(matrix, initial)
    if rows is None:
        return float("inf")
    p1, _ = rows
    if len(matrix.ready) == 0:
        return 0.0
    visits = np.linalg.solve((np.eye(len(matrix.ready)) - matrix.Q_block).T, p1)
    return float(visits.sum())


def waiting_by_cost_vector(matrix: PolicyMatrix, initial_state: int = 0) -> float:
    """Same quantity from the unfolded decision chain: solve (I - K) w = cost."""
    good = matrix.good
    if matrix.compiled.terminal[initial_state]:
        return 0.0
    if initial_state not in set(good.tolist()):
        return float("inf")
    K = matrix.kernel[np.ix_(good, good)]
    w = np.linalg.solve(np.eye(len(good)) - K, matrix.cost[good])
    return float(w[np.searchsorted(good, initial_state)])


def absorption_distribution(matrix: PolicyMatrix, initial=None) -> np.ndarray:
    """Probability of ending in each terminal state (ordered like ``matrix.terminal``)."""
    rows = _initial_rows(matrix, initial)
    if rows is None:
        raise ValueError("policy does not reach a terminal state with certainty")
    p1, absorbed = rows
    if len(matrix.ready) == 0:
        return absorbed
    visits = np.linalg.solve((np.eye(len(matrix.ready)) - matrix.Q_block).T, p1)
    return absorbed + visits @ matrix.R_block


def absorption_fidelity(matrix: PolicyMatrix, initial=None, config: ChainConfig | None = None) -> float:
    """Mean end-to-end fidelity at absorption."""
    config = config or matrix.compiled.config
    dist = absorption_distribution(matrix, initial)
    ages = matrix.compiled.end_age[matrix.terminal]
    return float(sum(p * fidelity_of_age(int(a), config.m_star) for p, a in zip(dist, ages)))


def absorption_mean_age(matrix: PolicyMatrix, initial=None) -> float:
    dist = absorption_distribution(matrix, initial)
    return float(dist @ matrix.compiled.end_age[matrix.terminal])


def evaluate_exact(policy: Policy, config: ChainConfig) -> dict:
    """Waiting time, mean end-to-end age and fidelity of a policy from the all-inactive state."""
    m = build_policy_matrix(policy, config)
    w = expected_waiting_exact(m)
    if not np.isfinite(w):
        return {"waiting": w, "age": float("nan"), "fidelity": float("nan")}
    return {"waiting": w, "age": absorption_mean_age(m), "fidelity": absorption_fidelity(m)}


def value_iteration_optimal(config: ChainConfig, tol: float = 1e-10, max_iter: int = 10**6):
    """Minimum expected waiting time over all policies, with a greedy optimal policy.

    Zero-time actions that leave the state unchanged are excluded; every other
    zero-time action removes links, so no free cycle remains.
    """
    compiled = compile_chain(config)
    cost = compiled.timed.astype(float)[None, :]
    blocked = compiled.self_loop
    nxt = np.where(compiled.next_idx >= 0, compiled.next_idx, 0)
    V = np.zeros(compiled.n_states)
    for it in range(max_iter):
        q = cost + (compiled.prob * V[nxt]).sum(axis=2)
        q[blocked] = np.inf
        new = q.min(axis=1)
        new[compiled.terminal] = 0.0
        delta = np.max(np.abs(new - V))
        V = new
        if delta < tol:
            break
    else:
        raise NotConverged(f"value iteration did not converge in {max_iter} sweeps")
    q = cost + (compiled.prob * V[nxt]).sum(axis=2)
    q[blocked] = np.inf
    greedy = np.argmin(q, axis=1)
    policy = ActionTablePolicy(config, greedy)
    value = expected_waiting_exact(build_policy_matrix(policy, config))
    return policy, value, V


def elementary_link_steady_state(actions, p_link: float, m_star: int) -> np.ndarray:
    """Stationary distribution over ages (-1..m_star) of one link under a per-age policy.

    ``actions[k]`` is 1 to request and 0 to wait in the state with age k-1.
    Every step takes one unit of time; waiting ages the link.
    """
    S = m_star + 2
    P = np.zeros((S, S))
    for k in range(S):
        if actions[k]:
            P[k, 1] += p_link
            P[k, 0] += 1.0 - p_link
        else:
            P[k, wait_update(k - 1, m_star) + 1] += 1.0
    # left eigenvector for eigenvalue 1, via the normalized null space of (P^T - I)
    A = np.vstack([P.T - np.eye(S), np.ones(S)])
    b = np.zeros(S + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    return pi


def dump_policy_matrix_csv(matrix: PolicyMatrix, path) -> None:
    """Write the counted-step chain as (from, to, probability) rows over state JSON."""
    states = matrix.compiled.states
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["from_state", "to_state", "probability"])
        for a, r in enumerate(matrix.ready):
            for b, r2 in enumerate(matrix.ready):
                if matrix.Q_block[a, b] > 0:
                    w.writerow([states[r].to_json(), states[r2].to_json(), repr(float(matrix.Q_block[a, b]))])
            for b, e in enumerate(matrix.terminal):
                if matrix.R_block[a, b] > 0:
                    w.writerow([states[r].to_json(), states[e].to_json(), repr(float(matrix.R_block[a, b]))])


__all__ = [
    "PolicyMatrix",
    "NotConverged",
    "build_policy_matrix",
    "expected_waiting_exact",
    "waiting_by_cost_vector",
    "absorption_distribution",
    "absorption_fidelity",
    "absorption_mean_age",
    "evaluate_exact",
    "value_iteration_optimal",
    "elementary_link_steady_state",
    "dump_policy_matrix_csv",
]
