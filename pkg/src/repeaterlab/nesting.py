"""Two-level nesting: segment policies build links for a policy over segment ends.

A chain of k(n-1)+1 nodes is cut into k segments of n nodes. The upper chain
has k+1 nodes, one per segment boundary, and its elementary link i is built
by segment i. The rules:

* an upper request hands segment i the job of producing link i; the segment
  then runs its own policy from the all-inactive state, one counted step per
  global tick, and a second request for the same link is ignored while the
  job is pending;
* when a segment connects its ends, upper link i appears with the segment's
  end-to-end age and the segment goes idle until asked again;
* upper links age by one per tick and expire past the cutoff;
* the upper policy acts only when the upper link structure has changed, and
  its swaps take no time.

If the upper policy leaves nothing pending and nothing changes, it is simply
asked again, so a policy that idles forever ends up at the decision cap.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as K
from .actions import GlobalAction
from .chain import ChainConfig, ChainState, is_terminal, validate_state
from .exact import evaluate_exact
from .montecarlo import BatchedEstimate, batch_seeds
from .policies import Policy, policy_arrays
from .tables import compile_chain
from .transitions import step, wait_update


@dataclass(frozen=True)
class NestedConfig:
    segments: tuple[ChainConfig, ...]
    lower_policies: tuple[Policy, ...]
    upper_config: ChainConfig
    upper_policy: Policy

    def __post_init__(self):
        k = len(self.segments)
        if k < 1 or len(self.lower_policies) != k:
            raise ValueError("need one lower policy per segment")
        if self.upper_config.n != k + 1:
            raise ValueError(f"upper chain needs {k + 1} nodes, has {self.upper_config.n}")
        n = self.segments[0].n
        for s in self.segments:
            if s.n != n:
                raise ValueError("segments must have equal size")
            if s.m_star != self.upper_config.m_star:
                raise ValueError("segments and upper chain must share m_star")

    @property
    def k(self) -> int:
        return len(self.segments)

    @property
    def total_nodes(self) -> int:
        return self.k * (self.segments[0].n - 1) + 1

    def segment_nodes(self, i: int) -> tuple[int, int]:
        """First and last node (1-based, full chain) of segment i (0-based)."""
        step_ = self.segments[0].n - 1
        return i * step_ + 1, (i + 1) * step_ + 1


def split_chain(total_nodes: int, segment_nodes: int, m_star: int, p_link, p_swap: float) -> tuple[ChainConfig, ...]:
    """Cut a chain into equal segments; ``p_link`` is a scalar or one value per full-chain link."""
    if (total_nodes - 1) % (segment_nodes - 1):
        raise ValueError(f"{total_nodes} nodes do not split into {segment_nodes}-node segments")
    k = (total_nodes - 1) // (segment_nodes - 1)
    if np.isscalar(p_link):
        p_link = [float(p_link)] * (total_nodes - 1)
    p_link = list(p_link)
    if len(p_link) != total_nodes - 1:
        raise ValueError(f"expected {total_nodes - 1} link probabilities")
    L = segment_nodes - 1
    return tuple(ChainConfig(segment_nodes, m_star, tuple(p_link[i * L:(i + 1) * L]), p_swap) for i in range(k))


def effective_upper_config(segments, lower_policies, p_swap: float) -> ChainConfig:
    """Upper chain whose link i succeeds per tick with probability 1/(mean waiting of segment i).

    Used to train an upper Q-table; the nested simulation itself never reads
    these probabilities.
    """
    ps = []
    for cfg, pol in zip(segments, lower_policies):
        w = evaluate_exact(pol, cfg)["waiting"]
        ps.append(min(1.0, 1.0 / w))
    return ChainConfig(len(segments) + 1, segments[0].m_star, tuple(ps), p_swap)


# ---------------------------------------------------------------------------
# composite state and a reference stepper


@dataclass
class NestedState:
    upper: ChainState
    segments: list[ChainState]
    pending: list[bool]
    query: bool = True
    time: int = 0
    decisions: int = 0
    # the next counted action of each segment, already chosen by its policy
    staged: list = field(default_factory=list)


def initial_state(nc: NestedConfig) -> NestedState:
    return NestedState(ChainState(), [ChainState() for _ in range(nc.k)], [False] * nc.k,
                       staged=[None] * nc.k)


def _struct(s: ChainState):
    return tuple((i, j) for i, j, _ in s.links)


def _free(s: ChainState, i: int) -> ChainState:
    return ChainState(tuple(l for l in s.links if l[0] != i and l[1] != i + 1))


def _age_upper(s: ChainState, m_star: int) -> ChainState:
    out = []
    for i, j, m in s.links:
        a = wait_update(m, m_star)
        if a >= 0:
            out.append((i, j, a))
    return ChainState(tuple(out))


def _segment_tick(state: ChainState, staged, cfg: ChainConfig, policy: Policy, rng):
    """One counted step plus free decisions, stopping before the next counted action."""
    did = False
    while not is_terminal(state, cfg):
        a = staged if staged is not None else policy.decide(state, cfg, rng)
        staged = None
        if a.consumes_time:
            if did:
                return state, a
            did = True
        state = step(state, a, cfg, rng).next_state
    return state, None


def check_state(gs: NestedState, nc: NestedConfig) -> bool:
    return validate_state(gs.upper, nc.upper_config) and all(
        validate_state(s, c) for s, c in zip(gs.segments, nc.segments)
    )


def nested_step(gs: NestedState, nc: NestedConfig, rng: np.random.Generator, decision_cap: int = 10**6) -> tuple[NestedState, int]:
    """Upper decisions as needed, then one global tick. Returns (state, time elapsed)."""
    up = nc.upper_config
    while True:
        if is_terminal(gs.upper, up):
            return gs, 0
        if gs.query:
            if gs.decisions >= decision_cap:
                raise RuntimeError("nested episode exceeded the decision cap")
            a = nc.upper_policy.decide(gs.upper, up, rng)
            gs.decisions += 1
            before = _struct(gs.upper)
            for i in a.requests:
                if not gs.pending[i - 1]:
                    gs.upper = _free(gs.upper, i)
                    gs.pending[i - 1] = True
                    gs.segments[i - 1] = ChainState()
                    gs.staged[i - 1] = None
            if a.swaps:
                gs.upper = step(gs.upper, GlobalAction((), a.swaps), up, rng).next_state
            if is_terminal(gs.upper, up):
                return gs, 0
            if _struct(gs.upper) != before:
                continue
            gs.query = False
        if not any(gs.pending):
            gs.query = True
            continue
        break
    gs.time += 1
    before = _struct(gs.upper)
    gs.upper = _age_upper(gs.upper, up.m_star)
    for i in range(nc.k):
        if not gs.pending[i]:
            continue
        s, staged = _segment_tick(gs.segments[i], gs.staged[i], nc.segments[i], nc.lower_policies[i], rng)
        if is_terminal(s, nc.segments[i]):
            links = dict(((a, b), m) for a, b, m in gs.upper.links)
            links[(i + 1, i + 2)] = s.age(1, nc.segments[i].n)
            gs.upper = ChainState(tuple((a, b, m) for (a, b), m in links.items()))
            gs.pending[i] = False
            s, staged = ChainState(), None
        gs.segments[i] = s
        gs.staged[i] = staged
    if _struct(gs.upper) != before:
        gs.query = True
    return gs, 1


def simulate_nested_episode(nc: NestedConfig, rng: np.random.Generator, tick_cap: int = 10**6) -> tuple[int, int]:
    """(waiting time, end-to-end age) of one nested episode, stepping in Python."""
    gs = initial_state(nc)
    while not is_terminal(gs.upper, nc.upper_config):
        if gs.time >= tick_cap:
            raise RuntimeError("nested episode exceeded the tick cap")
        gs, _ = nested_step(gs, nc, rng)
    return gs.time, gs.upper.age(1, nc.upper_config.n)


# ---------------------------------------------------------------------------
# compiled simulation


def _upper_tables(up: ChainConfig):
    c = compile_chain(up)
    free_cfg = up.replace(allow_noop=True)
    cs = compile_chain(free_cfg)
    S, k, M = c.n_states, up.n - 1, up.m_star
    structs: dict = {}
    u_struct = np.array([structs.setdefault(_struct(s), len(structs)) for s in c.states], dtype=np.int64)
    u_age = np.array([c.index(_age_upper(s, M)) for s in c.states], dtype=np.int64)
    u_free = np.zeros((S, k), dtype=np.int64)
    u_add = -np.ones((S, k, M + 1), dtype=np.int64)
    for si, s in enumerate(c.states):
        for i in range(1, k + 1):
            u_free[si, i - 1] = c.index(_free(s, i))
            if all(l[0] != i and l[1] != i + 1 for l in s.links):
                for m in range(M + 1):
                    u_add[si, i - 1, m] = c.index(ChainState((*s.links, (i, i + 1, m))))
    # the noop-allowed table indexes the same states in the same order
    assert cs.states == c.states
    swap_only = np.array(
        [cs.action_index(GlobalAction((), a.swaps)) if a.swaps else -1 for a in c.actions], dtype=np.int64
    )
    return c, cs, u_struct, u_age, u_free, u_add, swap_only


def nested_simulate(nc: NestedConfig, batches: int = 50, runs: int = 1000, seed: int = 0,
                    tick_cap: int = 10**6, decision_cap: int = 10**7) -> tuple[BatchedEstimate, BatchedEstimate]:
    """Batched (waiting time, end-to-end age) of the nested scheme from all-inactive."""
    cfgs = nc.segments
    comp = [compile_chain(c) for c in cfgs]
    l_next = np.stack([c.next_idx for c in comp])
    l_cum = np.stack([c.cum_prob for c in comp])
    l_nb = np.stack([c.n_branch for c in comp])
    arrays = [policy_arrays(p.probabilities(c)) for p, c in zip(nc.lower_policies, comp)]
    l_det = np.stack([a[0] for a in arrays])
    l_cdf = np.stack([a[1] for a in arrays])
    c0 = comp[0]
    uc, us, u_struct, u_age, u_free, u_add, swap_only = _upper_tables(nc.upper_config)
    u_det, u_cdf = policy_arrays(nc.upper_policy.probabilities(uc))
    wm, am = [], []
    for s in batch_seeds(seed, batches):
        waits, ages, capped = K.nested_episodes(
            l_next, l_cum, l_nb, c0.timed, c0.terminal, c0.end_age, l_det, l_cdf, 0,
            uc.terminal, uc.end_age, u_struct, u_age, u_free, u_add,
            u_det, u_cdf, uc.request_flags, swap_only, us.next_idx, us.cum_prob, us.n_branch, 0,
            runs, s, tick_cap, decision_cap,
        )
        ok = ~capped
        if ok.any():
            wm.append(waits[ok].mean())
            am.append(ages[ok].mean())
    return BatchedEstimate.from_batches(wm, runs), BatchedEstimate.from_batches(am, runs)


__all__ = [
    "NestedConfig",
    "NestedState",
    "split_chain",
    "effective_upper_config",
    "initial_state",
    "check_state",
    "nested_step",
    "simulate_nested_episode",
    "nested_simulate",
]
