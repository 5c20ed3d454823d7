"""Monte-Carlo evaluation of policies: waiting times, ages, fidelities, cutoffs.

Three engines share the same semantics. Chains small enough to enumerate run
through the compiled tables; swap-asap on long chains, or with swap results
allowed past the cutoff, runs directly on link arrays; anything else falls
back to the plain Python stepper. Every batch draws its own seed from a
``SeedSequence`` rooted at the caller's seed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .actions import GlobalAction
from .chain import ChainConfig, ChainState, count_states, is_terminal
from .noise import fidelity_of_age
from .policies import Policy, SwapAsapPolicy, policy_arrays
from .tables import compile_chain
from .transitions import step

DEFAULT_STEP_CAP = 10**6
# enumerating past this many states costs more than it saves
TABLE_STATE_LIMIT = 5_000


@dataclass
class EpisodeStats:
    waiting_time: int
    final_age: int
    trajectory: list | None = None
    discards: list[tuple[int, int]] = field(default_factory=list)
    capped: bool = False


@dataclass(frozen=True)
class BatchedEstimate:
    mean: float
    std_error: float
    batch_count: int
    runs_per_batch: int

    @classmethod
    def from_batches(cls, batch_means, runs_per_batch: int) -> "BatchedEstimate":
        x = np.asarray(batch_means, dtype=float)
        x = x[np.isfinite(x)]
        if len(x) == 0:
            return cls(math.nan, math.nan, 0, runs_per_batch)
        se = float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else math.nan
        return cls(float(x.mean()), se, len(x), runs_per_batch)

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std_error": self.std_error, "batches": self.batch_count, "runs": self.runs_per_batch}


@dataclass
class Evaluation:
    waiting: BatchedEstimate
    age: BatchedEstimate
    fidelity: BatchedEstimate
    capped: int
    cutoffs: np.ndarray  # mean discard age per elementary link, nan if none


def batch_seeds(seed: int, batches: int) -> list[int]:
    """Per-batch kernel seeds derived from one root seed."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(batches)]


def fidelity_array(ages: np.ndarray, m_star: int) -> np.ndarray:
    ages = np.asarray(ages, dtype=float)
    f = 0.5 * (1.0 + np.exp(-2.0 * ages / (5.0 * max(m_star, 1))))
    return np.where(ages == 0, 1.0, f)


def _discard_events(state: ChainState, action: GlobalAction, config: ChainConfig) -> list[tuple[int, int]]:
    if not action.consumes_time:
        return []
    out = []
    for i in range(1, config.n):
        age = state.age(i, i + 1)
        if age >= 0 and (i in action.requests or age >= config.m_star):
            out.append((i, min(age, config.m_star)))
    return out


def simulate_episode(
    policy: Policy,
    config: ChainConfig,
    rng: np.random.Generator,
    step_cap: int = DEFAULT_STEP_CAP,
    record: bool = False,
) -> EpisodeStats:
    """One episode from the all-inactive state, stepping in pure Python."""
    state = ChainState()
    t = 0
    traj = [] if record else None
    discards: list[tuple[int, int]] = []
    while not is_terminal(state, config):
        if t >= step_cap:
            return EpisodeStats(t, -1, traj, discards, capped=True)
        action = policy.decide(state, config, rng)
        discards.extend(_discard_events(state, action, config))
        out = step(state, action, config, rng)
        if record:
            traj.append((state, action, out.time_consumed))
        t += out.time_consumed
        state = out.next_state
    return EpisodeStats(t, state.age(1, config.n), traj, discards)


def _use_tables(config: ChainConfig) -> bool:
    if not config.discard_overflow:
        return False
    try:
        return count_states(config.n, config.m_star, limit=TABLE_STATE_LIMIT) <= TABLE_STATE_LIMIT
    except Exception:
        return False


def _run_batch(policy, config, runs, seed, step_cap):
    """(waits, ages, capped, discard sums, discard counts) for one batch."""
    if _use_tables(config):
        c = compile_chain(config)
        det, cdf = policy_arrays(policy.probabilities(c))
        return K.run_episodes(
            c.next_idx, c.cum_prob, c.n_branch, c.timed, c.terminal, c.end_age, c.discard_age,
            det, cdf, 0, runs, seed, 50 * step_cap, step_cap,
        )
    if isinstance(policy, SwapAsapPolicy):
        return K.swap_asap_direct(
            config.n, np.asarray(config.p_link, dtype=float), config.p_swap, config.m_star,
            policy.cutoff_array(config), policy.dynamic, config.discard_overflow, runs, seed, step_cap,
        )
    rng = np.random.default_rng(seed)
    waits = np.zeros(runs, np.int64)
    ages = -np.ones(runs, np.int64)
    capped = np.zeros(runs, bool)
    dsum = np.zeros(config.n - 1)
    dcnt = np.zeros(config.n - 1, np.int64)
    for r in range(runs):
        ep = simulate_episode(policy, config, rng, step_cap)
        waits[r], ages[r], capped[r] = ep.waiting_time, ep.final_age, ep.capped
        for i, a in ep.discards:
            dsum[i - 1] += a
            dcnt[i - 1] += 1
    return waits, ages, capped, dsum, dcnt


def evaluate_policy(
    policy: Policy,
    config: ChainConfig,
    batches: int = 50,
    runs_per_batch: int = 1000,
    seed: int = 0,
    step_cap: int = DEFAULT_STEP_CAP,
) -> Evaluation:
    """Batched waiting time, end-to-end age and fidelity from the all-inactive state.

    Capped episodes are left out of the means and counted in ``capped``.
    """
    wm, am, fm = [], [], []
    dsum = np.zeros(config.n - 1)
    dcnt = np.zeros(config.n - 1)
    n_capped = 0
    for s in batch_seeds(seed, batches):
        waits, ages, capped, ds, dc = _run_batch(policy, config, runs_per_batch, s, step_cap)
        ok = ~np.asarray(capped)
        n_capped += int((~ok).sum())
        dsum += ds
        dcnt += dc
        if ok.any():
            wm.append(waits[ok].mean())
            am.append(ages[ok].mean())
            fm.append(fidelity_array(ages[ok], config.m_star).mean())
    if n_capped:
        warnings.warn(f"{n_capped} episodes hit the step cap and were excluded", RuntimeWarning, stacklevel=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        cut = np.where(dcnt > 0, dsum / np.maximum(dcnt, 1), np.nan)
    return Evaluation(
        waiting=BatchedEstimate.from_batches(wm, runs_per_batch),
        age=BatchedEstimate.from_batches(am, runs_per_batch),
        fidelity=BatchedEstimate.from_batches(fm, runs_per_batch),
        capped=n_capped,
        cutoffs=cut,
    )


def improvement_factor(t_policy: float, t_baseline: float, literal: bool = False) -> float:
    """Relative saving of ``t_policy`` over ``t_baseline``.

    The default divides by the baseline, so a faster policy scores positive.
    ``literal=True`` gives (t_policy - t_baseline) / t_policy instead.
    """
    if t_policy <= 0 or t_baseline <= 0:
        raise ValueError("waiting times must be positive")
    if literal:
        return (t_policy - t_baseline) / t_policy
    return (t_baseline - t_policy) / t_baseline


def average_cutoff(policy: Policy, config: ChainConfig, runs: int = 10_000, seed: int = 0) -> np.ndarray:
    """Mean age at which each elementary link is thrown away (requested while active, or expired)."""
    return evaluate_policy(policy, config, batches=1, runs_per_batch=runs, seed=seed).cutoffs


def end_age_aggregates(policy: SwapAsapPolicy, config: ChainConfig, batches: int = 50,
                       runs_per_batch: int = 1000, seed: int = 0) -> dict[str, BatchedEstimate]:
    """End-to-end age of swap-asap under two readings of the age cap.

    ``capped``: a swap result older than m_star is discarded at once.
    ``summed``: swap results keep the sum of their parents' ages until the
    next aging step, so the delivered link may be older than m_star.
    """
    out = {}
    for name, overflow in (("capped", True), ("summed", False)):
        cfg = config.replace(discard_overflow=overflow)
        means = []
        for s in batch_seeds(seed, batches):
            _, ages, capped, _, _ = K.swap_asap_direct(
                cfg.n, np.asarray(cfg.p_link, dtype=float), cfg.p_swap, cfg.m_star,
                policy.cutoff_array(cfg), policy.dynamic, overflow, runs_per_batch, s, DEFAULT_STEP_CAP,
            )
            means.append(ages[~capped].mean())
        out[name] = BatchedEstimate.from_batches(means, runs_per_batch)
    return out


__all__ = [
    "EpisodeStats",
    "BatchedEstimate",
    "Evaluation",
    "batch_seeds",
    "fidelity_array",
    "simulate_episode",
    "evaluate_policy",
    "improvement_factor",
    "average_cutoff",
    "end_age_aggregates",
]
