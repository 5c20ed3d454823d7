"""Compiled inner loops.

All kernels seed numba's own generator on entry, so a given seed reproduces
results bit for bit. Policies enter as two arrays: ``det[s]`` holds the
action of a deterministic row (-1 otherwise) and ``cdf[s]`` the cumulative
action distribution used when ``det[s] < 0``. Deterministic rows consume no
random numbers, which keeps streams aligned across kernels.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _pick(det, cdf, s):
    a = det[s]
    if a >= 0:
        return a
    u = np.random.random()
    row = cdf[s]
    for k in range(row.shape[0]):
        if u < row[k]:
            return k
    return row.shape[0] - 1


@njit(cache=True)
def _branch(next_idx, cum_prob, n_branch, s, a):
    nb = n_branch[s, a]
    u = np.random.random()
    for k in range(nb - 1):
        if u < cum_prob[s, a, k]:
            return next_idx[s, a, k]
    return next_idx[s, a, nb - 1]


@njit(cache=True)
def run_episodes(next_idx, cum_prob, n_branch, timed, terminal, end_age, discard_age,
                 det, cdf, start, runs, seed, decision_cap, time_cap):
    """Episodes from ``start`` until absorption.

    Returns counted waiting times, end-to-end ages, a capped flag per run and
    per-link (sum, count) of discard ages.
    """
    np.random.seed(seed)
    L = discard_age.shape[2]
    waits = np.zeros(runs, np.int64)
    ages = -np.ones(runs, np.int64)
    capped = np.zeros(runs, np.bool_)
    disc_sum = np.zeros(L)
    disc_cnt = np.zeros(L, np.int64)
    for r in range(runs):
        s = start
        t = 0
        d = 0
        while not terminal[s]:
            if d >= decision_cap or t >= time_cap:
                capped[r] = True
                break
            a = _pick(det, cdf, s)
            if timed[a]:
                t += 1
                for i in range(L):
                    g = discard_age[s, a, i]
                    if g >= 0:
                        disc_sum[i] += g
                        disc_cnt[i] += 1
            s = _branch(next_idx, cum_prob, n_branch, s, a)
            d += 1
        waits[r] = t
        if terminal[s]:
            ages[r] = end_age[s]
    return waits, ages, capped, disc_sum, disc_cnt


@njit(cache=True)
def record_trajectories(next_idx, cum_prob, n_branch, terminal, det, cdf, start, runs, length, seed):
    """State and action indices at decisions 0..length-1; restarts at ``start`` after absorption."""
    np.random.seed(seed)
    states = np.zeros((runs, length), np.int64)
    actions = np.zeros((runs, length), np.int64)
    for r in range(runs):
        s = start
        for k in range(length):
            if terminal[s]:
                s = start
            a = _pick(det, cdf, s)
            states[r, k] = s
            actions[r, k] = a
            s = _branch(next_idx, cum_prob, n_branch, s, a)
    return states, actions


@njit(cache=True)
def sample_actions(det, cdf, states, seed):
    np.random.seed(seed)
    out = np.zeros(states.shape[0], np.int64)
    for k in range(states.shape[0]):
        out[k] = _pick(det, cdf, states[k])
    return out


@njit(cache=True)
def _argmax_row(q, s):
    best = 0
    v = q[s, 0]
    for a in range(1, q.shape[1]):
        if q[s, a] > v:
            v = q[s, a]
            best = a
    return best


@njit(cache=True)
def _argmax_masked(q, mask, s):
    best = -1
    v = 0.0
    for a in range(q.shape[1]):
        if mask[s, a]:
            continue
        if best < 0 or q[s, a] > v:
            v = q[s, a]
            best = a
    return best


@njit(cache=True)
def train_q(q, next_idx, cum_prob, n_branch, terminal, reward, starts,
            alpha, gamma, greedy_prob, episodes, max_steps, seed, timed, self_loop, free_steps_cost):
    """Tabular Q-learning in place. ``reward[s']`` is paid on arriving in s'.

    With ``free_steps_cost`` False, a zero-time action that does not finish the
    episode earns nothing and is not discounted, so the learner sees counted
    time only; zero-time actions that change nothing are then never taken
    (their entries keep their initial value and the greedy choice skips them).
    """
    np.random.seed(seed)
    A = q.shape[1]
    n_starts = starts.shape[0]
    total_steps = 0
    for ep in range(episodes):
        s = starts[np.random.randint(n_starts)]
        for step in range(max_steps):
            if free_steps_cost:
                if np.random.random() < greedy_prob:
                    a = _argmax_row(q, s)
                else:
                    a = np.random.randint(A)
            else:
                if np.random.random() < greedy_prob:
                    a = _argmax_masked(q, self_loop, s)
                else:
                    a = np.random.randint(A)
                    while self_loop[s, a]:
                        a = np.random.randint(A)
            s2 = _branch(next_idx, cum_prob, n_branch, s, a)
            if terminal[s2]:
                best = 0.0
            elif free_steps_cost:
                best = q[s2, _argmax_row(q, s2)]
            else:
                best = q[s2, _argmax_masked(q, self_loop, s2)]
            if free_steps_cost or timed[a] or terminal[s2]:
                target = reward[s2] + gamma * best
            else:
                target = best
            q[s, a] += alpha * (target - q[s, a])
            total_steps += 1
            s = s2
            if terminal[s]:
                break
    return total_steps


@njit(cache=True)
def train_q_continuing(q, next_age, p_link, reward, alpha, gamma, greedy_prob, episodes, steps, seed):
    """Q-learning on a single elementary link whose every step takes time.

    States are ages shifted by one (0 = inactive). Action 0 waits, action 1
    requests. ``next_age[s]`` is the state after waiting.
    """
    np.random.seed(seed)
    S = q.shape[0]
    for ep in range(episodes):
        s = np.random.randint(S)
        for step in range(steps):
            if np.random.random() < greedy_prob:
                a = _argmax_row(q, s)
            else:
                a = np.random.randint(2)
            if a == 0:
                s2 = next_age[s]
            else:
                s2 = 1 if np.random.random() < p_link else 0
            q[s, a] += alpha * (reward[s2] + gamma * q[s2, _argmax_row(q, s2)] - q[s, a])
            s = s2


@njit(cache=True)
def link_activity(policy, next_age, p_link, runs, steps, burn_in, seed):
    """Fraction of steps (after burn-in) with the elementary link active, per run."""
    np.random.seed(seed)
    out = np.zeros(runs)
    for r in range(runs):
        s = 0
        active = 0
        for k in range(burn_in + steps):
            if policy[s] == 0:
                s = next_age[s]
            else:
                s = 1 if np.random.random() < p_link else 0
            if k >= burn_in and s > 0:
                active += 1
        out[r] = active / steps
    return out


# ---------------------------------------------------------------------------
# swap-asap directly on link arrays, for chains too long to enumerate


@njit(cache=True)
def _drop(v, ahead, behind, age):
    w = ahead[v]
    if w >= 0:
        behind[w] = -1
        ahead[v] = -1
        age[v] = -1


@njit(cache=True)
def _swap_at(v, ahead, behind, age, p_sw, m_star, discard_overflow):
    u = behind[v]
    w = ahead[v]
    if u >= 0 and w >= 0:
        total = age[u] + age[v]
        _drop(u, ahead, behind, age)
        _drop(v, ahead, behind, age)
        if np.random.random() < p_sw:
            if not (discard_overflow and total > m_star):
                ahead[u] = w
                behind[w] = u
                age[u] = total
    elif u >= 0:
        _drop(u, ahead, behind, age)
    elif w >= 0:
        _drop(v, ahead, behind, age)


@njit(cache=True)
def swap_asap_direct(n, p_link, p_sw, m_star, cutoffs, dynamic, discard_overflow,
                     runs, seed, time_cap):
    """Episodes of swap-asap on an n-node chain (0-based nodes, link i joins i and i+1).

    Swaps fire as zero-time decisions; a counted step requests every link whose
    memories are free and every elementary link older than its cutoff.
    """
    np.random.seed(seed)
    waits = np.zeros(runs, np.int64)
    ages = -np.ones(runs, np.int64)
    capped = np.zeros(runs, np.bool_)
    disc_sum = np.zeros(n - 1)
    disc_cnt = np.zeros(n - 1, np.int64)
    ahead = np.empty(n, np.int64)
    behind = np.empty(n, np.int64)
    age = np.empty(n, np.int64)
    elig = np.empty(n, np.int64)
    sel = np.empty(n, np.int64)
    req = np.empty(n - 1, np.bool_)
    for r in range(runs):
        ahead[:] = -1
        behind[:] = -1
        age[:] = -1
        t = 0
        while ahead[0] != n - 1:
            if t >= time_cap:
                capped[r] = True
                break
            ne = 0
            for v in range(1, n - 1):
                if ahead[v] >= 0 and behind[v] >= 0:
                    elig[ne] = v
                    ne += 1
            if ne > 0:
                ns = 0
                if dynamic:
                    pos = 0
                    for k in range(ne):
                        if k > 0 and ahead[elig[k - 1]] == elig[k]:
                            pos += 1
                        else:
                            pos = 0
                        if pos % 2 == 0:
                            sel[ns] = elig[k]
                            ns += 1
                else:
                    for k in range(ne):
                        sel[k] = elig[k]
                    ns = ne
                for k in range(ns):
                    _swap_at(sel[k], ahead, behind, age, p_sw, m_star, discard_overflow)
                continue
            t += 1
            for i in range(n - 1):
                elementary = ahead[i] == i + 1
                req[i] = (ahead[i] < 0 and behind[i + 1] < 0) or (elementary and age[i] > cutoffs[i])
                if elementary and (req[i] or age[i] >= m_star):
                    disc_sum[i] += min(age[i], m_star)
                    disc_cnt[i] += 1
            for v in range(n):
                if ahead[v] >= 0:
                    if age[v] >= m_star:
                        _drop(v, ahead, behind, age)
                    else:
                        age[v] += 1
            for i in range(n - 1):
                if req[i]:
                    _drop(i, ahead, behind, age)
                    if behind[i + 1] >= 0:
                        _drop(behind[i + 1], ahead, behind, age)
                    if np.random.random() < p_link[i]:
                        ahead[i] = i + 1
                        behind[i + 1] = i
                        age[i] = 0
        waits[r] = t
        if ahead[0] == n - 1:
            ages[r] = age[0]
    return waits, ages, capped, disc_sum, disc_cnt


# ---------------------------------------------------------------------------
# two-level nesting


@njit(cache=True)
def _segment_step(seg, s, l_next, l_cum, l_nb, l_timed, l_term, l_det, l_cdf, cap):
    """One counted step of a segment plus the free decisions around it."""
    did = False
    d = 0
    while not l_term[s] and d < cap:
        a = _pick(l_det[seg], l_cdf[seg], s)
        if l_timed[a]:
            if did:
                break
            did = True
        nb = l_nb[seg, s, a]
        u = np.random.random()
        nxt = l_next[seg, s, a, nb - 1]
        for k in range(nb - 1):
            if u < l_cum[seg, s, a, k]:
                nxt = l_next[seg, s, a, k]
                break
        s = nxt
        d += 1
    return s


@njit(cache=True)
def nested_episodes(l_next, l_cum, l_nb, l_timed, l_term, l_end_age, l_det, l_cdf, l_start,
                    u_term, u_end_age, u_struct, u_age_idx, u_free_idx, u_add_idx,
                    u_det, u_cdf, u_req, u_swap_only, s_next, s_cum, s_nb, u_start,
                    runs, seed, tick_cap, decision_cap):
    """Two-level episodes: segments build upper links on request, the upper policy joins them.

    One global tick passes whenever pending segments take a counted step.
    Upper links age once per tick; a finished segment becomes an upper link
    with its own end-to-end age and returns to the all-inactive state.
    """
    np.random.seed(seed)
    k_seg = l_next.shape[0]
    waits = np.zeros(runs, np.int64)
    ages = -np.ones(runs, np.int64)
    capped = np.zeros(runs, np.bool_)
    pending = np.zeros(k_seg, np.bool_)
    seg = np.zeros(k_seg, np.int64)
    for r in range(runs):
        us = u_start
        pending[:] = False
        seg[:] = l_start
        t = 0
        d = 0
        query = True
        while not u_term[us]:
            if t >= tick_cap or d >= decision_cap:
                capped[r] = True
                break
            if query:
                a = _pick(u_det, u_cdf, us)
                d += 1
                before = u_struct[us]
                for i in range(k_seg):
                    if u_req[a, i] and not pending[i]:
                        us = u_free_idx[us, i]
                        pending[i] = True
                        seg[i] = l_start
                sw = u_swap_only[a]
                if sw >= 0:
                    nb = s_nb[us, sw]
                    u = np.random.random()
                    nxt = s_next[us, sw, nb - 1]
                    for k in range(nb - 1):
                        if u < s_cum[us, sw, k]:
                            nxt = s_next[us, sw, k]
                            break
                    us = nxt
                if u_term[us]:
                    break
                if u_struct[us] != before:
                    continue
                query = False
            any_pending = False
            for i in range(k_seg):
                if pending[i]:
                    any_pending = True
            if not any_pending:
                # the policy's last choice changed nothing and no segment is working
                query = True
                continue
            t += 1
            before = u_struct[us]
            us = u_age_idx[us]
            for i in range(k_seg):
                if pending[i]:
                    s = _segment_step(i, seg[i], l_next, l_cum, l_nb, l_timed, l_term, l_det, l_cdf,
                                      decision_cap)
                    if l_term[s]:
                        us = u_add_idx[us, i, l_end_age[s]]
                        pending[i] = False
                        s = l_start
                    seg[i] = s
            if u_struct[us] != before:
                query = True
        waits[r] = t
        if u_term[us]:
            ages[r] = u_end_age[us]
    return waits, ages, capped
