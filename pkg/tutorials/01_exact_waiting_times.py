"""Exact waiting times for small chains.

Builds the absorbing Markov chain induced by a policy and reads off the
expected time to an end-to-end link, then compares the swap-as-soon-as-possible
heuristics with the optimal policy found by value iteration.

    python3 tutorials/01_exact_waiting_times.py
"""

from repeaterlab import ChainConfig, SwapAsapPolicy, WaitForAllPolicy, evaluate_exact, value_iteration_optimal

# Three nodes, no memory: both links must appear in the same step.
bare = ChainConfig.homogeneous(n=3, m_star=0, p_link=0.5, p_swap=0.5)
print("wait-for-all, n=3, no memory:", evaluate_exact(WaitForAllPolicy(), bare)["waiting"])

# With memory a link can wait for its neighbour, and the policy choice starts to matter.
print(f"{'n':>2} {'p':>4} {'fixed':>8} {'dynamic':>8} {'optimal':>8}")
for n in (3, 4, 5):
    for p in (0.3, 0.6, 0.9):
        cfg = ChainConfig.homogeneous(n, m_star=2, p_link=p, p_swap=0.5)
        fixed = evaluate_exact(SwapAsapPolicy(dynamic=False), cfg)["waiting"]
        dynamic = evaluate_exact(SwapAsapPolicy(dynamic=True), cfg)["waiting"]
        _, best, _ = value_iteration_optimal(cfg)
        print(f"{n:>2} {p:>4} {fixed:8.3f} {dynamic:8.3f} {best:8.3f}")
