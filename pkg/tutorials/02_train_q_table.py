"""Learning a policy with tabular Q-learning.

Trains on a four-node chain, checks the greedy policy against the exact
optimum, and estimates its waiting time by Monte Carlo in batches.

    python3 tutorials/02_train_q_table.py
"""

from repeaterlab import ChainConfig, Hyperparams, SwapAsapPolicy, evaluate_exact, evaluate_policy, train
from repeaterlab.exact import value_iteration_optimal
from repeaterlab.montecarlo import improvement_factor

cfg = ChainConfig.homogeneous(n=4, m_star=2, p_link=0.5, p_swap=0.5)
table = train(cfg, Hyperparams(episodes=200_000), reward_kind="waiting", seed=0)
learned = table.greedy_policy()

exact_learned = evaluate_exact(learned, cfg)["waiting"]
exact_sa = evaluate_exact(SwapAsapPolicy(dynamic=True), cfg)["waiting"]
_, optimum, _ = value_iteration_optimal(cfg)
print(f"exact waiting: learned {exact_learned:.3f}, swap-asap {exact_sa:.3f}, optimum {optimum:.3f}")
print(f"improvement over swap-asap: {improvement_factor(exact_learned, exact_sa):.1%}")

ev = evaluate_policy(learned, cfg, batches=50, runs_per_batch=1000, seed=1)
print(f"simulated: waiting {ev.waiting.mean:.3f} ± {ev.waiting.std_error:.3f}, "
      f"fidelity {ev.fidelity.mean:.4f} ± {ev.fidelity.std_error:.4f}")
