"""Splitting a long chain into segments.

A ten-node chain becomes three four-node segments that share their boundary
nodes. Each segment runs its own policy; once a segment holds its end-to-end
link, that link becomes an elementary link of a small upper-level chain.

    python3 tutorials/04_nested_chains.py
"""

from repeaterlab import ChainConfig, SwapAsapPolicy, evaluate_policy
from repeaterlab.nesting import NestedConfig, effective_upper_config, nested_simulate, split_chain

p, p_swap = 0.8, 0.5
segments = split_chain(total_nodes=10, segment_nodes=4, m_star=2, p_link=p, p_swap=p_swap)
lower = tuple(SwapAsapPolicy() for _ in segments)
upper_cfg = effective_upper_config(segments, lower, p_swap)
print("segments:", [s.n for s in segments], "upper chain:", upper_cfg.n, "nodes, p_link", upper_cfg.p_link)

nested = NestedConfig(segments, lower, upper_cfg, SwapAsapPolicy())
waiting, age = nested_simulate(nested, batches=20, runs=200, seed=0)
print(f"nested swap-asap: waiting {waiting.mean:.1f} ± {waiting.std_error:.1f}")

flat = evaluate_policy(SwapAsapPolicy(dynamic=True), ChainConfig.homogeneous(10, 2, p, p_swap),
                       batches=20, runs_per_batch=200, seed=0)
print(f"flat swap-asap:   waiting {flat.waiting.mean:.1f} ± {flat.waiting.std_error:.1f}")
