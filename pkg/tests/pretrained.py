"""Q-tables shared by the acceptance tests, cached under tests/data.

Training is deterministic for a given seed, so a cached table is exactly
what ``train`` would return; it only saves time. Run this file directly to
(re)build every table.
"""

import sys
import time
from pathlib import Path

from repeaterlab.chain import ChainConfig
from repeaterlab.exact import evaluate_exact
from repeaterlab.io import ConfigMismatch, CorruptFile, load_qtable, save_qtable
from repeaterlab.nesting import effective_upper_config, split_chain
from repeaterlab.qlearning import Hyperparams, train

DATA = Path(__file__).parent / "data"

FIVE_NODE = ChainConfig.homogeneous(5, 2, 0.6, 0.5)
NEST_P = (0.4, 0.6, 0.8)
NEST_TOTAL, NEST_SEGMENT, NEST_M, NEST_PSW = 10, 4, 2, 0.5
UPPER_GAMMAS = (0.8, 0.99)


def cached_table(name, config, hyper, reward="waiting", seed=0):
    path = DATA / f"{name}.json"
    if path.exists():
        try:
            t = load_qtable(path, expect=config)
            if t.hyper == hyper and t.reward_kind == reward and t.seed == seed:
                return t
        except (ConfigMismatch, CorruptFile):
            pass
    t = train(config, hyper, reward, seed)
    DATA.mkdir(exist_ok=True)
    save_qtable(t, path)
    return t


def five_node_table():
    return cached_table("five_node_p0.6", FIVE_NODE, Hyperparams(episodes=500_000))


def nest_segments(p):
    return split_chain(NEST_TOTAL, NEST_SEGMENT, NEST_M, p, NEST_PSW)


def nest_lower_table(p):
    # segment tables reward young links, which keeps more of the upper chain alive
    return cached_table(f"nest_lower_p{p}", nest_segments(p)[0], Hyperparams(episodes=300_000), "fidelity")


def nest_upper_table(p):
    segs = nest_segments(p)
    low = nest_lower_table(p).greedy_policy()
    upper = effective_upper_config(segs, (low,) * len(segs), NEST_PSW)
    # upper episodes last hundreds to thousands of ticks, and no single discount trains well at every p;
    # keep the candidate whose greedy policy waits least on the chain it was trained for
    tables = [cached_table(f"nest_upper_p{p}_g{g}", upper, Hyperparams(episodes=300_000, gamma=g), "waiting", seed=1)
              for g in UPPER_GAMMAS]
    return min(tables, key=lambda t: evaluate_exact(t.greedy_policy(), upper)["waiting"])


if __name__ == "__main__":
    jobs = [("five-node", five_node_table)]
    for p in NEST_P:
        jobs += [(f"lower {p}", lambda p=p: nest_lower_table(p)), (f"upper {p}", lambda p=p: nest_upper_table(p))]
    for label, fn in jobs:
        t0 = time.time()
        fn()
        print(f"{label}: {time.time() - t0:.0f} s", flush=True)
    sys.exit(0)
