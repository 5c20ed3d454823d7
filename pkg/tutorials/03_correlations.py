"""How strongly do a policy's decisions couple distant links?

Equal-time correlators compare requests on the two outer links at the same
decision; unequal-time correlators follow one link's request and another
link's activity across later decisions.

    python3 tutorials/03_correlations.py
"""

from repeaterlab import ChainConfig, RandomPolicy, SwapAsapPolicy
from repeaterlab.correlations import Observable, equal_time_correlator, unequal_time_correlator

cfg = ChainConfig.homogeneous(n=5, m_star=2, p_link=0.6, p_swap=0.5)
outer = (Observable.parse("request:1"), Observable.parse("request:4"))
for name, pol in (("swap-asap", SwapAsapPolicy(dynamic=True)), ("random", RandomPolicy())):
    est = equal_time_correlator(pol, cfg, outer, batches=20, samples=1000, seed=0)
    print(f"{name:>10} equal-time r[request:1, request:4] = {est.mean:.3f} ± {est.std_error:.3f}")

pair = (Observable.parse("request:2"), Observable.parse("active:2"))
lagged = unequal_time_correlator(SwapAsapPolicy(dynamic=True), cfg, pair, t=5, taus=range(0, 8),
                                 batches=20, runs=1000, seed=0)
for tau, est in lagged.items():
    print(f"tau={tau}: r = {est.mean:.3f} ± {est.std_error:.3f}")
