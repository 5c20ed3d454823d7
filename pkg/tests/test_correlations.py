import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from repeaterlab.chain import ChainConfig
from repeaterlab.correlations import Observable, equal_time_correlator, pearson, unequal_time_correlator
from repeaterlab.policies import RandomPolicy, SwapAsapPolicy


def test_observable_parsing():
    o = Observable.parse("swap:3")
    assert (o.kind, o.index, str(o)) == ("swap", 3, "swap:3")
    with pytest.raises(ValueError):
        Observable.parse("fly:1")
    with pytest.raises(ValueError):
        Observable("request", 4).check(ChainConfig.homogeneous(4, 1, 0.5, 0.5))


def test_pearson_basics():
    assert pearson([0, 1, 0, 1], [0, 1, 0, 1]) == pytest.approx(1.0)
    assert pearson([0, 1, 0, 1], [1, 0, 1, 0]) == pytest.approx(1.0)
    assert math.isnan(pearson([1, 1, 1], [0, 1, 0]))
    with pytest.raises(ValueError):
        pearson([1, 2], [1, 2, 3])


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=3, max_size=50))
def test_pearson_properties(pairs):
    x, y = np.array(pairs).T
    r = pearson(x, y)
    if np.isnan(r):
        assert x.std() == 0 or y.std() == 0
    else:
        assert 0.0 <= r <= 1.0
        assert r == pytest.approx(pearson(y, x))
        assert r == pytest.approx(abs(np.corrcoef(x, y)[0, 1]))


def test_random_two_link_offset():
    # five equally likely actions, two of which request each link and one both: r = 1/6
    cfg = ChainConfig.homogeneous(3, 1, 0.5, 0.5, allow_noop=True)
    est = equal_time_correlator(RandomPolicy(), cfg, (Observable("request", 1), Observable("request", 2)),
                                batches=20, samples=2000, seed=0)
    assert abs(est.mean - 1 / 6) < 4 * est.std_error


def test_deterministic_policy_links_actions_to_state():
    cfg = ChainConfig.homogeneous(3, 1, 0.5, 0.5)
    # swap-asap requests link 1 exactly when it is not active, or stale
    est = equal_time_correlator(SwapAsapPolicy(), cfg, (Observable("request", 1), Observable("active", 1)),
                                batches=10, samples=500, seed=0)
    assert est.mean > 0.3


def test_unequal_time_shape_and_reproducibility():
    cfg = ChainConfig.homogeneous(4, 1, 0.6, 0.5)
    pair = (Observable("request", 1), Observable("request", 1))
    a = unequal_time_correlator(SwapAsapPolicy(), cfg, pair, t=3, taus=(0, 2), batches=5, runs=300, seed=1)
    b = unequal_time_correlator(SwapAsapPolicy(), cfg, pair, t=3, taus=(0, 2), batches=5, runs=300, seed=1)
    assert set(a) == {0, 2} and a[0] == b[0]
    assert a[0].mean == pytest.approx(1.0)
    with pytest.raises(ValueError):
        unequal_time_correlator(SwapAsapPolicy(), cfg, pair, t=0)


def test_independent_coins_are_uncorrelated():
    rng = np.random.default_rng(4)
    rs = [pearson(rng.integers(2, size=1000), rng.integers(2, size=1000)) for _ in range(50)]
    # |r| of independent samples has mean sqrt(2 / (pi N))
    assert abs(np.mean(rs) - math.sqrt(2 / (math.pi * 1000))) < 4 * np.std(rs) / math.sqrt(50)


def test_lag_zero_matches_trajectory_pairs():
    from repeaterlab import _kernels as K
    from repeaterlab.montecarlo import batch_seeds
    from repeaterlab.policies import policy_arrays
    from repeaterlab.tables import compile_chain

    cfg = ChainConfig.homogeneous(4, 1, 0.6, 0.5)
    pair = (Observable("request", 2), Observable("active", 2))
    got = unequal_time_correlator(SwapAsapPolicy(), cfg, pair, t=4, taus=(0,), batches=3, runs=200, seed=8)[0]
    c = compile_chain(cfg)
    det, cdf = policy_arrays(SwapAsapPolicy().probabilities(c))
    vals = []
    for s in batch_seeds(8, 3):
        st_, ac = K.record_trajectories(c.next_idx, c.cum_prob, c.n_branch, c.terminal, det, cdf, 0, 200, 5, s)
        vals.append(pearson(pair[0].values(c, st_[:, 4], ac[:, 4]), pair[1].values(c, st_[:, 4], ac[:, 4])))
    assert got.mean == pytest.approx(np.mean(vals))


def test_swap_asap_decays_quickly():
    cfg = ChainConfig.homogeneous(4, 2, 0.6, 0.5)
    pair = (Observable("request", 1), Observable("active", 1))
    r = unequal_time_correlator(SwapAsapPolicy(), cfg, pair, t=5, taus=(0, 6), batches=10, runs=1000, seed=3)
    assert r[6].mean < 0.1 < r[0].mean
