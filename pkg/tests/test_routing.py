import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from routekit.dataset import SynthSpec, synth_generate
from routekit.routing import RewardSpec, oracle_route, reward, route

finite = dict(allow_nan=False, allow_infinity=False)


class TestReward:
    def test_exponential_at_zero_cost(self):
        for lam in (1e-6, 0.5, 1e9):
            assert reward(1.0, 0.0, RewardSpec("r2", lam)) == 1.0

    def test_linear_hand_value(self):
        assert abs(reward(0.8, 0.2, RewardSpec("r1", 0.5)) - 0.4) < 1e-15

    def test_exponential_hand_value(self):
        got = reward(0.8, 0.2, RewardSpec("r2", 0.1))
        assert abs(got - 0.8 * math.exp(-2.0)) < 1e-15
        assert abs(got - 0.108268) < 1e-6

    def test_family_aliases(self):
        assert RewardSpec("linear", 1.0).family == "r1"
        assert RewardSpec("exponential", 1.0).family == "r2"
        with pytest.raises(ValueError):
            RewardSpec("r3", 1.0)

    def test_lambda_validation(self):
        with pytest.raises(ValueError):
            RewardSpec("r1", 0.0)
        with pytest.raises(ValueError):
            RewardSpec("r2", math.inf)

    @given(
        s=st.floats(0, 1, **finite),
        c=st.floats(0, 100, **finite),
        lam=st.floats(1e-6, 1e6, **finite),
    )
    @settings(max_examples=300, deadline=None)
    def test_exponential_bounded_by_quality(self, s, c, lam):
        r2 = reward(s, c, RewardSpec("r2", lam))
        assert 0.0 <= r2 <= s
        assert abs(r2) <= 1.0

    def test_monotonicity(self):
        spec1, spec2 = RewardSpec("r1", 0.3), RewardSpec("r2", 0.3)
        for spec in (spec1, spec2):
            assert reward(0.9, 0.1, spec) > reward(0.5, 0.1, spec)  # increasing in s
            assert reward(0.5, 0.05, spec) > reward(0.5, 0.2, spec)  # decreasing in c
        # r2 non-decreasing in lambda for s > 0, c > 0
        assert reward(0.5, 0.1, RewardSpec("r2", 1.0)) >= reward(0.5, 0.1, RewardSpec("r2", 0.1))


class TestRoute:
    def test_dominant_model_wins_for_every_lambda(self):
        s = np.array([0.9, 0.5, 0.4])
        c = np.array([0.001, 0.01, 0.02])
        for family in ("r1", "r2"):
            for lam in np.geomspace(1e-5, 1e5, 11):
                assert route(s, c, RewardSpec(family, lam)).index == 0

    def test_exact_tie_breaks_to_lower_index(self):
        d = route(np.array([0.5, 0.5]), np.array([0.01, 0.01]), RewardSpec("r2", 1.0))
        assert d.index == 0

    def test_tie_breaks_to_cheaper_first(self):
        # same rewards, different costs: r1 with s compensating cost exactly
        lam = 1.0
        s = np.array([0.5, 0.6])
        c = np.array([0.1, 0.2])  # r1 = 0.4 both
        d = route(s, c, RewardSpec("r1", lam))
        assert d.index == 0 and d.cost == 0.1

    def test_three_model_lambda_table(self):
        # cheaper models take over as lambda shrinks; expectations recomputed
        # with the brute-force reward table
        s = np.array([0.9, 0.7, 0.2])
        c = np.array([0.03, 0.001, 0.0001])
        for lam, want in ((1e-4, 2), (0.001, 1), (0.01, 1), (1.0, 0)):
            spec = RewardSpec("r2", lam)
            d = route(s, c, spec)
            brute = max(range(3), key=lambda i: s[i] * math.exp(-c[i] / lam))
            assert d.index == want == brute

    def test_decision_fields(self):
        d = route(np.array([0.2, 0.9]), np.array([0.01, 0.05]), RewardSpec("r2", 1.0),
                  pool=("a", "b"), query_id="q7")
        assert d.model == "b" and d.query_id == "q7"
        assert d.quality == 0.9 and d.cost == 0.05
        assert d.rewards.shape == (2,)

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            route(np.array([0.5]), np.array([0.1, 0.2]), RewardSpec("r1", 1.0))


class TestOracle:
    def test_single_model_pool(self, two_model_ds):
        sub = two_model_ds.subset_pool(["m0"])
        d = oracle_route(sub.records[0], RewardSpec("r2", 1.0), sub.pool)
        assert d.model == "m0"

    def test_large_lambda_picks_max_quality(self, two_model_ds):
        for rec in two_model_ds.records:
            d = oracle_route(rec, RewardSpec("r1", 1e9), two_model_ds.pool)
            best = max(two_model_ds.pool, key=lambda m: rec.quality[m])
            assert d.model == best

    def test_matches_exhaustive_enumeration(self, two_model_ds):
        for family in ("r1", "r2"):
            for lam in (1e-4, 1e-2, 1.0, 1e3):
                spec = RewardSpec(family, lam)
                for rec in two_model_ds.records:
                    d = oracle_route(rec, spec, two_model_ds.pool)
                    rewards = [
                        reward(rec.quality[m], rec.cost[m], spec) for m in two_model_ds.pool
                    ]
                    assert d.rewards[d.index] == max(rewards)

    def test_oracle_dominates_any_fixed_choice(self):
        ds = synth_generate(SynthSpec(n=50, models=4, dim=6, clusters=3), seed=13)
        for family in ("r1", "r2"):
            spec = RewardSpec(family, 0.05)
            for rec in ds.records:
                d = oracle_route(rec, spec, ds.pool)
                for m in ds.pool:
                    assert d.rewards[d.index] >= reward(rec.quality[m], rec.cost[m], spec)

    def test_argmax_invariances(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            k = rng.integers(2, 6)
            s = rng.uniform(0.05, 0.95, size=k)
            c = rng.uniform(1e-4, 0.05, size=k)
            lam = 10.0 ** rng.uniform(-3, 2)
            delta = rng.uniform(-0.04, 0.04)
            gamma = rng.uniform(0.5, 2.0)
            base1 = route(s, c, RewardSpec("r1", lam)).index
            base2 = route(s, c, RewardSpec("r2", lam)).index
            assert route(s + delta, c, RewardSpec("r1", lam)).index == base1
            assert route(s * gamma, c, RewardSpec("r2", lam)).index == base2
