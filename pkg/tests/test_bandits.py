import numpy as np
import pytest

from fairgsp.bandits import (
    Exp3State,
    RegretLedger,
    bayesian_learner,
    default_reward_scale,
    exp3_probabilities,
    exp3_sample,
    exp3_update,
    regret,
    tuned_exploration_mix,
)
from fairgsp.model import Group

from conftest import flat_instance
from oracles import ref_regret


def fresh_state(k=2, mix=0.1, lr=1.0, scale=1.0, seed=0):
    return Exp3State(
        weights=np.ones(k),
        exploration_mix=mix,
        learning_rate=lr,
        reward_scale=scale,
        rng=np.random.default_rng(seed),
    )


class TestExp3State:
    def test_uniform_weights_give_uniform_distribution(self):
        p = exp3_probabilities(fresh_state(k=2, mix=0.37))
        assert p.tolist() == [0.5, 0.5]

    def test_rejects_degenerate_weights(self):
        with pytest.raises(ValueError, match="positive"):
            Exp3State(
                weights=np.array([1.0, 0.0]),
                exploration_mix=0.1,
                learning_rate=1.0,
                reward_scale=1.0,
                rng=np.random.default_rng(0),
            )

    def test_rejects_bad_mix(self):
        with pytest.raises(ValueError, match="exploration_mix"):
            fresh_state(mix=0.0)

    def test_probabilities_sum_to_one(self):
        state = fresh_state(k=7, mix=0.05)
        for _ in range(50):
            idx, prob = exp3_sample(state)
            exp3_update(state, idx, 0.8, prob)
        assert exp3_probabilities(state).sum() == pytest.approx(1.0, abs=1e-12)


class TestSampling:
    def test_deterministic_replay(self):
        a, b = fresh_state(k=5, seed=123), fresh_state(k=5, seed=123)
        draws_a = [exp3_sample(a) for _ in range(20)]
        draws_b = [exp3_sample(b) for _ in range(20)]
        assert draws_a == draws_b

    def test_reports_probability_used(self):
        state = fresh_state(k=4, mix=0.2)
        idx, prob = exp3_sample(state)
        assert prob == pytest.approx(exp3_probabilities(state)[idx], abs=1e-15)


class TestUpdate:
    def test_zero_reward_leaves_weights(self):
        state = fresh_state(k=3)
        before = state.weights.copy()
        exp3_update(state, 1, 0.0, 0.4)
        assert (state.weights == before).all()

    def test_two_updates_commute_with_double_rate(self):
        twice = fresh_state(k=3, lr=1.0)
        once = fresh_state(k=3, lr=2.0)
        exp3_update(twice, 0, 0.7, 0.5)
        exp3_update(twice, 0, 0.7, 0.5)
        exp3_update(once, 0, 0.7, 0.5)
        assert twice.weights[0] == pytest.approx(once.weights[0], rel=1e-12)

    def test_unit_reward_tilts_distribution(self):
        state = fresh_state(k=2, mix=0.1)
        exp3_update(state, 0, 1.0, 0.5)
        assert exp3_probabilities(state)[0] > 0.5

    def test_rewards_clamped_into_scale(self):
        spiky = fresh_state(k=2, scale=1.0)
        capped = fresh_state(k=2, scale=1.0)
        exp3_update(spiky, 0, 100.0, 0.5)
        exp3_update(capped, 0, 1.0, 0.5)
        assert spiky.weights[0] == capped.weights[0]
        exp3_update(spiky, 1, -5.0, 0.5)
        assert spiky.weights[1] == 1.0

    def test_nonpositive_probability_rejected(self):
        with pytest.raises(ValueError, match="probability_used"):
            exp3_update(fresh_state(), 0, 0.5, 0.0)

    def test_probability_floor(self):
        state = fresh_state(k=4, mix=0.08, lr=8.0, seed=5)
        floor = 0.08 / 4
        for _ in range(500):
            idx, prob = exp3_sample(state)
            exp3_update(state, idx, float(state.rng.random()), prob)
            assert exp3_probabilities(state).min() >= floor - 1e-12

    def test_overflow_renormalization_keeps_distribution(self):
        state = fresh_state(k=2, mix=0.1, lr=500.0)
        reference = None
        for _ in range(400):
            exp3_update(state, 0, 1.0, 0.5)
            p = exp3_probabilities(state)
            if reference is not None:
                assert p[0] >= reference - 1e-9
            reference = p[0]
            assert np.isfinite(state.weights).all()


class TestBayesianLearner:
    def _learner(self, seed=0):
        inst = flat_instance(2, curve_h=(1.0, 0.5), grid=(0.0, 0.5, 1.0))
        return bayesian_learner(inst, 0, {0.5: 0.5, 1.0: 0.5}, 1000, seed)

    def test_fresh_learner_is_uniform(self):
        learner = self._learner()
        assert np.allclose(learner.distribution(0.5), 1 / 3)

    def test_unknown_type_rejected(self):
        learner = self._learner()
        with pytest.raises(KeyError):
            learner.act(0.25)

    def test_types_learn_independently(self):
        learner = self._learner()
        for _ in range(30):
            learner.act(1.0)
            learner.feed(2.0)
        assert not np.allclose(learner.distribution(1.0), 1 / 3)
        assert np.allclose(learner.distribution(0.5), 1 / 3)

    def test_feed_requires_pending_act(self):
        learner = self._learner()
        with pytest.raises(RuntimeError):
            learner.feed(1.0)

    def test_single_type_acts_like_plain_bandit(self):
        inst = flat_instance(2, curve_h=(1.0, 0.5), grid=(0.0, 1.0))
        learner = bayesian_learner(inst, 0, {1.0: 1.0}, 100, 3)
        assert set(learner.per_type) == {0.0, 1.0}  # one bandit per grid type
        bid = learner.act(1.0)
        assert bid in learner.bid_grid

    def test_same_seed_same_bids(self):
        a, b = self._learner(seed=11), self._learner(seed=11)
        bids_a = [a.act(0.5) for _ in range(10)]
        bids_b = [b.act(0.5) for _ in range(10)]
        assert bids_a == bids_b


class TestTuning:
    def test_mix_bounds(self):
        assert tuned_exploration_mix(1, 100) == 1.0
        assert tuned_exploration_mix(10, 0) == 1.0
        mix = tuned_exploration_mix(11, 10_000)
        assert 0.0 < mix < 0.1

    def test_reward_scale_covers_click_value_plus_compensation(self):
        inst = flat_instance(2, curve_h=(1.0, 0.25), grid=(0.0, 1.0))
        # top click value 1*1 plus twice the worst click loss 2*1*(1-0.25)
        assert default_reward_scale(inst, 0) == pytest.approx(2.5, abs=1e-12)

    def test_degenerate_scale_falls_back_to_one(self):
        inst = flat_instance(
            2, curve_h=(0.0, 0.0), curve_l=(1.0, 0.5), grid=(0.0, 1.0),
            groups=(Group.H, Group.L),
        )
        assert default_reward_scale(inst, 0) == 1.0


class TestRegretLedger:
    def test_best_fixed_bid_already_played_gives_zero(self):
        ledger = RegretLedger([(0.0, 1.0)])
        for _ in range(5):
            ledger.record(0, 1.0, 0.7, [0.2, 0.7])
        assert regret(ledger, 0) == pytest.approx(0.0, abs=1e-12)

    def test_single_round_gap(self):
        ledger = RegretLedger([(0.0, 1.0)])
        ledger.record(0, 1.0, 0.3, [0.3, 0.7])
        assert regret(ledger, 0) == pytest.approx(0.4, abs=1e-12)

    def test_empty_ledger_is_zero(self):
        ledger = RegretLedger([(0.0, 1.0)])
        assert regret(ledger, 0) == 0.0

    def test_matches_brute_force_on_random_trace(self, rng):
        n_bids = 4
        ledger = RegretLedger([tuple(range(n_bids))])
        trace = []
        for _ in range(20):
            realized_type = float(rng.choice((0.25, 0.75)))
            utilities = rng.normal(size=n_bids).tolist()
            played = int(rng.integers(n_bids))
            trace.append((realized_type, played, utilities))
            ledger.record(0, realized_type, utilities[played], utilities)
        expected = ref_regret(trace, n_bids)
        assert ledger.regret_by_type(0) == pytest.approx(expected, abs=1e-12)
        assert regret(ledger, 0) == pytest.approx(max(expected.values()), abs=1e-12)

    def test_takes_worst_type(self):
        ledger = RegretLedger([(0.0, 1.0)])
        ledger.record(0, 0.5, 0.5, [0.5, 0.6])   # regret 0.1
        ledger.record(0, 1.0, 0.1, [0.9, 0.1])   # regret 0.8
        assert regret(ledger, 0) == pytest.approx(0.8, abs=1e-12)
