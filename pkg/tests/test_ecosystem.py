import copy
import json

import numpy as np
import pytest

from creatorsteer.audience import click_probabilities
from creatorsteer.config import ConfigError, RunConfig
from creatorsteer.ecosystem import (NO_ITEM, apply_churn, build_state, observe,
                                    state_from_snapshot, state_to_snapshot, step)
from creatorsteer.recommender import OracleAffinity, make_recommender
from creatorsteer.rngs import stream_rng
from creatorsteer.signaling import no_signal


def make_config(**overrides):
    base = {
        "seed": 0,
        "horizon": 10,
        "populations": {
            "creators": 3, "users": 5, "genres": 2, "k": 2,
            "user_affinity": {"noise_sd": 0.05},
            "user_activity": {"kind": "constant", "value": 0.6},
            "creator_activity": {"kind": "constant", "value": 0.8},
        },
        "click_model": {"bias": -1.0, "affinity_weight": 2.0, "quality_weight": 1.0,
                        "quality_sd": 0.5},
    }
    doc = base | overrides
    return RunConfig.from_dict(doc)


def oracle_recommender():
    return OracleAffinity()


class TestStepBasics:
    def test_single_creator_follows_no_users(self):
        cfg = make_config(populations={
            "creators": 1, "users": 0, "genres": 3, "k": 2,
            "creator_activity": {"kind": "constant", "value": 1.0},
        }, trust={"init_mu": 0.5, "init_sigma": 1.0})
        state = build_state(cfg, seed=1)
        state.creators[0].trust_true = 1.0
        result = step(state, np.array([3]), oracle_recommender())
        assert result.reward == 0
        assert state.corpus.n_items == 1
        assert state.corpus.genres[0] == 2
        assert result.record["created"][0]["followed"] is True

    def test_all_creators_inactive(self):
        cfg = make_config(populations={
            "creators": 3, "users": 5, "genres": 2, "k": 2,
            "creator_activity": {"kind": "constant", "value": 0.0},
        })
        state = build_state(cfg, seed=2)
        result = step(state, no_signal(state), oracle_recommender())
        assert state.corpus.n_items == 0
        assert result.reward == 0
        assert result.follow_observations == []

    def test_action_length_mismatch(self):
        state = build_state(make_config(), seed=0)
        with pytest.raises(ConfigError, match="action"):
            step(state, np.zeros(99, dtype=int), oracle_recommender())

    def test_small_corpus_returns_fewer_than_k(self):
        cfg = make_config(populations={
            "creators": 1, "users": 2, "genres": 2, "k": 5,
            "creator_activity": {"kind": "constant", "value": 1.0},
            "user_activity": {"kind": "constant", "value": 1.0},
        })
        state = build_state(cfg, seed=3)
        result = step(state, np.array([1]), oracle_recommender())
        # 1 item in corpus; both active users saw just it
        assert state.corpus.impressions[0] == 2


class TestHandTracedRound:
    """Re-derives one full round with independent generators and the
    documented draw order, then checks step() reproduces it exactly."""

    def test_exact_reward_and_clicks(self):
        seed = 123
        cfg = make_config()
        state = build_state(cfg, seed=seed)
        pop, cm = cfg.populations, cfg.click_model

        # independent mirrors of the streams step() will consume
        activity = stream_rng(seed, "creator-activity")
        decision = stream_rng(seed, "creator-decision")
        quality = stream_rng(seed, "item-quality")
        user_act = stream_rng(seed, "user-activity")
        click = stream_rng(seed, "click")

        action = [1, 0, 2]
        active = [activity.random() < c.activity_prob for c in state.creators]
        items = []  # (item_id, creator, genre, quality)
        expected_follow_obs = []
        next_id = 0
        for c in state.creators:
            if not active[c.id]:
                continue
            suggestion = action[c.id]
            followed = False
            if suggestion != 0:
                followed = decision.random() < c.trust_true
            if followed:
                genre = suggestion - 1
            else:
                genre = int(decision.integers(pop.genres))  # empty history -> uniform
            q = float(quality.normal(0.0, cm.quality_sd))
            items.append((next_id, c.id, genre, q))
            next_id += 1
            if suggestion != 0:
                expected_follow_obs.append((c.id, followed))

        users_active = [user_act.random() < u.activity_prob for u in state.users]
        genres = np.array([it[2] for it in items])
        qualities = np.array([it[3] for it in items])
        expected_reward = 0
        expected_clicks = []
        for u in state.users:
            if not users_active[u.id]:
                continue
            if not items:
                continue
            scores = u.genre_affinity[genres] + qualities
            order = sorted(range(len(items)), key=lambda i: (-scores[i], i))[:pop.k]
            probs = click_probabilities(u, genres[order], qualities[order], cm)
            for idx, p in zip(order, probs):
                if click.random() < p:
                    expected_reward += 1
                    expected_clicks.append({"user": u.id, "item": idx})

        result = step(state, np.array(action), oracle_recommender())
        assert result.reward == expected_reward
        assert result.record["clicks"] == expected_clicks
        assert result.follow_observations == expected_follow_obs
        assert state.corpus.n_items == len(items)
        for item_id, creator, genre, q in items:
            assert state.corpus.creators[item_id] == creator
            assert state.corpus.genres[item_id] == genre
            assert state.corpus.qualities[item_id] == pytest.approx(q)


class TestChurn:
    def exhausted_creator(self, state, cid, streak):
        state.creators[cid].zero_click_streak = streak

    def run_churn(self, state, created, clicks):
        state._round_created = created
        state._round_creator_clicks = np.array(clicks)
        return apply_churn(state)

    def test_streak_ten_departs(self):
        state = build_state(make_config(), seed=1)
        self.exhausted_creator(state, 0, 9)
        departed = self.run_churn(state, [True, False, False], [0, 0, 0])
        assert departed == [0]
        assert not state.creators[0].alive

    def test_inactive_round_preserves_streak(self):
        state = build_state(make_config(), seed=1)
        self.exhausted_creator(state, 0, 9)
        departed = self.run_churn(state, [False, False, False], [0, 0, 0])
        assert departed == []
        assert state.creators[0].zero_click_streak == 9
        assert state.creators[0].alive

    def test_click_on_old_item_resets_streak(self):
        state = build_state(make_config(), seed=1)
        self.exhausted_creator(state, 0, 9)
        departed = self.run_churn(state, [False, False, False], [1, 0, 0])
        assert departed == []
        assert state.creators[0].zero_click_streak == 0

    def test_departure_absorbing(self):
        cfg = make_config(churn_threshold=1, populations={
            "creators": 1, "users": 0, "genres": 2, "k": 1,
            "creator_activity": {"kind": "constant", "value": 1.0},
        })
        state = build_state(cfg, seed=4)
        step(state, np.array([0]), oracle_recommender())
        assert not state.creators[0].alive
        before = state.corpus.n_items
        for _ in range(3):
            step(state, np.array([0]), oracle_recommender())
        assert state.corpus.n_items == before


class TestObserve:
    def test_created_genre_and_trust(self):
        state = build_state(make_config(), seed=5)
        state.last_round_genres = np.array([1, NO_ITEM, 0])
        obs = observe(state, np.array([0.7, 0.5, 0.2]))
        assert obs.genres[0] == 1 and obs.genres[1] == NO_ITEM
        assert obs.trust[0] == pytest.approx(0.7)

    def test_departed_creator_no_item(self):
        cfg = make_config(populations={
            "creators": 2, "users": 0, "genres": 2, "k": 1,
            "creator_activity": {"kind": "constant", "value": 1.0},
        })
        state = build_state(cfg, seed=6)
        state.creators[0].alive = False
        step(state, np.array([0, 0]), oracle_recommender())
        obs = observe(state, np.array([0.5, 0.5]))
        assert obs.genres[0] == NO_ITEM

    def test_bad_trust_length(self):
        state = build_state(make_config(), seed=7)
        with pytest.raises(ConfigError):
            observe(state, np.array([0.5]))


class TestInvariants:
    def run_rounds(self, state, recommender, n):
        rewards, growth = [], []
        rng = np.random.default_rng(0)
        for _ in range(n):
            before = state.corpus.n_items
            action = rng.integers(0, state.n_genres + 1, size=state.n_creators)
            result = step(state, action, recommender)
            rewards.append(result.reward)
            growth.append(state.corpus.n_items - before)
        return rewards, growth

    def test_reward_equals_click_records_and_corpus_growth(self):
        cfg = make_config(populations={
            "creators": 4, "users": 6, "genres": 3, "k": 2,
            "user_affinity": {"noise_sd": 0.05},
        })
        state = build_state(cfg, seed=11)
        rewards, growth = self.run_rounds(state, oracle_recommender(), 15)
        assert sum(rewards) == state.click_log.total
        assert state.click_log.per_round_totals == rewards
        assert state.corpus.n_items == sum(growth)
        assert np.all(state.corpus.clicks[:state.corpus.n_items] >= 0)

    def test_determinism_identical_logs(self):
        cfg = make_config(populations={
            "creators": 4, "users": 6, "genres": 3, "k": 2,
        })
        logs = []
        for _ in range(2):
            state = build_state(cfg, seed=21)
            recommender = make_recommender(cfg.recommender, cfg.populations.users,
                                           state.rngs.get("recommender"))
            records = []
            rng = np.random.default_rng(5)
            for _ in range(10):
                action = rng.integers(0, state.n_genres + 1, size=state.n_creators)
                records.append(step(state, action, recommender).record)
            logs.append(json.dumps(records))
        assert logs[0] == logs[1]

    def test_event_record_schema(self):
        state = build_state(make_config(), seed=31)
        result = step(state, no_signal(state), oracle_recommender())
        rec = result.record
        assert set(rec) == {"round", "reward", "created", "departures", "clicks"}
        for entry in rec["created"]:
            assert set(entry) == {"creator", "genre", "followed", "suggested"}
        for entry in rec["clicks"]:
            assert set(entry) == {"user", "item"}


class TestSnapshot:
    def test_round_trip_continues_identically(self):
        cfg = make_config(populations={
            "creators": 3, "users": 4, "genres": 2, "k": 2,
        })
        state = build_state(cfg, seed=41)
        rng = np.random.default_rng(2)
        for _ in range(5):
            step(state, rng.integers(0, 3, size=3), oracle_recommender())

        doc = json.loads(json.dumps(state_to_snapshot(state)))
        clone = state_from_snapshot(doc)

        rng_a, rng_b = np.random.default_rng(9), np.random.default_rng(9)
        for _ in range(5):
            ra = step(state, rng_a.integers(0, 3, size=3), oracle_recommender())
            rb = step(clone, rng_b.integers(0, 3, size=3), oracle_recommender())
            assert ra.record == rb.record

    def test_version_check(self):
        state = build_state(make_config(), seed=42)
        doc = state_to_snapshot(state)
        doc["version"] = 99
        with pytest.raises(ValueError, match="version"):
            state_from_snapshot(doc)

    def test_cfd_state_survives_round_trip(self):
        cfg = make_config(creators={"fallback_mix": {"cfd": 1.0}, "cfd_seed_logit": 2.0},
                          populations={"creators": 2, "users": 2, "genres": 3, "k": 1,
                                       "creator_seed_history": {"genres": [1],
                                                                "items_per_creator": 1}})
        state = build_state(cfg, seed=43)
        clone = state_from_snapshot(state_to_snapshot(state))
        for a, b in zip(state.creators, clone.creators):
            np.testing.assert_array_equal(a.fallback_state.genre_logits,
                                          b.fallback_state.genre_logits)
