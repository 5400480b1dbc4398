import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from creatorsteer.config import ConfigError, LearnerConfig
from creatorsteer.ecosystem import NO_ITEM, Observation
from creatorsteer.learner import (ConvergenceDetector, Critic, Policy, ReplayBuffer,
                                  TransitionRecord, act, actor_loss, actor_loss_and_grad,
                                  clipped_surrogate_terms, critic_grad, critic_loss, decode,
                                  encode, gae, load_checkpoint, save_checkpoint, train,
                                  update)


def small_policy(n_creators=3, n_genres=3, hidden=(6,), seed=0, prior=0.0):
    return Policy(n_creators, n_genres, list(hidden), np.random.default_rng(seed),
                  silence_prior=prior)


def random_batch(policy, batch=6, seed=1):
    rng = np.random.default_rng(seed)
    states = rng.normal(0, 1, size=(batch, policy.input_dim))
    actions = rng.integers(0, policy.n_suggestions, size=(batch, policy.n_creators))
    advantages = rng.normal(0, 1, size=batch)
    return states, actions, advantages


class TestEncode:
    def test_row_layout(self):
        obs = Observation(genres=np.array([2]), trust=np.array([0.7]))
        row = encode(obs, n_genres=3)[0]
        np.testing.assert_allclose(row, [0, 0, 1, 0, 0.7])

    def test_no_item_maps_to_last_slot(self):
        obs = Observation(genres=np.array([NO_ITEM]), trust=np.array([0.5]))
        row = encode(obs, n_genres=3)[0]
        np.testing.assert_allclose(row, [0, 0, 0, 1, 0.5])

    def test_one_hot_block_sums_to_one(self):
        obs = Observation(genres=np.array([0, 1, NO_ITEM]), trust=np.array([0.1, 0.9, 0.5]))
        enc = encode(obs, n_genres=2)
        np.testing.assert_allclose(enc[:, :-1].sum(axis=1), 1.0)

    def test_round_trip(self):
        obs = Observation(genres=np.array([1, NO_ITEM, 0, 2]),
                          trust=np.array([0.2, 0.4, 0.6, 0.8]))
        back = decode(encode(obs, n_genres=3))
        np.testing.assert_array_equal(back.genres, obs.genres)
        np.testing.assert_allclose(back.trust, obs.trust)


class TestAct:
    def test_uniform_rows_joint_log_prob(self):
        # 3 creators, 4 suggestions each, uniform -> 3*ln(1/4)
        policy = Policy(3, 3, [4])  # zero weights -> uniform rows
        enc = np.zeros(policy.input_dim)
        _, logp, dist = act(policy, enc, np.random.default_rng(0))
        assert logp == pytest.approx(-4.1588830833596715, abs=1e-12)
        np.testing.assert_allclose(dist, 0.25)

    def test_degenerate_row_always_sampled(self):
        policy = Policy(2, 2, [3])
        policy.bias[1, 2] = 40.0  # creator 1: all mass on suggestion 2
        enc = np.zeros(policy.input_dim)
        for _ in range(20):
            action, _, _ = act(policy, enc, np.random.default_rng(_))
            assert action[1] == 2

    def test_sampling_frequencies_match_distribution(self):
        policy = small_policy(n_creators=2, n_genres=2, seed=3)
        enc = np.random.default_rng(9).normal(0, 1, policy.input_dim)
        rng = np.random.default_rng(11)
        counts = np.zeros((2, 3))
        for _ in range(10_000):
            action, _, dist = act(policy, enc, rng)
            for c, a in enumerate(action):
                counts[c, a] += 1
        np.testing.assert_allclose(counts / 10_000, dist, atol=0.02)

    def test_joint_log_prob_is_row_sum(self):
        policy = small_policy(seed=5)
        enc = np.random.default_rng(6).normal(0, 1, policy.input_dim)
        rng = np.random.default_rng(7)
        action, logp, dist = act(policy, enc, rng)
        manual = sum(np.log(dist[c, action[c]]) for c in range(policy.n_creators))
        assert logp == pytest.approx(manual, abs=1e-12)

    def test_non_finite_output_raises(self):
        policy = small_policy()
        policy.U[:] = np.nan
        with pytest.raises(FloatingPointError):
            act(policy, np.zeros(policy.input_dim), np.random.default_rng(0))


class TestGae:
    def test_single_step(self):
        adv = gae([1.0], [0.0], [0.0], [0.0], gamma=0.9, lam=0.95)
        assert adv[0] == pytest.approx(1.0)

    def test_lambda_zero_is_one_step_delta(self):
        rng = np.random.default_rng(0)
        r, v, nv = rng.normal(size=5), rng.normal(size=5), rng.normal(size=5)
        adv = gae(r, v, nv, np.zeros(5), gamma=0.8, lam=0.0)
        np.testing.assert_allclose(adv, r + 0.8 * nv - v, atol=1e-12)

    def brute_force(self, r, v, nv, gamma):
        # discounted return (with bootstrap tail) minus baseline
        T = len(r)
        out = np.zeros(T)
        for t in range(T):
            acc = sum(gamma ** l * r[t + l] for l in range(T - t))
            acc += gamma ** (T - t) * nv[-1]
            out[t] = acc - v[t]
        return out

    def test_lambda_one_equals_brute_force(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            T = int(rng.integers(1, 7))
            r, v = rng.normal(size=T), rng.normal(size=T)
            nv = np.concatenate([v[1:], rng.normal(size=1)])
            adv = gae(r, v, nv, np.zeros(T), gamma=0.9, lam=1.0)
            np.testing.assert_allclose(adv, self.brute_force(r, v, nv, 0.9), atol=1e-10)

    @given(st.integers(min_value=1, max_value=6), st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=60, deadline=None)
    def test_property_lambda_one(self, T, seed):
        rng = np.random.default_rng(seed)
        r, v = rng.normal(size=T), rng.normal(size=T)
        nv = np.concatenate([v[1:], rng.normal(size=1)])
        adv = gae(r, v, nv, np.zeros(T), gamma=0.95, lam=1.0)
        np.testing.assert_allclose(adv, self.brute_force(r, v, nv, 0.95), atol=1e-10)


class TestClippedSurrogate:
    def test_ratio_one_never_clipped(self):
        for mode in ("standard_ppo", "literal_eq2"):
            terms = clipped_surrogate_terms([1.0], [2.0], eps=0.2, mode=mode)
            assert terms[0] == pytest.approx(2.0, abs=1e-12)  # loss contribution -2

    def test_positive_advantage_clipped_both_modes(self):
        for mode in ("standard_ppo", "literal_eq2"):
            terms = clipped_surrogate_terms([1.5], [1.0], eps=0.2, mode=mode)
            assert terms[0] == pytest.approx(1.2, abs=1e-12)

    def test_negative_advantage_modes_differ(self):
        # rho=0.5, A=-1: standard is pessimistic (-0.8), literal is -0.5
        standard = clipped_surrogate_terms([0.5], [-1.0], eps=0.2, mode="standard_ppo")
        literal = clipped_surrogate_terms([0.5], [-1.0], eps=0.2, mode="literal_eq2")
        assert standard[0] == pytest.approx(-0.8, abs=1e-12)
        assert literal[0] == pytest.approx(-0.5, abs=1e-12)

    def test_bad_epsilon(self):
        with pytest.raises(ConfigError):
            clipped_surrogate_terms([1.0], [1.0], eps=0.0)

    def test_loss_at_old_params_is_minus_advantage_sum(self):
        policy = small_policy(seed=8)
        states, actions, advantages = random_batch(policy, seed=9)
        loss = actor_loss(policy, policy.copy(), states, actions, advantages, 0.2)
        assert loss == pytest.approx(-advantages.sum(), abs=1e-9)

    def test_distribution_rows_sum_to_one(self):
        policy = small_policy(n_creators=4, n_genres=5, seed=17, prior=1.3)
        states = np.random.default_rng(18).normal(0, 2, size=(6, policy.input_dim))
        probs, _, _ = policy.distribution(states)
        np.testing.assert_allclose(probs.sum(axis=-1), 1.0, atol=1e-9)
        assert np.all(probs >= 0)

    def test_positive_advantage_rescaling_keeps_gradient_signs(self):
        from creatorsteer.learner import _surrogate_dratio
        rng = np.random.default_rng(19)
        ratios = rng.uniform(0.5, 1.5, size=40)
        adv = rng.normal(size=40)
        for mode in ("standard_ppo", "literal_eq2"):
            base = _surrogate_dratio(ratios, adv, 0.2, mode)
            scaled = _surrogate_dratio(ratios, 3.7 * adv, 0.2, mode)
            np.testing.assert_array_equal(np.sign(base), np.sign(scaled))


class TestCriticLoss:
    def test_direct_evaluation(self):
        critic = Critic(1, 1, [2])
        # zero network -> V = 0 everywhere; supply explicit target
        loss = critic_loss(critic, np.zeros((1, 3)), np.zeros((1, 3)), [1.0], 0.9,
                           targets=np.array([2.8]))
        assert loss == pytest.approx(2.8 ** 2)

    def test_hand_case(self):
        # R=1, gamma=0.9, V(s')=2, V(s)=2 -> (1 + 1.8 - 2)^2
        critic = Critic(1, 1, [2])
        critic.net.biases[-1][0] = 2.0
        loss = critic_loss(critic, np.zeros((1, 3)), np.ones((1, 3)), [1.0], 0.9)
        assert loss == pytest.approx(0.64, abs=1e-12)

    def test_perfect_values_zero_loss(self):
        # deterministic chain with r = (1 - gamma) * V keeps V constant
        critic = Critic(1, 1, [2])
        critic.net.biases[-1][0] = 10.0
        loss = critic_loss(critic, np.zeros((2, 3)), np.ones((2, 3)), [0.5, 0.5], 0.95)
        assert loss == pytest.approx(0.0, abs=1e-18)

    def test_matches_independent_recomputation(self):
        rng = np.random.default_rng(2)
        critic = Critic(2, 2, [4], rng)
        states = rng.normal(size=(5, critic.input_dim))
        next_states = rng.normal(size=(5, critic.input_dim))
        rewards = rng.normal(size=5)
        loss = critic_loss(critic, states, next_states, rewards, 0.9)
        # scalar re-implementation
        expected = 0.0
        for s, s2, r in zip(states, next_states, rewards):
            expected += (r + 0.9 * critic.values(s2[None])[0] - critic.values(s[None])[0]) ** 2
        assert loss == pytest.approx(expected, abs=1e-12)


class TestGradients:
    def fd_check(self, value_fn, grad, vec, set_vec, h=1e-6):
        fd = np.zeros_like(vec)
        for i in range(len(vec)):
            up, down = vec.copy(), vec.copy()
            up[i] += h
            down[i] -= h
            set_vec(up)
            plus = value_fn()
            set_vec(down)
            minus = value_fn()
            fd[i] = (plus - minus) / (2 * h)
        set_vec(vec)
        rel = np.abs(grad - fd) / np.maximum(np.abs(grad) + np.abs(fd), 1e-8)
        return rel.max()

    def test_actor_gradient_both_modes(self):
        policy = small_policy(n_creators=2, n_genres=2, hidden=(5,), seed=12, prior=0.4)
        states, actions, advantages = random_batch(policy, batch=4, seed=13)
        old = policy.copy()
        old.set_vector(old.get_vector() + np.random.default_rng(14).normal(0, 0.05,
                                                                           old.get_vector().size))
        old_logp, _, _ = old.joint_log_prob(states, actions)
        for mode in ("standard_ppo", "literal_eq2"):
            loss, grads, _ = actor_loss_and_grad(policy, old_logp, states, actions,
                                                 advantages, 0.2, mode)
            flat = np.concatenate([g.ravel() for g in grads])
            err = self.fd_check(
                lambda: actor_loss_and_grad(policy, old_logp, states, actions,
                                            advantages, 0.2, mode)[0],
                flat, policy.get_vector(), policy.set_vector)
            assert err < 1e-4

    def test_critic_semi_gradient(self):
        rng = np.random.default_rng(15)
        critic = Critic(2, 2, [5], rng)
        states = rng.normal(size=(4, critic.input_dim))
        next_states = rng.normal(size=(4, critic.input_dim))
        rewards = rng.normal(size=4)
        loss, grads, targets = critic_grad(critic, states, next_states, rewards, 0.9)
        flat = np.concatenate([g for pair in grads for g in pair], axis=None)
        err = self.fd_check(
            lambda: critic_loss(critic, states, next_states, rewards, 0.9, targets=targets),
            flat, critic.net.get_vector(), critic.net.set_vector)
        assert err < 1e-4


class TestUpdate:
    def fill_buffer(self, policy, n=8, seed=20):
        rng = np.random.default_rng(seed)
        buffer = ReplayBuffer()
        for _ in range(n):
            s = rng.normal(size=policy.input_dim)
            a = rng.integers(0, policy.n_suggestions, size=policy.n_creators)
            buffer.add(TransitionRecord(state=s, action=a, log_prob=-1.0,
                                        next_state=rng.normal(size=policy.input_dim),
                                        reward=float(rng.integers(0, 5))))
        return buffer

    def test_zero_learning_rate_no_change(self):
        policy = small_policy(seed=21)
        critic = Critic(3, 3, [6], np.random.default_rng(22))
        hyper = LearnerConfig(actor_lr=0.0, critic_lr=0.0, epochs_per_update=5)
        before_a, before_c = policy.get_vector(), critic.net.get_vector()
        update(policy, critic, self.fill_buffer(policy), hyper)
        np.testing.assert_array_equal(policy.get_vector(), before_a)
        np.testing.assert_array_equal(critic.net.get_vector(), before_c)

    def test_zero_epochs_emits_diagnostics(self):
        policy = small_policy(seed=23)
        critic = Critic(3, 3, [6], np.random.default_rng(24))
        hyper = LearnerConfig(epochs_per_update=0)
        before = policy.get_vector()
        diag = update(policy, critic, self.fill_buffer(policy), hyper)
        np.testing.assert_array_equal(policy.get_vector(), before)
        assert {"actor_loss", "critic_loss", "mean_ratio", "clip_fraction"} <= set(diag)

    def test_deterministic_given_identical_inputs(self):
        results = []
        for _ in range(2):
            policy = small_policy(seed=25)
            critic = Critic(3, 3, [6], np.random.default_rng(26))
            hyper = LearnerConfig(epochs_per_update=5)
            update(policy, critic, self.fill_buffer(policy), hyper)
            results.append((policy.get_vector(), critic.net.get_vector()))
        np.testing.assert_array_equal(results[0][0], results[1][0])
        np.testing.assert_array_equal(results[0][1], results[1][1])

    def test_bandit_learns_rewarding_suggestion(self):
        # one creator, one genre -> suggestions {0, 1}; reward 1 iff suggestion 1
        rng = np.random.default_rng(27)
        policy = Policy(1, 1, [8], rng)
        critic = Critic(1, 1, [8], rng)
        hyper = LearnerConfig(hidden=[8], rounds_per_cycle=16, epochs_per_update=5,
                              actor_lr=3e-3, critic_lr=1e-2, gamma=0.0, gae_lambda=0.0)
        from creatorsteer.nets import Adam
        actor_opt = Adam(policy.parameters(), hyper.actor_lr)
        critic_opt = Adam(critic.net.parameters(), hyper.critic_lr)
        enc = np.zeros(policy.input_dim)
        enc[1] = 1.0  # NO_ITEM one-hot
        enc[2] = 0.5
        sample_rng = np.random.default_rng(28)
        for _ in range(200):
            buffer = ReplayBuffer()
            for _ in range(hyper.rounds_per_cycle):
                action, logp, _ = act(policy, enc, sample_rng)
                reward = 1.0 if action[0] == 1 else 0.0
                buffer.add(TransitionRecord(state=enc.copy(), action=action, log_prob=logp,
                                            next_state=enc.copy(), reward=reward))
            update(policy, critic, buffer, hyper, actor_opt, critic_opt)
        probs, _, _ = policy.distribution(enc.reshape(1, -1))
        assert probs[0, 0, 1] > 0.95


class TestConvergenceDetector:
    def test_synthetic_sequence_stops_at_tenth_flat_value(self):
        # decreasing prefix, then a plateau of exactly 10 values within 1%
        prefix = [100.0, 99.5, 99.4, 90.0, 80.0, 70.0]
        plateau = [60.0 - 0.05 * i for i in range(10)]
        detector = ConvergenceDetector(window=10, rel_tol=0.01)
        fired_at = None
        for i, v in enumerate(prefix + plateau):
            if detector.update(v):
                fired_at = i
                break
        assert fired_at == len(prefix) + 9  # the 10th plateau value

    def test_constant_sequence_fires_after_ten(self):
        detector = ConvergenceDetector(window=10, rel_tol=0.01)
        fired = [detector.update(5.0) for _ in range(12)]
        assert fired.index(True) == 9  # 10th call

    def test_big_drops_reset_the_run(self):
        detector = ConvergenceDetector(window=3, rel_tol=0.01)
        assert not detector.update(100.0)
        assert not detector.update(99.9)
        assert not detector.update(50.0)  # >1% drop resets
        assert not detector.update(49.9)
        assert detector.update(49.8)


class TestTrainLoop:
    class OneStateEnv:
        """Reward 1 when creator 0 is told genre 0, else 0."""

        n_creators = 1
        n_genres = 2

        def observation(self):
            return Observation(genres=np.array([NO_ITEM]), trust=np.array([0.5]))

        def apply(self, action):
            return (1.0 if action[0] == 1 else 0.0), self.observation()

    def test_hard_cap_single_cycle(self):
        hyper = LearnerConfig(hidden=[4], rounds_per_cycle=8, max_train_rounds=8,
                              epochs_per_update=2)
        result = train(lambda: self.OneStateEnv(), hyper, seed=0)
        assert len(result.log) == 1

    def test_log_columns(self):
        hyper = LearnerConfig(hidden=[4], rounds_per_cycle=4, max_train_rounds=12,
                              epochs_per_update=1)
        result = train(lambda: self.OneStateEnv(), hyper, seed=1)
        for row in result.log:
            assert {"cycle", "policy_loss", "critic_loss", "mean_reward",
                    "clip_fraction"} == set(row)

    def test_train_deterministic(self):
        hyper = LearnerConfig(hidden=[4], rounds_per_cycle=4, max_train_rounds=16,
                              epochs_per_update=2)
        a = train(lambda: self.OneStateEnv(), hyper, seed=2)
        b = train(lambda: self.OneStateEnv(), hyper, seed=2)
        np.testing.assert_array_equal(a.policy.get_vector(), b.policy.get_vector())
        assert a.log == b.log


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        policy = small_policy(seed=31, prior=1.0)
        critic = Critic(3, 3, [6], np.random.default_rng(32))
        hyper = LearnerConfig()
        path = tmp_path / "ckpt.json"
        save_checkpoint(path, policy, critic, hyper, trust_logits=[0.1, -0.2, 0.3])
        policy2, critic2, hyper2, trust, _ = load_checkpoint(path)
        np.testing.assert_allclose(policy2.get_vector(), policy.get_vector())
        np.testing.assert_allclose(critic2.net.get_vector(), critic.net.get_vector())
        assert hyper2 == hyper
        np.testing.assert_allclose(trust, [0.1, -0.2, 0.3])
        # loaded policy produces identical distributions
        enc = np.random.default_rng(33).normal(size=policy.input_dim).reshape(1, -1)
        np.testing.assert_allclose(policy.distribution(enc)[0], policy2.distribution(enc)[0])
