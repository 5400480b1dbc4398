"""Learned suggestion policy: factored actor, critic, GAE, clipped-surrogate
updates, and the alternating collect/train loop.

The actor maps the encoded world state to one categorical distribution per
creator over the suggestion set (no-suggestion + one entry per genre); the
joint action samples each row independently, so its log-probability is the
row-wise sum. Training alternates N-round collection with M full-batch
gradient epochs until the policy loss stays flat, all on hand-rolled
numpy networks for bitwise reproducibility.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, LearnerConfig
from .ecosystem import NO_ITEM, Observation
from .nets import MLP, Adam, log_softmax_rows, softmax_rows
from .rngs import stream_rng

CHECKPOINT_VERSION = 1


def encode(observation: Observation, n_genres: int) -> np.ndarray:
    """One-hot state matrix, shape (n_creators, n_genres + 2).

    Row layout: genre one-hot over n_genres + 1 slots (the last slot means
    "created nothing"), then the predicted trust scalar.
    """
    n_creators = len(observation.genres)
    out = np.zeros((n_creators, n_genres + 2))
    for c, g in enumerate(observation.genres):
        out[c, n_genres if g == NO_ITEM else int(g)] = 1.0
    out[:, -1] = observation.trust
    return out


def decode(encoded: np.ndarray) -> Observation:
    """Inverse of `encode` (exact on the one-hot block)."""
    n_genres = encoded.shape[1] - 2
    slots = np.argmax(encoded[:, :-1], axis=1)
    genres = np.where(slots == n_genres, NO_ITEM, slots)
    return Observation(genres=genres.astype(np.int64), trust=encoded[:, -1].copy())


@dataclass
class TransitionRecord:
    state: np.ndarray       # flattened encoded state
    action: np.ndarray      # (n_creators,) suggestion ids
    log_prob: float         # joint log-probability under the behavior policy
    next_state: np.ndarray
    reward: float
    done: bool = False


class ReplayBuffer:
    def __init__(self):
        self.records: list[TransitionRecord] = []

    def add(self, record: TransitionRecord) -> None:
        self.records.append(record)

    def clear(self) -> None:
        self.records.clear()

    def __len__(self) -> int:
        return len(self.records)

    def as_arrays(self):
        states = np.stack([r.state for r in self.records])
        actions = np.stack([r.action for r in self.records])
        log_probs = np.array([r.log_prob for r in self.records])
        next_states = np.stack([r.next_state for r in self.records])
        rewards = np.array([r.reward for r in self.records], dtype=float)
        dones = np.array([r.done for r in self.records], dtype=float)
        return states, actions, log_probs, next_states, rewards, dones


class Policy:
    """Actor emitting one suggestion distribution per creator.

    A shared tanh trunk reads the whole flattened state; each creator's
    logit row combines three terms so that what is learned about a genre
    pools across creators instead of being relearned per row:

        logits[c] = trunk(s) @ U  +  s_row[c] @ V  +  b[c]

    U (global context) and V (response to the creator's own encoded row)
    are shared across creators; b is a per-creator bias that carries
    identity-specific targeting.
    """

    def __init__(self, n_creators: int, n_genres: int, hidden: list[int], rng=None,
                 silence_prior: float = 0.0):
        self.n_creators = n_creators
        self.n_genres = n_genres
        self.n_suggestions = n_genres + 1
        self.row_dim = n_genres + 2
        self.input_dim = n_creators * self.row_dim
        hidden = list(hidden) if hidden else [8]
        self.trunk = MLP([self.input_dim, *hidden], rng, tanh_out=True)
        h = hidden[-1]
        if rng is not None:
            self.U = rng.normal(0.0, 1.0 / np.sqrt(h), size=(h, self.n_suggestions))
            self.V = rng.normal(0.0, 1.0 / np.sqrt(self.row_dim),
                                size=(self.row_dim, self.n_suggestions))
        else:
            self.U = np.zeros((h, self.n_suggestions))
            self.V = np.zeros((self.row_dim, self.n_suggestions))
        self.bias = np.zeros((n_creators, self.n_suggestions))
        if silence_prior:
            # start near the reveal-nothing policy; deviate only where
            # the return gradient finds value
            self.bias[:, 0] += silence_prior

    def _logits(self, states: np.ndarray):
        states = np.atleast_2d(states)
        h, trunk_cache = self.trunk.forward(states)
        rows = states.reshape(len(states), self.n_creators, self.row_dim)
        logits = (h @ self.U)[:, None, :] + rows @ self.V + self.bias[None, :, :]
        return logits, (trunk_cache, h, rows)

    def distribution(self, states: np.ndarray):
        """(probs, log_probs, cache) for a batch of flattened states."""
        logits, cache = self._logits(states)
        logp = log_softmax_rows(logits)
        return np.exp(logp), logp, cache

    def joint_log_prob(self, states: np.ndarray, actions: np.ndarray):
        """Joint log-probability of each stored action; also returns probs and cache."""
        probs, logp, cache = self.distribution(states)
        b = np.arange(len(probs))[:, None]
        c = np.arange(self.n_creators)[None, :]
        joint = logp[b, c, actions].sum(axis=1)
        return joint, probs, cache

    def backward(self, cache, grad_logits: np.ndarray):
        """Parameter gradients from dLoss/dlogits, shape (B, C, S).

        Returns a flat list aligned with `parameters()`.
        """
        trunk_cache, h, rows = cache
        grad_U = np.einsum("bk,bcs->ks", h, grad_logits)
        grad_V = np.einsum("bcm,bcs->ms", rows, grad_logits)
        grad_bias = grad_logits.sum(axis=0)
        grad_h = np.einsum("bcs,ks->bk", grad_logits, self.U)
        trunk_grads = self.trunk.backward(trunk_cache, grad_h)
        flat = []
        for dw, db in trunk_grads:
            flat.extend([dw, db])
        flat.extend([grad_U, grad_V, grad_bias])
        return flat

    def parameters(self) -> list[np.ndarray]:
        return [*self.trunk.parameters(), self.U, self.V, self.bias]

    def get_vector(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.parameters()])

    def set_vector(self, vec: np.ndarray) -> None:
        offset = 0
        for p in self.parameters():
            p[...] = vec[offset:offset + p.size].reshape(p.shape)
            offset += p.size
        if offset != len(vec):
            raise ValueError("parameter vector size mismatch")

    def copy(self) -> "Policy":
        clone = Policy(self.n_creators, self.n_genres, self.trunk.sizes[1:])
        clone.trunk = self.trunk.copy()
        clone.U = self.U.copy()
        clone.V = self.V.copy()
        clone.bias = self.bias.copy()
        return clone


class Critic:
    """State-value network."""

    def __init__(self, n_creators: int, n_genres: int, hidden: list[int], rng=None):
        self.input_dim = n_creators * (n_genres + 2)
        self.net = MLP([self.input_dim, *hidden, 1], rng)

    def values(self, states: np.ndarray) -> np.ndarray:
        return self.net(np.atleast_2d(states))[:, 0]

    def copy(self) -> "Critic":
        clone = Critic.__new__(Critic)
        clone.input_dim = self.input_dim
        clone.net = self.net.copy()
        return clone


def act(policy: Policy, encoded_state: np.ndarray, rng):
    """Sample a platform action from the factored policy.

    Consumes one uniform draw per creator. Returns (action, joint log-prob,
    distribution matrix).
    """
    flat = encoded_state.reshape(1, -1)
    probs, logp, _ = policy.distribution(flat)
    if not np.all(np.isfinite(logp)):
        bad = logp.size - int(np.isfinite(logp).sum())
        raise FloatingPointError(f"actor produced non-finite output ({bad} of {logp.size} entries)")
    probs, logp = probs[0], logp[0]
    action = np.empty(policy.n_creators, dtype=np.int64)
    joint = 0.0
    for c in range(policy.n_creators):
        u = rng.random()
        a = int(np.searchsorted(np.cumsum(probs[c]), u, side="right").clip(0, policy.n_suggestions - 1))
        action[c] = a
        joint += logp[c, a]
    return action, float(joint), probs


def gae(rewards, values, next_values, dones, gamma: float, lam: float) -> np.ndarray:
    """Generalized advantage estimation, truncated at the buffer edge.

    delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t)
    A_t     = sum_l (gamma * lam)^l delta_{t+l}
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    next_values = np.asarray(next_values, dtype=float)
    dones = np.asarray(dones, dtype=float)
    deltas = rewards + gamma * next_values * (1.0 - dones) - values
    adv = np.zeros_like(deltas)
    acc = 0.0
    for t in reversed(range(len(deltas))):
        acc = deltas[t] + gamma * lam * (1.0 - dones[t]) * acc
        adv[t] = acc
    return adv


def clipped_surrogate_terms(ratios, advantages, eps: float, mode: str = "standard_ppo"):
    """Per-sample surrogate values (the loss is minus their sum).

    standard_ppo: min(rho * A, clip(rho) * A)  -- pessimistic for A < 0
    literal_eq2:  min(rho, clip(rho)) * A      -- the ratio is clipped before
                                                  multiplying the advantage
    """
    if eps <= 0:
        raise ConfigError("clip epsilon must be > 0")
    ratios = np.asarray(ratios, dtype=float)
    advantages = np.asarray(advantages, dtype=float)
    clipped = np.clip(ratios, 1.0 - eps, 1.0 + eps)
    if mode == "standard_ppo":
        return np.minimum(ratios * advantages, clipped * advantages)
    if mode == "literal_eq2":
        return np.minimum(ratios, clipped) * advantages
    raise ConfigError(f"unknown surrogate mode {mode!r}")


def _surrogate_dratio(ratios, advantages, eps: float, mode: str):
    # Subgradient of the per-sample surrogate wrt the ratio.
    clipped = np.clip(ratios, 1.0 - eps, 1.0 + eps)
    inside = (ratios >= 1.0 - eps) & (ratios <= 1.0 + eps)
    if mode == "standard_ppo":
        takes_raw = ratios * advantages <= clipped * advantages
        return np.where(takes_raw, advantages, np.where(inside, advantages, 0.0))
    return np.where(ratios <= 1.0 + eps, advantages, 0.0)


def actor_loss_and_grad(policy: Policy, old_log_probs, states, actions, advantages,
                        eps: float, mode: str):
    """Clipped-surrogate loss, its parameter gradients, and diagnostics."""
    joint, probs, cache = policy.joint_log_prob(states, actions)
    ratios = np.exp(joint - old_log_probs)
    terms = clipped_surrogate_terms(ratios, advantages, eps, mode)
    loss = -terms.sum()

    # dLoss/d(joint log-prob) = -(df/drho) * rho
    coeff = -_surrogate_dratio(ratios, advantages, eps, mode) * ratios
    b = np.arange(len(probs))[:, None]
    c = np.arange(policy.n_creators)[None, :]
    grad_rows = -probs * coeff[:, None, None]
    grad_rows[b, c, actions] += coeff[:, None]
    grads = policy.backward(cache, grad_rows)

    diag = {"mean_ratio": float(ratios.mean()),
            "clip_fraction": float(np.mean(np.abs(ratios - 1.0) > eps))}
    return float(loss), grads, diag


def actor_loss(policy: Policy, old_policy: Policy, states, actions, advantages,
               eps: float, mode: str = "standard_ppo") -> float:
    """Scalar clipped-surrogate loss of `policy` against the frozen snapshot."""
    old_logp, _, _ = old_policy.joint_log_prob(states, actions)
    loss, _, _ = actor_loss_and_grad(policy, old_logp, states, actions, advantages, eps, mode)
    return loss


def critic_loss(critic: Critic, states, next_states, rewards, gamma: float,
                targets=None) -> float:
    """Summed squared TD error; pass `targets` to hold the bootstrap fixed."""
    if targets is None:
        targets = np.asarray(rewards, dtype=float) + gamma * critic.values(next_states)
    v = critic.values(states)
    return float(((targets - v) ** 2).sum())


def critic_grad(critic: Critic, states, next_states, rewards, gamma: float):
    """Semi-gradient TD: the bootstrap target is treated as a constant."""
    targets = np.asarray(rewards, dtype=float) + gamma * critic.values(next_states)
    out, cache = critic.net.forward(np.atleast_2d(states))
    v = out[:, 0]
    loss = float(((targets - v) ** 2).sum())
    grad_out = (-2.0 * (targets - v))[:, None]
    grads = critic.net.backward(cache, grad_out)
    return loss, grads, targets


def _finite(grads) -> bool:
    return all(np.all(np.isfinite(g)) for pair in grads for g in pair)


def _flatten_grads(grads):
    out = []
    for dw, db in grads:
        out.extend([dw, db])
    return out


def update(policy: Policy, critic: Critic, buffer: ReplayBuffer, hyper: LearnerConfig,
           actor_opt: Adam | None = None, critic_opt: Adam | None = None) -> dict:
    """One offline-training phase: M full-batch epochs on actor and critic.

    The behavior snapshot (theta_old) is taken once at entry and stays fixed
    across epochs; advantages come from the critic as of entry. Non-finite
    gradients abort the update, restoring the entry parameters.
    """
    states, actions, behavior_logp, next_states, rewards, dones = buffer.as_arrays()
    if actor_opt is None:
        actor_opt = Adam(policy.parameters(), hyper.actor_lr)
    if critic_opt is None:
        critic_opt = Adam(critic.net.parameters(), hyper.critic_lr)

    old_policy = policy.copy()
    old_logp, _, _ = old_policy.joint_log_prob(states, actions)

    values = critic.values(states)
    next_values = critic.values(next_states)
    advantages = gae(rewards, values, next_values, dones, hyper.gamma, hyper.gae_lambda)
    if hyper.normalize_advantages:
        advantages = (advantages - advantages.mean()) / (advantages.std() + 1e-8)

    entry_actor = policy.get_vector()
    entry_critic = critic.net.get_vector()
    aborted = False
    epoch_diags = []
    for _ in range(hyper.epochs_per_update):
        a_loss, a_grads, diag = actor_loss_and_grad(policy, old_logp, states, actions,
                                                    advantages, hyper.clip_eps, hyper.surrogate)
        c_loss, c_grads, _ = critic_grad(critic, states, next_states, rewards, hyper.gamma)
        if not (np.isfinite(a_loss) and np.isfinite(c_loss)
                and all(np.all(np.isfinite(g)) for g in a_grads) and _finite(c_grads)):
            policy.set_vector(entry_actor)
            critic.net.set_vector(entry_critic)
            aborted = True
            break
        if diag["clip_fraction"] > hyper.early_stop_clip_fraction:
            # the buffer has drifted past the trust region; further epochs
            # would be effectively unconstrained
            break
        epoch_diags.append(diag)
        actor_opt.step(a_grads)
        critic_opt.step(_flatten_grads(c_grads))

    post_loss, _, post_diag = actor_loss_and_grad(policy, old_logp, states, actions,
                                                  advantages, hyper.clip_eps, hyper.surrogate)
    post_critic = critic_loss(critic, states, next_states, rewards, hyper.gamma)
    if not epoch_diags:
        epoch_diags = [post_diag]
    return {"actor_loss": post_loss, "critic_loss": post_critic,
            "mean_ratio": float(np.mean([d["mean_ratio"] for d in epoch_diags])),
            "clip_fraction": float(np.mean([d["clip_fraction"] for d in epoch_diags])),
            "mean_reward": float(rewards.mean()), "aborted": aborted}


class ConvergenceDetector:
    """Stop rule: the tracked loss magnitude stays flat (per-step decrease
    below `rel_tol` of the previous value) for `window` consecutive values."""

    def __init__(self, window: int = 10, rel_tol: float = 0.01):
        self.window = window
        self.rel_tol = rel_tol
        self._prev: float | None = None
        self._run = 0

    def update(self, loss: float) -> bool:
        v = abs(float(loss))
        if self._prev is None:
            self._run = 1
        else:
            flat = (self._prev - v) < self.rel_tol * self._prev or v == self._prev
            self._run = self._run + 1 if flat else 1
        self._prev = v
        return self._run >= self.window


@dataclass
class TrainResult:
    policy: Policy
    critic: Critic
    log: list[dict] = field(default_factory=list)
    converged_cycle: int | None = None
    diverged: bool = False
    rng_state: dict = field(default_factory=dict)


def train(env_factory, hyper: LearnerConfig, seed: int = 0) -> TrainResult:
    """Alternate online collection and offline training until convergence.

    `env_factory()` must build an environment exposing `n_creators`,
    `n_genres`, `observation() -> Observation`, and
    `apply(action) -> (reward, Observation)`. The buffer is cleared at the
    start of every cycle; the convergence rule watches the post-update
    policy loss. Returns the learned networks and the per-cycle log.
    """
    env = env_factory()
    init_rng = stream_rng(seed, "lore-init")
    action_rng = stream_rng(seed, "lore-action")
    policy = Policy(env.n_creators, env.n_genres, hyper.hidden, init_rng,
                    silence_prior=hyper.silence_prior)
    critic = Critic(env.n_creators, env.n_genres, hyper.hidden, init_rng)
    actor_opt = Adam(policy.parameters(), hyper.actor_lr)
    critic_opt = Adam(critic.net.parameters(), hyper.critic_lr)
    detector = ConvergenceDetector(hyper.convergence_window, hyper.convergence_rel_tol)
    buffer = ReplayBuffer()
    result = TrainResult(policy=policy, critic=critic)

    n_cycles = hyper.max_train_rounds // hyper.rounds_per_cycle
    obs = env.observation()
    for cycle in range(1, n_cycles + 1):
        buffer.clear()
        for _ in range(hyper.rounds_per_cycle):
            enc = encode(obs, env.n_genres).ravel()
            action, logp, _ = act(policy, enc, action_rng)
            reward, next_obs = env.apply(action)
            enc_next = encode(next_obs, env.n_genres).ravel()
            buffer.add(TransitionRecord(state=enc, action=action, log_prob=logp,
                                        next_state=enc_next, reward=float(reward)))
            obs = next_obs
        diag = update(policy, critic, buffer, hyper, actor_opt, critic_opt)
        result.log.append({"cycle": cycle, "policy_loss": diag["actor_loss"],
                           "critic_loss": diag["critic_loss"],
                           "mean_reward": diag["mean_reward"],
                           "clip_fraction": diag["clip_fraction"]})
        if not (np.isfinite(diag["actor_loss"]) and np.isfinite(diag["critic_loss"])):
            result.diverged = True
            break
        if detector.update(diag["actor_loss"]):
            result.converged_cycle = cycle
            break
    result.rng_state = {"lore-action": action_rng.bit_generator.state}
    return result


# --- checkpointing ----------------------------------------------------------

def save_checkpoint(path, policy: Policy, critic: Critic, hyper: LearnerConfig,
                    trust_logits=None, rng_states: dict | None = None) -> None:
    doc = {
        "version": CHECKPOINT_VERSION,
        "n_creators": policy.n_creators,
        "n_genres": policy.n_genres,
        "hyper": hyper.__dict__,
        "actor": {"trunk": _mlp_to_doc(policy.trunk),
                  "U": policy.U.tolist(), "V": policy.V.tolist(),
                  "bias": policy.bias.tolist()},
        "critic": _mlp_to_doc(critic.net),
        "trust_logits": None if trust_logits is None else list(map(float, trust_logits)),
        "rng": rng_states or {},
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f)


def load_checkpoint(path):
    """Returns (policy, critic, hyper, trust_logits, rng_states)."""
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')!r}")
    hyper = LearnerConfig.from_dict(doc["hyper"])
    policy = Policy(doc["n_creators"], doc["n_genres"], doc["actor"]["trunk"]["sizes"][1:])
    policy.trunk = _mlp_from_doc(doc["actor"]["trunk"], tanh_out=True)
    policy.U = np.array(doc["actor"]["U"])
    policy.V = np.array(doc["actor"]["V"])
    policy.bias = np.array(doc["actor"]["bias"])
    critic = Critic.__new__(Critic)
    critic.input_dim = doc["n_creators"] * (doc["n_genres"] + 2)
    critic.net = _mlp_from_doc(doc["critic"])
    trust = None if doc["trust_logits"] is None else np.array(doc["trust_logits"])
    return policy, critic, hyper, trust, doc["rng"]


def _mlp_to_doc(net: MLP) -> dict:
    return {"sizes": net.sizes, "weights": [w.tolist() for w in net.weights],
            "biases": [b.tolist() for b in net.biases]}


def _mlp_from_doc(doc: dict, tanh_out: bool = False) -> MLP:
    net = MLP(doc["sizes"], tanh_out=tanh_out)
    net.weights = [np.array(w) for w in doc["weights"]]
    net.biases = [np.array(b) for b in doc["biases"]]
    return net
