"""World state and the per-round interaction loop.

One `step` runs a full round: suggestions go out, active creators produce
items, active users receive recommendations and click, then churn and
trust dynamics are applied. All randomness comes from named streams on the
state, so a run is a pure function of (config, seed).

Per-round draw order (the determinism contract, relied on by tests):
  1. creator activity   - one uniform per creator slot, in index order
  2. creator decisions  - for each active alive creator in index order:
                          one uniform for the trust gate if suggested, then
                          the fallback's draws if not followed
  3. item quality       - one normal per created item, in creation order
  4. user activity      - one uniform per user, in index order
  5. clicks             - for each active user in index order, one uniform
                          per recommended item in list order
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .audience import UserRecord, click_probabilities, generate_population
from .config import ConfigError, RunConfig
from .creators import (NO_SUGGESTION, CfdState, CreatorRecord, HistoryEntry, SimuLineState,
                       decide, update_trust, update_trust_unfollow_decay)
from .rngs import RngStreams
from .sampling import sample_truncated_gaussian

NO_ITEM = -1

SNAPSHOT_VERSION = 1


@dataclass
class Item:
    """Read-only view of one corpus row."""

    id: int
    creator: int
    genre: int
    round_created: int
    total_clicks: int
    quality: float


class Corpus:
    """Columnar item store (append-only, amortized O(1) growth)."""

    _COLS = ("creators", "genres", "rounds_created", "qualities", "clicks", "impressions")

    def __init__(self, capacity: int = 256):
        self._n = 0
        self.creators = np.zeros(capacity, dtype=np.int64)
        self.genres = np.zeros(capacity, dtype=np.int64)
        self.rounds_created = np.zeros(capacity, dtype=np.int64)
        self.qualities = np.zeros(capacity, dtype=np.float64)
        self.clicks = np.zeros(capacity, dtype=np.int64)
        self.impressions = np.zeros(capacity, dtype=np.int64)

    @property
    def n_items(self) -> int:
        return self._n

    def __len__(self) -> int:
        return self._n

    def _grow(self) -> None:
        for name in self._COLS:
            col = getattr(self, name)
            new = np.zeros(max(2 * len(col), 8), dtype=col.dtype)
            new[:self._n] = col[:self._n]
            setattr(self, name, new)

    def add_item(self, creator: int, genre: int, round_created: int, quality: float) -> int:
        if self._n == len(self.creators):
            self._grow()
        i = self._n
        self.creators[i] = creator
        self.genres[i] = genre
        self.rounds_created[i] = round_created
        self.qualities[i] = quality
        self.clicks[i] = 0
        self.impressions[i] = 0
        self._n += 1
        return i

    def item(self, item_id: int) -> Item:
        if not 0 <= item_id < self._n:
            raise IndexError(f"item {item_id} not in corpus of size {self._n}")
        return Item(id=item_id, creator=int(self.creators[item_id]),
                    genre=int(self.genres[item_id]),
                    round_created=int(self.rounds_created[item_id]),
                    total_clicks=int(self.clicks[item_id]),
                    quality=float(self.qualities[item_id]))


class ClickLog:
    """Sparse click records; equivalent to a binary (item, user, round) matrix."""

    def __init__(self):
        self.items: list[int] = []
        self.users: list[int] = []
        self.rounds: list[int] = []
        self.per_round_totals: list[int] = []

    def add(self, item: int, user: int, round_index: int) -> None:
        self.items.append(item)
        self.users.append(user)
        self.rounds.append(round_index)

    def close_round(self, count: int) -> None:
        self.per_round_totals.append(count)

    @property
    def total(self) -> int:
        return len(self.items)


@dataclass
class Observation:
    """MDP state for one round: per-creator produced genre + predicted trust."""

    genres: np.ndarray  # (n_creators,), NO_ITEM where nothing was created
    trust: np.ndarray   # (n_creators,) predicted trust in [0,1]


@dataclass
class StepResult:
    reward: int
    follow_observations: list[tuple[int, bool]]
    departures: list[int]
    record: dict  # event-log entry for the round


@dataclass
class EcosystemState:
    config: RunConfig
    seed: int
    rngs: RngStreams
    creators: list[CreatorRecord]
    users: list[UserRecord]
    corpus: Corpus
    click_log: ClickLog
    round: int = 0  # completed rounds; the next step executes round+1
    last_round_genres: np.ndarray = None
    genre_click_totals: np.ndarray = None
    prev_creator_clicks: np.ndarray = None          # per-creator clicks in the previous round
    prev_creator_genre_clicks: np.ndarray = None    # (C, G) clicks on each creator's items last round
    history_index: dict[int, HistoryEntry] = field(default_factory=dict)

    @property
    def n_creators(self) -> int:
        return len(self.creators)

    @property
    def n_genres(self) -> int:
        return self.config.populations.genres

    def alive_creators(self) -> list[int]:
        return [c.id for c in self.creators if c.alive]


def _make_fallback_state(tag: str, config: RunConfig) -> CfdState | SimuLineState | None:
    g = config.populations.genres
    if tag == "cfd":
        return CfdState(genre_logits=np.zeros(g), learning_rate=config.creators.cfd_learning_rate)
    if tag == "simuline":
        return SimuLineState(recent_clicks=np.zeros(g), alpha=config.creators.simuline_alpha)
    return None


def _assign_fallbacks(mix: dict[str, float], n: int) -> list[str]:
    # Largest-remainder apportionment; deterministic in dict insertion order.
    tags = list(mix)
    raw = [mix[t] * n for t in tags]
    counts = [int(x) for x in raw]
    remainders = sorted(range(len(tags)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in remainders[:n - sum(counts)]:
        counts[i] += 1
    out = []
    for tag, c in zip(tags, counts):
        out.extend([tag] * c)
    return out


def build_state(config: RunConfig, seed: int | None = None) -> EcosystemState:
    """Fresh world from config. Init draw order: users, creator trust +
    activity, then seed-history genres (init stream) and qualities
    (item-quality stream)."""
    seed = config.seed if seed is None else seed
    rngs = RngStreams(seed)
    init_rng = rngs.get("init")

    users = generate_population(config.populations, init_rng)

    n_creators = config.populations.creators
    trust_cfg = config.trust
    trusts = [sample_truncated_gaussian(trust_cfg.init_mu, trust_cfg.init_sigma, 0.0, 1.0, init_rng)
              for _ in range(n_creators)]
    activities = config.populations.creator_activity.sample(n_creators, init_rng)
    fallbacks = _assign_fallbacks(config.creators.fallback_mix, n_creators)

    creators = [CreatorRecord(id=i, trust_true=trusts[i], activity_prob=activities[i],
                              fallback_model=fallbacks[i],
                              fallback_state=_make_fallback_state(fallbacks[i], config))
                for i in range(n_creators)]

    g = config.populations.genres
    state = EcosystemState(
        config=config, seed=seed, rngs=rngs, creators=creators, users=users,
        corpus=Corpus(), click_log=ClickLog(),
        last_round_genres=np.full(n_creators, NO_ITEM, dtype=np.int64),
        genre_click_totals=np.zeros(g, dtype=np.int64),
        prev_creator_clicks=np.zeros(n_creators, dtype=np.int64),
        prev_creator_genre_clicks=np.zeros((n_creators, g), dtype=np.int64),
    )

    seed_cfg = config.populations.creator_seed_history
    if seed_cfg.items_per_creator > 0:
        pool = np.array(seed_cfg.genres if seed_cfg.genres is not None else range(g), dtype=int)
        quality_rng = rngs.get("item-quality")
        for creator in creators:
            for _ in range(seed_cfg.items_per_creator):
                genre = int(pool[init_rng.integers(len(pool))])
                quality = float(quality_rng.normal(0.0, config.click_model.quality_sd))
                _record_creation(state, creator, genre, quality, round_created=0)
            if isinstance(creator.fallback_state, CfdState) and config.creators.cfd_seed_logit:
                # seeded history tilts the creator's initial strategy too
                for entry in creator.history:
                    creator.fallback_state.genre_logits[entry.genre] += config.creators.cfd_seed_logit
    return state


def _record_creation(state: EcosystemState, creator: CreatorRecord, genre: int,
                     quality: float, round_created: int) -> int:
    item_id = state.corpus.add_item(creator.id, genre, round_created, quality)
    entry = HistoryEntry(item_id=item_id, genre=genre, clicks=0)
    creator.history.append(entry)
    state.history_index[item_id] = entry
    return item_id


def step(state: EcosystemState, action: np.ndarray, recommender) -> StepResult:
    """Advance the world by one round under the given per-creator suggestions.

    Returns the round reward (total clicks), the follow observations for the
    trust estimator, the departures, and the event-log record.
    """
    action = np.asarray(action)
    if len(action) != state.n_creators:
        raise ConfigError(f"action has {len(action)} entries for {state.n_creators} creators")

    cfg = state.config
    n_genres = state.n_genres
    round_index = state.round + 1

    activity_rng = state.rngs.get("creator-activity")
    decision_rng = state.rngs.get("creator-decision")
    quality_rng = state.rngs.get("item-quality")
    user_rng = state.rngs.get("user-activity")
    click_rng = state.rngs.get("click")

    # (1) creator activity: one draw per slot keeps the stream aligned even
    # after departures
    active_draws = [activity_rng.random() for _ in state.creators]
    active = [c.alive and active_draws[c.id] < c.activity_prob for c in state.creators]

    # (2) creations
    created = []  # event-log entries
    created_flags = [False] * state.n_creators
    follow_observations: list[tuple[int, bool]] = []
    followed_flags = [False] * state.n_creators
    suggested_flags = [False] * state.n_creators
    round_genres = np.full(state.n_creators, NO_ITEM, dtype=np.int64)
    for creator in state.creators:
        if not active[creator.id]:
            continue
        suggestion = int(action[creator.id])
        if not 0 <= suggestion <= n_genres:
            raise ConfigError(f"suggestion {suggestion} out of range for {n_genres} genres")
        decision = decide(creator, suggestion, decision_rng, n_genres,
                          last_round_feedback=state.prev_creator_genre_clicks[creator.id].astype(float))
        quality = float(quality_rng.normal(0.0, cfg.click_model.quality_sd))
        _record_creation(state, creator, decision.genre, quality, round_created=round_index)
        created_flags[creator.id] = True
        round_genres[creator.id] = decision.genre
        if suggestion != NO_SUGGESTION:
            follow_observations.append((creator.id, decision.followed))
            followed_flags[creator.id] = decision.followed
            suggested_flags[creator.id] = True
        created.append({"creator": creator.id, "genre": decision.genre,
                        "followed": decision.followed,
                        "suggested": suggestion})

    # (3) user activity
    user_draws = [user_rng.random() for _ in state.users]
    active_users = [u for u in state.users if user_draws[u.id] < u.activity_prob]

    # (4) recommendations (optionally re-ranked for a minimum creator exposure)
    corpus = state.corpus
    rec_lists = [recommender.recommend(user, corpus, cfg.populations.k) for user in active_users]
    guarantee = cfg.recommender.min_exposure
    if guarantee > 0 and corpus.n_items > 0 and rec_lists:
        from .recommender import min_exposure_rerank
        scores = [recommender.scores(user, corpus) for user in active_users]
        alive = np.array([c.alive for c in state.creators])
        rec_lists = min_exposure_rerank(rec_lists, scores,
                                        corpus.creators[:corpus.n_items], alive,
                                        guarantee).lists

    # (5) clicks
    reward = 0
    click_entries = []
    creator_clicks = np.zeros(state.n_creators, dtype=np.int64)
    creator_genre_clicks = np.zeros((state.n_creators, n_genres), dtype=np.int64)
    for user, rec_ids in zip(active_users, rec_lists):
        if not rec_ids:
            continue
        ids = np.array(rec_ids, dtype=int)
        corpus.impressions[ids] += 1
        probs = click_probabilities(user, corpus.genres[ids], corpus.qualities[ids],
                                    cfg.click_model)
        for item_id, p in zip(rec_ids, probs):
            if click_rng.random() < p:
                reward += 1
                state.click_log.add(item_id, user.id, round_index)
                click_entries.append({"user": user.id, "item": item_id})
                corpus.clicks[item_id] += 1
                state.history_index[item_id].clicks += 1
                c = int(corpus.creators[item_id])
                g = int(corpus.genres[item_id])
                creator_clicks[c] += 1
                creator_genre_clicks[c, g] += 1
                state.genre_click_totals[g] += 1

    # (6) churn
    state._round_created = created_flags
    state._round_creator_clicks = creator_clicks
    departures = apply_churn(state)

    # (7) trust dynamics
    if cfg.trust.dynamic:
        for creator in state.creators:
            if cfg.trust.update_rule == "click_delta":
                update_trust(creator, followed_flags[creator.id],
                             int(state.prev_creator_clicks[creator.id]),
                             int(creator_clicks[creator.id]))
            else:
                update_trust_unfollow_decay(creator, followed_flags[creator.id],
                                            suggested_flags[creator.id],
                                            int(state.prev_creator_clicks[creator.id]),
                                            int(creator_clicks[creator.id]),
                                            cfg.trust.unfollow_penalty)

    # (8) bookkeeping for the next round
    state.prev_creator_clicks = creator_clicks
    state.prev_creator_genre_clicks = creator_genre_clicks
    state.last_round_genres = round_genres
    for creator in state.creators:
        if isinstance(creator.fallback_state, SimuLineState):
            creator.fallback_state.recent_clicks = creator_genre_clicks[creator.id].astype(float)
    state.click_log.close_round(reward)
    state.round = round_index

    record = {"round": round_index, "reward": reward, "created": created,
              "departures": departures, "clicks": click_entries}
    return StepResult(reward=reward, follow_observations=follow_observations,
                      departures=departures, record=record)


def apply_churn(state: EcosystemState) -> list[int]:
    """Departure rule: `churn_threshold` consecutive creation rounds with zero
    clicks. Any click on any of the creator's items resets the streak;
    rounds without a creation leave it untouched. Departure is absorbing.
    """
    created = getattr(state, "_round_created", [False] * state.n_creators)
    clicks = getattr(state, "_round_creator_clicks", np.zeros(state.n_creators, dtype=np.int64))
    departed = []
    for creator in state.creators:
        if not creator.alive:
            continue
        if clicks[creator.id] > 0:
            creator.zero_click_streak = 0
        elif created[creator.id]:
            creator.zero_click_streak += 1
        if creator.zero_click_streak >= state.config.churn_threshold:
            creator.alive = False
            departed.append(creator.id)
    return departed


def observe(state: EcosystemState, trust_estimates: np.ndarray) -> Observation:
    """MDP observation after the last completed round."""
    trust_estimates = np.asarray(trust_estimates, dtype=float)
    if len(trust_estimates) != state.n_creators:
        raise ConfigError("trust_estimates length must equal the creator count")
    return Observation(genres=state.last_round_genres.copy(), trust=trust_estimates.copy())


# --- persistence ------------------------------------------------------------

def _creator_to_doc(c: CreatorRecord) -> dict:
    doc = {"id": c.id, "trust_true": c.trust_true, "activity_prob": c.activity_prob,
           "fallback_model": c.fallback_model,
           "history": [[e.item_id, e.genre, e.clicks] for e in c.history],
           "zero_click_streak": c.zero_click_streak, "alive": c.alive}
    fs = c.fallback_state
    if isinstance(fs, CfdState):
        doc["fallback_state"] = {"kind": "cfd", "genre_logits": fs.genre_logits.tolist(),
                                 "learning_rate": fs.learning_rate}
    elif isinstance(fs, SimuLineState):
        doc["fallback_state"] = {"kind": "simuline", "recent_clicks": fs.recent_clicks.tolist(),
                                 "alpha": fs.alpha}
    else:
        doc["fallback_state"] = None
    return doc


def _creator_from_doc(doc: dict) -> CreatorRecord:
    fs_doc = doc["fallback_state"]
    fs = None
    if fs_doc is not None:
        if fs_doc["kind"] == "cfd":
            fs = CfdState(genre_logits=np.array(fs_doc["genre_logits"], dtype=float),
                          learning_rate=fs_doc["learning_rate"])
        else:
            fs = SimuLineState(recent_clicks=np.array(fs_doc["recent_clicks"], dtype=float),
                               alpha=fs_doc["alpha"])
    return CreatorRecord(
        id=doc["id"], trust_true=doc["trust_true"], activity_prob=doc["activity_prob"],
        fallback_model=doc["fallback_model"], fallback_state=fs,
        history=[HistoryEntry(item_id=i, genre=g, clicks=k) for i, g, k in doc["history"]],
        zero_click_streak=doc["zero_click_streak"], alive=doc["alive"])


def state_to_snapshot(state: EcosystemState) -> dict:
    n = state.corpus.n_items
    return {
        "version": SNAPSHOT_VERSION,
        "config": state.config.to_dict(),
        "seed": state.seed,
        "round": state.round,
        "creators": [_creator_to_doc(c) for c in state.creators],
        "users": [{"id": u.id, "genre_affinity": u.genre_affinity.tolist(),
                   "activity_prob": u.activity_prob} for u in state.users],
        "corpus": {name: getattr(state.corpus, name)[:n].tolist() for name in Corpus._COLS},
        "click_log": {"items": state.click_log.items, "users": state.click_log.users,
                      "rounds": state.click_log.rounds,
                      "per_round_totals": state.click_log.per_round_totals},
        "last_round_genres": state.last_round_genres.tolist(),
        "genre_click_totals": state.genre_click_totals.tolist(),
        "prev_creator_clicks": state.prev_creator_clicks.tolist(),
        "prev_creator_genre_clicks": state.prev_creator_genre_clicks.tolist(),
        "rng": state.rngs.state(),
    }


def state_from_snapshot(doc: dict) -> EcosystemState:
    if doc.get("version") != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {doc.get('version')!r}")
    config = RunConfig.from_dict(doc["config"])
    corpus = Corpus(capacity=max(len(doc["corpus"]["creators"]), 8))
    for creator, genre, rnd, quality in zip(doc["corpus"]["creators"], doc["corpus"]["genres"],
                                            doc["corpus"]["rounds_created"],
                                            doc["corpus"]["qualities"]):
        corpus.add_item(creator, genre, rnd, quality)
    n = corpus.n_items
    corpus.clicks[:n] = doc["corpus"]["clicks"]
    corpus.impressions[:n] = doc["corpus"]["impressions"]

    click_log = ClickLog()
    click_log.items = list(doc["click_log"]["items"])
    click_log.users = list(doc["click_log"]["users"])
    click_log.rounds = list(doc["click_log"]["rounds"])
    click_log.per_round_totals = list(doc["click_log"]["per_round_totals"])

    creators = [_creator_from_doc(d) for d in doc["creators"]]
    users = [UserRecord(id=d["id"], genre_affinity=np.array(d["genre_affinity"], dtype=float),
                        activity_prob=d["activity_prob"]) for d in doc["users"]]

    rngs = RngStreams(doc["seed"])
    rngs.restore(doc["rng"])

    state = EcosystemState(
        config=config, seed=doc["seed"], rngs=rngs, creators=creators, users=users,
        corpus=corpus, click_log=click_log, round=doc["round"],
        last_round_genres=np.array(doc["last_round_genres"], dtype=np.int64),
        genre_click_totals=np.array(doc["genre_click_totals"], dtype=np.int64),
        prev_creator_clicks=np.array(doc["prev_creator_clicks"], dtype=np.int64),
        prev_creator_genre_clicks=np.array(doc["prev_creator_genre_clicks"], dtype=np.int64),
    )
    state.history_index = {e.item_id: e for c in creators for e in c.history}
    return state


def save_snapshot(state: EcosystemState, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(state_to_snapshot(state), f)


def load_snapshot(path) -> EcosystemState:
    with open(path, "r", encoding="utf-8") as f:
        return state_from_snapshot(json.load(f))
