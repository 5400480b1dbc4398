"""Run configuration: schema, validation, (de)serialization.

A run config is a nested key/value document (YAML on disk). Loading is
strict: unknown keys are rejected and every field is range-checked, so a
typo'd experiment fails immediately instead of silently using a default.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any

import yaml

FALLBACK_TAGS = ("random_history", "most_history_click", "cfd", "simuline")
RECOMMENDER_TAGS = ("oracle_affinity", "empirical_ctr", "mf_lite", "popularity")
STRATEGY_TAGS = ("none", "most_click", "most_history_click", "lore")
AFFINITY_KINDS = ("one_hot_noise", "dirichlet", "csv")
SURROGATE_MODES = ("standard_ppo", "literal_eq2")
TRUST_UPDATE_RULES = ("click_delta", "unfollow_decay")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


def _check_keys(section: str, data: dict, allowed: set[str]) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {sorted(unknown)}")


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


@dataclass
class ActivityConfig:
    """Per-agent activity probability distribution."""

    kind: str = "constant"  # "constant" | "uniform"
    value: float = 0.8      # constant kind
    lo: float = 0.5         # uniform kind
    hi: float = 1.0

    @classmethod
    def from_dict(cls, section: str, data: dict) -> "ActivityConfig":
        _check_keys(section, data, {"kind", "value", "lo", "hi"})
        cfg = cls(**data)
        _require(cfg.kind in ("constant", "uniform"), f"{section}.kind: unknown kind {cfg.kind!r}")
        _require(0.0 <= cfg.value <= 1.0, f"{section}.value must be in [0,1]")
        _require(0.0 <= cfg.lo <= cfg.hi <= 1.0, f"{section}: need 0 <= lo <= hi <= 1")
        return cfg

    def sample(self, n: int, rng) -> "list[float]":
        if self.kind == "constant":
            return [self.value] * n
        return [float(x) for x in rng.uniform(self.lo, self.hi, size=n)]


@dataclass
class UserAffinityConfig:
    kind: str = "one_hot_noise"
    noise_sd: float = 0.05
    dirichlet_alpha: float = 0.3
    skew: float = 0.0
    favorite_genres: list[int] | None = None  # None = all genres eligible
    csv_path: str | None = None

    @classmethod
    def from_dict(cls, section: str, data: dict) -> "UserAffinityConfig":
        _check_keys(section, data, {"kind", "noise_sd", "dirichlet_alpha", "skew",
                                    "favorite_genres", "csv_path"})
        cfg = cls(**data)
        _require(cfg.kind in AFFINITY_KINDS, f"{section}.kind: unknown kind {cfg.kind!r}")
        _require(0.0 <= cfg.skew <= 1.0, f"{section}.skew must be in [0,1]")
        _require(cfg.noise_sd >= 0.0, f"{section}.noise_sd must be >= 0")
        _require(cfg.dirichlet_alpha > 0.0, f"{section}.dirichlet_alpha must be > 0")
        _require(cfg.kind != "csv" or cfg.csv_path is not None,
                 f"{section}: kind 'csv' requires csv_path")
        return cfg


@dataclass
class SeedHistoryConfig:
    """Items pre-created before round 1 (gives creators a starting history)."""

    genres: list[int] | None = None  # None = any genre
    items_per_creator: int = 0

    @classmethod
    def from_dict(cls, section: str, data: dict) -> "SeedHistoryConfig":
        _check_keys(section, data, {"genres", "items_per_creator"})
        cfg = cls(**data)
        _require(cfg.items_per_creator >= 0, f"{section}.items_per_creator must be >= 0")
        _require(cfg.genres is None or len(cfg.genres) > 0, f"{section}.genres must be nonempty or null")
        return cfg


@dataclass
class PopulationsConfig:
    creators: int = 50
    users: int = 100
    genres: int = 14
    k: int = 5
    user_affinity: UserAffinityConfig = field(default_factory=UserAffinityConfig)
    user_activity: ActivityConfig = field(default_factory=ActivityConfig)
    creator_activity: ActivityConfig = field(default_factory=lambda: ActivityConfig(value=0.9))
    creator_seed_history: SeedHistoryConfig = field(default_factory=SeedHistoryConfig)

    @classmethod
    def from_dict(cls, data: dict) -> "PopulationsConfig":
        _check_keys("populations", data, {"creators", "users", "genres", "k", "user_affinity",
                                          "user_activity", "creator_activity",
                                          "creator_seed_history"})
        cfg = cls(
            creators=data.get("creators", 50),
            users=data.get("users", 100),
            genres=data.get("genres", 14),
            k=data.get("k", 5),
            user_affinity=UserAffinityConfig.from_dict(
                "populations.user_affinity", data.get("user_affinity", {})),
            user_activity=ActivityConfig.from_dict(
                "populations.user_activity", data.get("user_activity", {})),
            creator_activity=ActivityConfig.from_dict(
                "populations.creator_activity", data.get("creator_activity", {"value": 0.9})),
            creator_seed_history=SeedHistoryConfig.from_dict(
                "populations.creator_seed_history", data.get("creator_seed_history", {})),
        )
        _require(cfg.creators >= 1, "populations.creators must be >= 1")
        _require(cfg.users >= 0, "populations.users must be >= 0")
        _require(cfg.genres >= 1, "populations.genres must be >= 1")
        _require(cfg.k >= 1, "populations.k must be >= 1")
        for g in cfg.user_affinity.favorite_genres or []:
            _require(0 <= g < cfg.genres, f"user_affinity.favorite_genres: genre {g} out of range")
        for g in cfg.creator_seed_history.genres or []:
            _require(0 <= g < cfg.genres, f"creator_seed_history.genres: genre {g} out of range")
        return cfg


@dataclass
class ClickModelConfig:
    bias: float = -4.0
    affinity_weight: float = 6.0
    quality_weight: float = 1.0
    quality_sd: float = 0.5

    @classmethod
    def from_dict(cls, data: dict) -> "ClickModelConfig":
        _check_keys("click_model", data, {"bias", "affinity_weight", "quality_weight", "quality_sd"})
        cfg = cls(**data)
        _require(cfg.quality_sd >= 0.0, "click_model.quality_sd must be >= 0")
        return cfg


@dataclass
class TrustEstimatorConfig:
    lr: float = 0.5
    epochs_per_round: int = 50
    decay_half_life: float = 20.0  # rounds; applied only when trust is dynamic

    @classmethod
    def from_dict(cls, data: dict) -> "TrustEstimatorConfig":
        _check_keys("trust.estimator", data, {"lr", "epochs_per_round", "decay_half_life"})
        cfg = cls(**data)
        _require(cfg.lr > 0, "trust.estimator.lr must be > 0")
        _require(cfg.epochs_per_round >= 0, "trust.estimator.epochs_per_round must be >= 0")
        _require(cfg.decay_half_life > 0, "trust.estimator.decay_half_life must be > 0")
        return cfg


@dataclass
class TrustConfig:
    init_mu: float = 0.5
    init_sigma: float = 1.0
    dynamic: bool = False
    update_rule: str = "click_delta"
    unfollow_penalty: float = 0.05  # only used by the "unfollow_decay" rule
    estimator: TrustEstimatorConfig = field(default_factory=TrustEstimatorConfig)

    @classmethod
    def from_dict(cls, data: dict) -> "TrustConfig":
        _check_keys("trust", data, {"init_mu", "init_sigma", "dynamic", "update_rule",
                                    "unfollow_penalty", "estimator"})
        cfg = cls(
            init_mu=data.get("init_mu", 0.5),
            init_sigma=data.get("init_sigma", 1.0),
            dynamic=data.get("dynamic", False),
            update_rule=data.get("update_rule", "click_delta"),
            unfollow_penalty=data.get("unfollow_penalty", 0.05),
            estimator=TrustEstimatorConfig.from_dict(data.get("estimator", {})),
        )
        _require(cfg.init_sigma > 0, "trust.init_sigma must be > 0")
        _require(cfg.update_rule in TRUST_UPDATE_RULES,
                 f"trust.update_rule must be one of {TRUST_UPDATE_RULES}")
        _require(cfg.unfollow_penalty >= 0, "trust.unfollow_penalty must be >= 0")
        return cfg


@dataclass
class CreatorsConfig:
    fallback_mix: dict[str, float] = field(default_factory=lambda: {"random_history": 1.0})
    cfd_learning_rate: float = 0.1
    cfd_seed_logit: float = 0.0  # initial logit weight per seeded-history item
    simuline_alpha: float = 1.0

    @classmethod
    def from_dict(cls, data: dict) -> "CreatorsConfig":
        _check_keys("creators", data, {"fallback_mix", "cfd_learning_rate", "cfd_seed_logit",
                                       "simuline_alpha"})
        cfg = cls(
            fallback_mix=dict(data.get("fallback_mix", {"random_history": 1.0})),
            cfd_learning_rate=data.get("cfd_learning_rate", 0.1),
            cfd_seed_logit=data.get("cfd_seed_logit", 0.0),
            simuline_alpha=data.get("simuline_alpha", 1.0),
        )
        _require(len(cfg.fallback_mix) > 0, "creators.fallback_mix must be nonempty")
        for tag, frac in cfg.fallback_mix.items():
            _require(tag in FALLBACK_TAGS, f"creators.fallback_mix: unknown model tag {tag!r}")
            _require(frac >= 0, "creators.fallback_mix fractions must be >= 0")
        total = sum(cfg.fallback_mix.values())
        _require(abs(total - 1.0) < 1e-9, f"creators.fallback_mix fractions must sum to 1, got {total}")
        _require(cfg.cfd_learning_rate > 0, "creators.cfd_learning_rate must be > 0")
        _require(cfg.simuline_alpha >= 0, "creators.simuline_alpha must be >= 0")
        return cfg


@dataclass
class MfConfig:
    dims: int = 16
    epochs: int = 5
    lr: float = 0.05
    reg: float = 0.01
    retrain_every: int = 5
    negatives: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "MfConfig":
        _check_keys("recommender.mf", data, {"dims", "epochs", "lr", "reg", "retrain_every", "negatives"})
        cfg = cls(**data)
        _require(cfg.dims >= 1, "recommender.mf.dims must be >= 1")
        _require(cfg.retrain_every >= 1, "recommender.mf.retrain_every must be >= 1")
        return cfg


@dataclass
class RecommenderConfig:
    kind: str = "oracle_affinity"
    mf: MfConfig = field(default_factory=MfConfig)
    min_exposure: int = 0  # per-creator impression guarantee per round; 0 = off

    @classmethod
    def from_dict(cls, data: dict) -> "RecommenderConfig":
        _check_keys("recommender", data, {"kind", "mf", "min_exposure"})
        cfg = cls(
            kind=data.get("kind", "oracle_affinity"),
            mf=MfConfig.from_dict(data.get("mf", {})),
            min_exposure=data.get("min_exposure", 0),
        )
        _require(cfg.kind in RECOMMENDER_TAGS, f"recommender.kind must be one of {RECOMMENDER_TAGS}")
        _require(cfg.min_exposure >= 0, "recommender.min_exposure must be >= 0")
        return cfg


@dataclass
class LearnerConfig:
    gamma: float = 0.95
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    actor_lr: float = 3e-4
    critic_lr: float = 1e-3
    hidden: list[int] = field(default_factory=lambda: [128, 128])
    rounds_per_cycle: int = 16   # N: transitions collected per buffer
    epochs_per_update: int = 10  # M: full-batch gradient epochs per buffer
    max_train_rounds: int = 3000
    surrogate: str = "standard_ppo"
    normalize_advantages: bool = True
    silence_prior: float = 0.0  # initial logit bonus on the no-suggestion column
    early_stop_clip_fraction: float = 1.0  # stop the epoch loop once this many samples are clipped
    convergence_window: int = 10
    convergence_rel_tol: float = 0.01

    @classmethod
    def from_dict(cls, data: dict) -> "LearnerConfig":
        _check_keys("strategy.learner", data, {f.name for f in dataclasses.fields(cls)})
        cfg = cls(**{k: (list(v) if k == "hidden" else v) for k, v in data.items()})
        _require(0.0 <= cfg.gamma <= 1.0, "learner.gamma must be in [0,1]")
        _require(0.0 <= cfg.gae_lambda <= 1.0, "learner.gae_lambda must be in [0,1]")
        _require(cfg.clip_eps > 0, "learner.clip_eps must be > 0")
        _require(cfg.rounds_per_cycle >= 1, "learner.rounds_per_cycle must be >= 1")
        _require(cfg.epochs_per_update >= 0, "learner.epochs_per_update must be >= 0")
        _require(cfg.max_train_rounds >= cfg.rounds_per_cycle,
                 "learner.max_train_rounds must allow at least one cycle")
        _require(cfg.surrogate in SURROGATE_MODES,
                 f"learner.surrogate must be one of {SURROGATE_MODES}")
        _require(cfg.convergence_window >= 2, "learner.convergence_window must be >= 2")
        _require(cfg.convergence_rel_tol > 0, "learner.convergence_rel_tol must be > 0")
        _require(all(h >= 1 for h in cfg.hidden), "learner.hidden sizes must be >= 1")
        return cfg


@dataclass
class StrategyConfig:
    tag: str = "none"
    learner: LearnerConfig = field(default_factory=LearnerConfig)

    @classmethod
    def from_dict(cls, data: dict) -> "StrategyConfig":
        _check_keys("strategy", data, {"tag", "learner"})
        cfg = cls(
            tag=data.get("tag", "none"),
            learner=LearnerConfig.from_dict(data.get("learner", {})),
        )
        _require(cfg.tag in STRATEGY_TAGS, f"strategy.tag must be one of {STRATEGY_TAGS}")
        return cfg


@dataclass
class RunConfig:
    name: str = "run"
    seed: int = 0
    horizon: int = 100          # evaluation rounds (and baseline run length)
    churn_threshold: int = 10   # consecutive zero-click creation rounds before departure
    populations: PopulationsConfig = field(default_factory=PopulationsConfig)
    click_model: ClickModelConfig = field(default_factory=ClickModelConfig)
    trust: TrustConfig = field(default_factory=TrustConfig)
    creators: CreatorsConfig = field(default_factory=CreatorsConfig)
    recommender: RecommenderConfig = field(default_factory=RecommenderConfig)
    strategy: StrategyConfig = field(default_factory=StrategyConfig)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config document must be a mapping")
        _check_keys("config", data, {"name", "seed", "horizon", "churn_threshold", "populations",
                                     "click_model", "trust", "creators", "recommender", "strategy"})
        cfg = cls(
            name=data.get("name", "run"),
            seed=data.get("seed", 0),
            horizon=data.get("horizon", 100),
            churn_threshold=data.get("churn_threshold", 10),
            populations=PopulationsConfig.from_dict(data.get("populations", {})),
            click_model=ClickModelConfig.from_dict(data.get("click_model", {})),
            trust=TrustConfig.from_dict(data.get("trust", {})),
            creators=CreatorsConfig.from_dict(data.get("creators", {})),
            recommender=RecommenderConfig.from_dict(data.get("recommender", {})),
            strategy=StrategyConfig.from_dict(data.get("strategy", {})),
        )
        _require(cfg.horizon >= 1, "horizon must be >= 1")
        _require(cfg.churn_threshold >= 1, "churn_threshold must be >= 1")
        _require(cfg.seed >= 0, "seed must be >= 0")
        return cfg

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **kwargs) -> "RunConfig":
        """New config with top-level fields swapped (re-validated)."""
        data = self.to_dict()
        data.update({k: dataclasses.asdict(v) if dataclasses.is_dataclass(v) else v
                     for k, v in kwargs.items()})
        return RunConfig.from_dict(data)

    def config_hash(self) -> str:
        """Short content hash used to stamp output files."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:12]


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f)
    return RunConfig.from_dict(data or {})


def save_config(config: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(config.to_dict(), f, sort_keys=False)


def dumps_config(config: RunConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=False)


def loads_config(text: str) -> RunConfig:
    return RunConfig.from_dict(yaml.safe_load(text) or {})
