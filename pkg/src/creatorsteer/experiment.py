"""Experiment harness: seeded runs, train/eval protocol, comparisons.

A run either evaluates a baseline strategy directly or trains the learned
policy first and then evaluates it frozen, always on a fresh environment
derived from the run seed. All strategies evaluated under the same seed
face an identical world, which makes per-seed comparisons paired.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import learner as lore
from .config import ConfigError, RunConfig
from .ecosystem import EcosystemState, build_state, observe, step
from .metrics import active_creators, diversity, genre_counts_from_event_log
from .recommender import make_recommender
from .rngs import stream_rng
from .signaling import make_strategy
from .trust import FollowDataset, TrustEstimator


def derive_seed(seed: int, label: str) -> int:
    """Distinct child seed per phase (training vs evaluation vs ...)."""
    digest = hashlib.sha256(f"{seed}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class Simulation:
    """One seeded world plus its recommender, trust estimator, and logs.

    Exposes the `observation()` / `apply(action)` pair that the learner's
    training loop drives; baseline strategies go through the same path.
    """

    def __init__(self, config: RunConfig, seed: int):
        self.config = config
        self.seed = seed
        self.state: EcosystemState = build_state(config, seed)
        self.recommender = make_recommender(config.recommender, config.populations.users,
                                            self.state.rngs.get("recommender"))
        est_cfg = config.trust.estimator
        self.estimator = TrustEstimator(
            config.populations.creators, lr=est_cfg.lr,
            epochs_per_round=est_cfg.epochs_per_round,
            decay_half_life=est_cfg.decay_half_life if config.trust.dynamic else None)
        self.follow_data = FollowDataset()
        self.event_log: list[dict] = []
        self.metrics_rows: list[dict] = []
        self._genre_counts = np.zeros(config.populations.genres, dtype=np.int64)
        self._cumulative = 0

    @property
    def n_creators(self) -> int:
        return self.state.n_creators

    @property
    def n_genres(self) -> int:
        return self.state.n_genres

    def observation(self):
        return observe(self.state, self.estimator.predict_all())

    def apply(self, action):
        """Run one round; returns (reward, next observation)."""
        result = step(self.state, action, self.recommender)
        for creator_id, followed in result.follow_observations:
            self.follow_data.add(creator_id, followed, self.state.round)
        self.estimator.observe_round(result.follow_observations)
        self.recommender.on_round_end(self.state.corpus, self.state.click_log, self.state.round)

        self.event_log.append(result.record)
        self._cumulative += result.reward
        for entry in result.record["created"]:
            self._genre_counts[entry["genre"]] += 1
        delivered = len(result.follow_observations)
        follows = sum(1 for _, f in result.follow_observations if f)
        self.metrics_rows.append({
            "round": self.state.round,
            "reward": result.reward,
            "cumulative_clicks": self._cumulative,
            "diversity_so_far": (diversity(self._genre_counts)
                                 if self._genre_counts.sum() > 0 else None),
            "active_creators": len(result.record["created"]),
            "mean_trust_estimate": float(np.mean(self.estimator.predict_all())),
            "follow_rate": (follows / delivered) if delivered else None,
        })
        return result.reward, self.observation()

    def summary(self) -> dict:
        created_total = int(self._genre_counts.sum())
        return {
            "final_cumulative_clicks": self._cumulative,
            "diversity": diversity(self._genre_counts) if created_total else None,
            "active_creators": active_creators(self.event_log),
            "rounds": self.state.round,
        }

    def genre_spread(self) -> dict[int, int]:
        return {c.id: len({e.genre for e in c.history}) for c in self.state.creators}


@dataclass
class RunResult:
    config: RunConfig
    seed: int
    strategy: str
    metrics_rows: list[dict]
    event_log: list[dict]
    summary: dict
    genre_spread: dict[int, int]
    training_log: list[dict] | None = None
    converged_cycle: int | None = None
    files: dict = field(default_factory=dict)


def _run_rounds(sim: Simulation, propose, n_rounds: int) -> None:
    for _ in range(n_rounds):
        sim.apply(propose(sim))


def run_experiment(config: RunConfig, seed: int | None = None,
                   out_dir: str | None = None) -> RunResult:
    """Execute one run per the config's strategy and emit its output files.

    Baselines run `horizon` rounds directly; the learned strategy trains on
    a training environment first (up to the learner's round cap or until the
    convergence rule fires), then runs `horizon` evaluation rounds with the
    policy frozen on a freshly seeded environment.
    """
    seed = config.seed if seed is None else seed
    tag = config.strategy.tag
    training_log = None
    converged_cycle = None
    checkpoint_blob = None

    eval_sim = Simulation(config, derive_seed(seed, "eval"))
    if tag == "lore":
        hyper = config.strategy.learner
        train_seed = derive_seed(seed, "train")
        result = lore.train(lambda: Simulation(config, train_seed), hyper, seed=train_seed)
        if result.diverged:
            raise FloatingPointError("training diverged (non-finite loss); partial log kept")
        training_log = result.log
        converged_cycle = result.converged_cycle
        eval_rng = stream_rng(seed, "lore-eval")
        policy = result.policy

        def propose(sim):
            enc = lore.encode(sim.observation(), sim.n_genres).ravel()
            action, _, _ = lore.act(policy, enc, eval_rng)
            return action

        checkpoint_blob = (result.policy, result.critic, hyper, result.rng_state)
    else:
        strategy = make_strategy(tag)

        def propose(sim):
            return strategy.propose(sim.state)

    _run_rounds(eval_sim, propose, config.horizon)

    run = RunResult(config=config, seed=seed, strategy=tag,
                    metrics_rows=eval_sim.metrics_rows, event_log=eval_sim.event_log,
                    summary=eval_sim.summary(), genre_spread=eval_sim.genre_spread(),
                    training_log=training_log, converged_cycle=converged_cycle)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        prov = _provenance(config, seed)
        run.files["metrics"] = _write_metrics_csv(os.path.join(out_dir, "metrics.csv"),
                                                  run.metrics_rows, prov)
        run.files["events"] = _write_event_log(os.path.join(out_dir, "events.jsonl"),
                                               run.event_log, prov)
        run.files["genre_spread"] = _write_genre_spread(
            os.path.join(out_dir, "genre_spread.csv"), run.genre_spread, tag, prov)
        eval_sim.follow_data.save_csv(os.path.join(out_dir, "follow_data.csv"))
        if training_log is not None:
            run.files["training_log"] = _write_training_log(
                os.path.join(out_dir, "training_log.csv"), training_log, prov)
        if checkpoint_blob is not None:
            path = os.path.join(out_dir, "checkpoint.json")
            policy_, critic_, hyper_, rng_state = checkpoint_blob
            lore.save_checkpoint(path, policy_, critic_, hyper_,
                                 trust_logits=eval_sim.estimator.params.logits,
                                 rng_states=rng_state)
            run.files["checkpoint"] = path
    return run


# --- output files -----------------------------------------------------------

def _provenance(config: RunConfig, seed: int) -> str:
    return f"# provenance config_hash={config.config_hash()} seed={seed}"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".6f")
    return str(value)


METRICS_COLUMNS = ["round", "reward", "cumulative_clicks", "diversity_so_far",
                   "active_creators", "mean_trust_estimate", "follow_rate"]


def _write_metrics_csv(path, rows, provenance: str) -> str:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(provenance + "\n")
        f.write(",".join(METRICS_COLUMNS) + "\n")
        for row in rows:
            f.write(",".join(_fmt(row[c]) for c in METRICS_COLUMNS) + "\n")
    return path


def _write_event_log(path, event_log, provenance: str) -> str:
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps({"provenance": provenance.lstrip("# ")}) + "\n")
        for record in event_log:
            f.write(json.dumps(record, separators=(",", ":")) + "\n")
    return path


def read_event_log(path) -> list[dict]:
    """Round records from a JSONL event log (provenance line skipped)."""
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            doc = json.loads(line)
            if "provenance" not in doc:
                out.append(doc)
    return out


def _write_training_log(path, rows, provenance: str) -> str:
    cols = ["cycle", "policy_loss", "critic_loss", "mean_reward", "clip_fraction"]
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(provenance + "\n")
        f.write(",".join(cols) + "\n")
        for row in rows:
            f.write(",".join(_fmt(row[c]) for c in cols) + "\n")
    return path


def _write_genre_spread(path, spread: dict[int, int], strategy: str, provenance: str) -> str:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(provenance + "\n")
        f.write("strategy,creator,distinct_genres\n")
        for cid in sorted(spread):
            f.write(f"{strategy},{cid},{spread[cid]}\n")
    return path


# --- comparisons ------------------------------------------------------------

@dataclass
class StrategySummary:
    strategy: str
    seeds: list[int]
    clicks: list[int]
    diversities: list[float]
    active: list[float]

    def mean_clicks(self) -> float:
        return float(np.mean(self.clicks))

    def se_clicks(self) -> float:
        return _stderr(self.clicks)

    def mean_diversity(self) -> float:
        vals = [d for d in self.diversities if d is not None]
        return float(np.mean(vals)) if vals else math.nan

    def mean_active(self) -> float:
        return float(np.mean(self.active))


def _stderr(values) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def compare(configs: list[RunConfig], seeds: list[int],
            out_dir: str | None = None) -> list[StrategySummary]:
    """Run each config over the same seeds and aggregate final metrics.

    The configs must be identical outside their strategy block (and name);
    the returned summaries are sorted by mean final cumulative clicks,
    best first.
    """
    _check_comparable(configs)
    summaries = []
    for config in configs:
        tag = config.strategy.tag
        clicks, divs, active, runs = [], [], [], []
        for seed in seeds:
            run_out = None
            if out_dir is not None:
                run_out = os.path.join(out_dir, tag, f"seed_{seed}")
            run = run_experiment(config, seed=seed, out_dir=run_out)
            clicks.append(run.summary["final_cumulative_clicks"])
            divs.append(run.summary["diversity"])
            active.append(run.summary["active_creators"])
            runs.append(run)
        summaries.append(StrategySummary(strategy=tag, seeds=list(seeds), clicks=clicks,
                                         diversities=divs, active=active))
    summaries.sort(key=lambda s: -s.mean_clicks())
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        prov = _provenance(configs[0], seeds[0] if seeds else 0)
        _write_comparison_csv(os.path.join(out_dir, "comparison.csv"), summaries, prov)
        with open(os.path.join(out_dir, "comparison.txt"), "w", encoding="utf-8") as f:
            f.write(format_comparison_table(summaries) + "\n")
    return summaries


def _check_comparable(configs: list[RunConfig]) -> None:
    if not configs:
        raise ConfigError("compare needs at least one config")
    base = None
    for config in configs:
        doc = config.to_dict()
        doc.pop("strategy")
        doc.pop("name")
        if base is None:
            base = doc
        elif doc != base:
            raise ConfigError("compare: configs must differ only in their strategy block")


def _write_comparison_csv(path, summaries, provenance: str) -> str:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(provenance + "\n")
        f.write("strategy,seeds,mean_final_clicks,se_final_clicks,mean_diversity,mean_active_creators\n")
        for s in summaries:
            f.write(f"{s.strategy},{len(s.seeds)},{_fmt(s.mean_clicks())},{_fmt(s.se_clicks())},"
                    f"{_fmt(s.mean_diversity())},{_fmt(s.mean_active())}\n")
    return path


def format_comparison_table(summaries) -> str:
    headers = ["strategy", "final clicks (mean±se)", "diversity", "active creators"]
    rows = [[s.strategy,
             f"{s.mean_clicks():.1f} ± {s.se_clicks():.1f}",
             f"{s.mean_diversity():.4f}",
             f"{s.mean_active():.2f}"] for s in summaries]
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)))
    return "\n".join(lines)
