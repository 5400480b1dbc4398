"""creatorsteer: a seedable recommender-ecosystem simulator and a
reinforcement-learned creator-suggestion policy for long-term welfare."""

from .audience import (ClickModelParams, UserRecord, click_probability,
                       generate_population, sample_clicks)
from .config import ConfigError, RunConfig, load_config, save_config
from .creators import (CfdState, CreatorDecision, CreatorRecord, SimuLineState, decide,
                       fallback_cfd, fallback_most_history_click, fallback_random_history,
                       fallback_simuline, update_trust)
from .ecosystem import (NO_ITEM, ClickLog, Corpus, EcosystemState, Item, Observation,
                        apply_churn, build_state, load_snapshot, observe, save_snapshot,
                        step)
from .experiment import RunResult, Simulation, compare, run_experiment
from .learner import (ConvergenceDetector, Critic, Policy, ReplayBuffer, TransitionRecord,
                      act, actor_loss, clipped_surrogate_terms, critic_loss, decode,
                      encode, gae, train, update)
from .metrics import active_creators, cumulative_clicks, diversity, genres_per_creator
from .presets import PRESET_NAMES, load_preset
from .recommender import (MfLite, Recommender, min_exposure_rerank, recommend,
                          top_k_ids, train_mf)
from .sampling import sample_truncated_gaussian
from .signaling import make_strategy, most_click, most_history_click, no_signal
from .trust import FollowDataset, TrustEstimator, TrustParams, fit, predict

__version__ = "0.1.0"
