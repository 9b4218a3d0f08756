"""LSVI-UCB and two space-efficient variants on finite linear MDPs, with an exact oracle."""
from .agents import (
    EpisodeRecord,
    Hyperparameters,
    LSVIUCB,
    LSVIUCBAdaptive,
    LSVIUCBFixed,
    PolicySnapshot,
    default_beta,
    make_agent,
    phase_length,
    step_episode,
)
from .config import ExperimentConfig, load_config
from .errors import ConfigError, LSVIError, NumericalError, ValidationError
from .harness import run_experiment, run_single, space_account, sublinearity_report
from .linalg import GramInverse, ellipsoid_bonus, frobenius_distance, operator_norm_estimate, rank_one_update
from .mdp import LinearMDP, SyntheticSpec, deserialize, generate_synthetic, serialize, validate
from .oracle import ValueTables, episode_regret, optimal_values, policy_value

__version__ = "0.1.0"
