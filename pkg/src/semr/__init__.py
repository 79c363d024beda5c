"""Sequential estimation under multiple Gaussian sources: simulation and certification."""
from .environment import EnvironmentSpec, GapProfile, build_environment, fisher_info, gap_profile, pull
from .montecarlo import ReplicationBatch, run_replications
from .numkit import RngStream, StreamingCovariance
from .policies import GREEDY, LCB, UNIFORM, Policy, PolicyKind, epsilon_greedy, oracle, run_episode
from .regret import RegretReport, count_based_regret, mse_based_regret, summarize

__version__ = "0.1.0"

__all__ = [
    "EnvironmentSpec", "GapProfile", "GREEDY", "LCB", "Policy", "PolicyKind", "RegretReport",
    "ReplicationBatch", "RngStream", "StreamingCovariance", "UNIFORM", "build_environment",
    "count_based_regret", "epsilon_greedy", "fisher_info", "gap_profile", "mse_based_regret",
    "oracle", "pull", "run_episode", "run_replications", "summarize",
]
