"""Stochastic rising bandits: environments, optimistic policies, baselines and experiment harness."""

from .payoff import (
    ConfigurationError,
    PayoffCurve,
    RisingReport,
    check_rising,
    cumulative_increment,
    eval_payoff,
    increment,
    upsilon_bound,
)
from .env import BanditEnv, Mode, oracle_value, empirical_regret
from .rising import RisingConfig, RisingPolicy, WindowedArmStats

__version__ = "0.1.0"

__all__ = [
    "BanditEnv", "ConfigurationError", "Mode", "PayoffCurve", "RisingConfig", "RisingPolicy",
    "RisingReport", "WindowedArmStats", "check_rising", "cumulative_increment", "empirical_regret",
    "eval_payoff", "increment", "oracle_value", "upsilon_bound",
]
