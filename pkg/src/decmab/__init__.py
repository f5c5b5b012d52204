"""Decentralized multi-player multi-armed bandit simulation and regret analysis."""

__version__ = "0.1.0"

from .arms import ArmSpace, ArmTuple, dsee_schedule, initial_schedule, lex_compare
from .environments import (
    Gaussian,
    IidEnv,
    MarkovChain,
    MarkovEnv,
    Uniform,
    build_counterexample,
    build_environment,
    estimate_lockin_probability,
    random_gaussian_env,
)
from .policies import (
    AgnosticUcbPlayer,
    DseePlayer,
    InvalidStateError,
    MucbPlayer,
    UcbTable,
    ucb_index,
)
from .simulator import (
    ConfigError,
    ExperimentResult,
    Feedback,
    RegretLedger,
    Variant,
    checkpoint_grid,
    run_episode,
    run_experiment,
)
from .analysis import BoundInput, bound_thm1, bound_thm2, confidence_band, growth_classifier

__all__ = [
    "ArmSpace",
    "ArmTuple",
    "AgnosticUcbPlayer",
    "BoundInput",
    "ConfigError",
    "DseePlayer",
    "ExperimentResult",
    "Feedback",
    "Gaussian",
    "IidEnv",
    "InvalidStateError",
    "MarkovChain",
    "MarkovEnv",
    "MucbPlayer",
    "RegretLedger",
    "UcbTable",
    "Uniform",
    "Variant",
    "bound_thm1",
    "bound_thm2",
    "build_counterexample",
    "build_environment",
    "checkpoint_grid",
    "confidence_band",
    "dsee_schedule",
    "estimate_lockin_probability",
    "growth_classifier",
    "initial_schedule",
    "lex_compare",
    "random_gaussian_env",
    "run_episode",
    "run_experiment",
    "ucb_index",
]
