"""Reward components and training utilities for text simplification."""

__version__ = "0.1.0"

from .errors import KisError  # noqa: E402
from .reward import RewardReport, ScoreConfig, score_pair, total_reward  # noqa: E402
from .textproc import tokenize  # noqa: E402

__all__ = ["__version__", "KisError", "RewardReport", "ScoreConfig", "score_pair",
           "total_reward", "tokenize"]
