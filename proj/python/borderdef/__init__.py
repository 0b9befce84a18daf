"""Target-defense game toolkit: Nash payoffs, batched environment, MAPPO training."""

from ._core import (
    BatchEnv,
    GameConfig,
    __version__,
    apollonius_circle,
    decode_action,
    evaluate_checkpoint,
    evaluate_scripted,
    nash_payoff,
    nash_payoff_oracle,
    payoff_landscape,
    reference_config,
    saved_steps_estimate,
    train,
)

__all__ = [
    "BatchEnv",
    "GameConfig",
    "__version__",
    "apollonius_circle",
    "decode_action",
    "evaluate_checkpoint",
    "evaluate_scripted",
    "nash_payoff",
    "nash_payoff_oracle",
    "payoff_landscape",
    "reference_config",
    "saved_steps_estimate",
    "train",
]
