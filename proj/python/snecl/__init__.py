"""Contrastive learning as neighbour embedding: losses, training and evaluation.

Configs are plain dicts using the same keys as the CLI config files, for
example ``{"loss": "infonce", "tau": 0.1, "data.seed": 3}``.
"""

from ._snecl import (
    FormatError,
    Model,
    NumericError,
    ValidationError,
    evaluate,
    infonce,
    load,
    positive_pair_kl,
    sample_gmm,
    t_simclr_loss,
    tammes,
    train,
    train_on,
    verify,
    verify_suites,
)

__all__ = [
    "FormatError",
    "Model",
    "NumericError",
    "ValidationError",
    "evaluate",
    "infonce",
    "load",
    "positive_pair_kl",
    "sample_gmm",
    "t_simclr_loss",
    "tammes",
    "train",
    "train_on",
    "verify",
    "verify_suites",
]
