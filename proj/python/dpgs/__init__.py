"""Differentially private GMM synthesis for embedding datasets."""

try:
    from dpgs._dpgs import (
        fit,
        non_private_epsilon,
        plant,
        synthesize,
        train_eval_mlp,
    )
except ImportError:  # source checkout: _dpgs sits on PYTHONPATH next to the build tree
    from _dpgs import (
        fit,
        non_private_epsilon,
        plant,
        synthesize,
        train_eval_mlp,
    )

__all__ = [
    "fit",
    "non_private_epsilon",
    "plant",
    "synthesize",
    "train_eval_mlp",
]
