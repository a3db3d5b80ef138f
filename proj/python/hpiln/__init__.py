"""Cross-modality metric learning on embedding vectors.

Thin package over the compiled extension: pairwise distances, cm-batch
hardest-pentaplet mining, pentaplet/identity losses with gradients, a
synthetic data generator, a toy trainer, and the ranking evaluation protocol.
"""

from ._hpiln import (
    DataError,
    NumericError,
    evaluate,
    generate_synthetic,
    hard_pentaplet_loss,
    hpi_loss,
    identity_loss,
    mine_batch,
    pairwise_distances,
    train,
    version,
)

__version__ = version()

__all__ = [
    "DataError",
    "NumericError",
    "evaluate",
    "generate_synthetic",
    "hard_pentaplet_loss",
    "hpi_loss",
    "identity_loss",
    "mine_batch",
    "pairwise_distances",
    "train",
    "version",
    "__version__",
]
