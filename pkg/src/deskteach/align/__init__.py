"""Cross-embodiment demonstration alignment."""

from .encoders import AlignmentEncoderConfig, AlignmentModel, Embedding
from .loss import cosine, downsample, downsample_indices, pair_loss, pair_loss_batch
from .metrics import PairVerdict, classify_pair, cosine_np, eval_metrics
from .train import PairLabel, TrainLog, train_alignment

__all__ = [
    "AlignmentEncoderConfig",
    "AlignmentModel",
    "Embedding",
    "PairLabel",
    "PairVerdict",
    "TrainLog",
    "classify_pair",
    "cosine",
    "cosine_np",
    "downsample",
    "downsample_indices",
    "eval_metrics",
    "pair_loss",
    "pair_loss_batch",
    "train_alignment",
]
