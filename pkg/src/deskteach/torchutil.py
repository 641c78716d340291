"""Torch runtime configuration for small-model CPU work."""

import torch


def configure_torch_cpu() -> None:
    """Single-threaded torch: no oversubscription on tiny ops, and a fixed
    reduction order so seeded runs are bitwise reproducible."""
    if torch.get_num_threads() != 1:
        torch.set_num_threads(1)
