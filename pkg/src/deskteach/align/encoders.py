"""Dual sequence encoders mapping demonstrations into one latent space.

Each embodiment gets its own encoder: a small convolutional frame encoder
feeding a transformer over the (downsampled) frame sequence with a learned
summary token whose output is the embedding. The robot encoder additionally
mixes per-step proprioception into its frame tokens; feeding it a human
demonstration (or vice versa) is an error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from ..checkpoint import load_arrays, save_arrays
from ..torchutil import configure_torch_cpu
from ..sim.demos import Demonstration
from .loss import downsample

PROPRIO_DIM = 3


@dataclass
class AlignmentEncoderConfig:
    frame_feature_dim: int = 128
    encoder_layers: int = 6
    attention_heads: int = 8
    embedding_dim: int = 64
    downsample_T: int = 100
    train_margin: float = 0.5          # margin used by the hinge on negatives
    decision_threshold: float = 0.7    # cosine at/above which a pair counts as same skill

    def __post_init__(self) -> None:
        if not (0 < self.train_margin < self.decision_threshold <= 1):
            raise ValueError("need 0 < train_margin < decision_threshold <= 1")
        if self.encoder_layers < 1:
            raise ValueError("encoder_layers must be >= 1")
        if self.downsample_T < 2:
            raise ValueError("downsample_T must be >= 2")

    @classmethod
    def desk_profile(cls, **overrides) -> "AlignmentEncoderConfig":
        """Small profile sized for minutes-scale CPU training on 64x64 demos."""
        kwargs = dict(downsample_T=10)
        kwargs.update(overrides)
        return cls(**kwargs)


@dataclass
class Embedding:
    vector: np.ndarray
    source_embodiment: str

    def __post_init__(self) -> None:
        self.vector = np.asarray(self.vector, dtype=np.float32)
        if not np.all(np.isfinite(self.vector)):
            raise ValueError("embedding has non-finite entries")
        if float(np.linalg.norm(self.vector)) == 0.0:
            raise ValueError("embedding has zero norm")


class FrameEncoder(nn.Module):
    """4 conv blocks (after a 2x pool) -> frame_feature_dim vector per frame."""

    def __init__(self, out_dim: int):
        super().__init__()
        chans = (8, 16, 32, 48)
        layers: list[nn.Module] = [nn.AvgPool2d(2)]
        prev = 3
        for c in chans:
            layers += [nn.Conv2d(prev, c, 3, stride=2, padding=1), nn.GroupNorm(4, c), nn.ReLU()]
            prev = c
        self.net = nn.Sequential(*layers)
        self.proj = nn.Linear(chans[-1] * 2 * 2, out_dim)

    def forward(self, frames: torch.Tensor) -> torch.Tensor:
        # frames: (N, 3, 64, 64) float in [0, 1]
        feats = self.net(frames)
        return self.proj(feats.flatten(1))


class SequenceEncoder(nn.Module):
    def __init__(self, config: AlignmentEncoderConfig, use_proprio: bool):
        super().__init__()
        d = config.embedding_dim
        self.use_proprio = use_proprio
        self.frame_encoder = FrameEncoder(config.frame_feature_dim)
        self.token_proj = nn.Linear(config.frame_feature_dim, d)
        if use_proprio:
            self.proprio_proj = nn.Linear(PROPRIO_DIM, d)
        self.summary = nn.Parameter(torch.zeros(1, 1, d))
        self.pos = nn.Embedding(config.downsample_T + 1, d)
        layer = nn.TransformerEncoderLayer(
            d_model=d,
            nhead=config.attention_heads,
            dim_feedforward=2 * d,
            dropout=0.0,
            batch_first=True,
            norm_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, config.encoder_layers, enable_nested_tensor=False)
        self.head = nn.Linear(d, config.embedding_dim)

    def forward(self, frames: torch.Tensor, proprio: torch.Tensor | None) -> torch.Tensor:
        # frames: (B, T, 3, 64, 64); proprio: (B, T, 3) when used
        B, T = frames.shape[:2]
        tokens = self.token_proj(
            self.frame_encoder(frames.reshape(B * T, *frames.shape[2:])).reshape(B, T, -1)
        )
        if self.use_proprio:
            assert proprio is not None
            tokens = tokens + self.proprio_proj(proprio)
        tokens = torch.cat([self.summary.expand(B, 1, -1), tokens], dim=1)
        tokens = tokens + self.pos(torch.arange(T + 1, device=tokens.device))[None]
        out = self.encoder(tokens)
        return self.head(out[:, 0])


class AlignmentModel(nn.Module):
    """E_human and E_robot plus the thresholds that interpret their cosines."""

    def __init__(self, config: AlignmentEncoderConfig):
        super().__init__()
        self.config = config
        self.human = SequenceEncoder(config, use_proprio=False)
        self.robot = SequenceEncoder(config, use_proprio=True)

    def encoder_for(self, embodiment: str) -> SequenceEncoder:
        if embodiment == "human":
            return self.human
        if embodiment == "robot":
            return self.robot
        raise ValueError(f"unknown embodiment {embodiment!r}")

    def preprocess(self, demo: Demonstration) -> tuple[torch.Tensor, torch.Tensor | None]:
        ds = downsample(demo, self.config.downsample_T)
        frames = torch.from_numpy(ds.frames).to(torch.float32).div_(255.0).permute(0, 3, 1, 2)
        proprio = None
        if demo.embodiment == "robot":
            proprio = torch.from_numpy(ds.proprio.astype(np.float32))
        return frames, proprio

    @torch.no_grad()
    def encode(self, demo: Demonstration, embodiment: str | None = None) -> Embedding:
        """Embed one demonstration with the encoder of its embodiment.

        Passing an explicit embodiment that differs from the demo's is an
        error: each encoder only accepts its own embodiment's inputs.
        """
        configure_torch_cpu()
        if embodiment is not None and embodiment != demo.embodiment:
            raise ValueError(
                f"{demo.embodiment} demonstration cannot go through the {embodiment} encoder"
            )
        self.eval()
        frames, proprio = self.preprocess(demo)
        enc = self.encoder_for(demo.embodiment)
        vec = enc(frames[None], None if proprio is None else proprio[None])[0]
        return Embedding(vec.numpy(), demo.embodiment)

    def save(self, path) -> None:
        arrays = {k: v.detach().numpy().astype(np.float32) for k, v in self.state_dict().items()}
        save_arrays(path, arrays, extra={"config": self.config.__dict__, "kind": "alignment"})

    @classmethod
    def load(cls, path) -> "AlignmentModel":
        arrays, extra = load_arrays(path)
        model = cls(AlignmentEncoderConfig(**extra["config"]))
        model.load_state_dict({k: torch.from_numpy(v.copy()) for k, v in arrays.items()})
        return model
