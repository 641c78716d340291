"""Chunked-action CVAE imitation policy with per-skill low-rank adapters.

A conv backbone turns the observation into image tokens; a transformer
encoder fuses them with a proprioception token and a latent token; a
transformer decoder with one learned query per chunk step emits the action
chunk. During training a separate transformer encoder (the CVAE encoder)
infers the latent from the ground-truth chunk; at inference the latent is
pinned to the prior mean, so prediction is deterministic. Low-rank
adapters sit on every attention query/value projection of the encoder and
decoder; the skill being executed selects the adapter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..checkpoint import load_arrays, save_arrays
from ..torchutil import configure_torch_cpu
from .lora import LoraLinear, LoraManagedModule

ACTION_DIM = 3
PROPRIO_DIM = 3


@dataclass
class ActConfig:
    chunk_size: int = 100            # full-scale default; desk profile uses 20
    encoder_layers: int = 4
    decoder_layers: int = 6
    vae_encoder_layers: int = 4
    attention_heads: int = 8
    latent_dim: int = 32
    kl_weight: float = 10.0
    obs_feature_dim: int = 64        # width of image tokens and of the transformer
    action_dim: int = ACTION_DIM
    ffn_dim: int = 256
    lora_rank: int = 8
    lora_alpha: float | None = None  # defaults to rank (net scale 1)

    def __post_init__(self) -> None:
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")
        if min(self.encoder_layers, self.decoder_layers, self.vae_encoder_layers) < 1:
            raise ValueError("layer counts must be >= 1")
        if self.kl_weight < 0:
            raise ValueError("kl_weight must be >= 0")

    @classmethod
    def desk_profile(cls, **overrides) -> "ActConfig":
        kwargs = dict(chunk_size=20)
        kwargs.update(overrides)
        return cls(**kwargs)


def _coord_channels(size: int = 64) -> torch.Tensor:
    """(2, size, size) world-frame coordinates: x left->right, y bottom->top."""
    xs = torch.linspace(0.0, 1.0, size)
    ys = torch.linspace(1.0, 0.0, size)
    grid_y, grid_x = torch.meshgrid(ys, xs, indexing="ij")
    return torch.stack([grid_x, grid_y])


class ConvBackbone(nn.Module):
    """64x64 RGB plus coordinate channels -> 16 image tokens of width `dim`."""

    def __init__(self, dim: int):
        super().__init__()
        self.register_buffer("coords", _coord_channels())
        chans = (16, 32, 64)
        layers: list[nn.Module] = [nn.AvgPool2d(2)]
        prev = 5
        for c in chans:
            layers += [nn.Conv2d(prev, c, 3, stride=2, padding=1), nn.GroupNorm(4, c), nn.ReLU()]
            prev = c
        layers.append(nn.Conv2d(prev, dim, 1))
        self.net = nn.Sequential(*layers)

    def forward(self, obs: torch.Tensor) -> torch.Tensor:
        # obs: (B, 3, 64, 64) float in [0, 1] -> (B, 16, dim)
        B = obs.shape[0]
        x = torch.cat([obs, self.coords.expand(B, -1, -1, -1)], dim=1)
        fmap = self.net(x)
        return fmap.flatten(2).transpose(1, 2)


class Attention(nn.Module):
    """Multi-head attention; rank > 0 puts LoRA slots on the q/v projections."""

    def __init__(self, dim: int, heads: int, rank: int, alpha: float | None):
        super().__init__()
        if dim % heads:
            raise ValueError("dim must divide by heads")
        self.heads = heads
        if rank > 0:
            self.q = LoraLinear(dim, dim, rank, alpha)
            self.v = LoraLinear(dim, dim, rank, alpha)
        else:
            self.q = nn.Linear(dim, dim)
            self.v = nn.Linear(dim, dim)
        self.k = nn.Linear(dim, dim)
        self.out = nn.Linear(dim, dim)

    def forward(self, q_in: torch.Tensor, kv_in: torch.Tensor) -> torch.Tensor:
        B, Tq, D = q_in.shape
        Tk = kv_in.shape[1]
        h = self.heads
        q = self.q(q_in).view(B, Tq, h, D // h).transpose(1, 2)
        k = self.k(kv_in).view(B, Tk, h, D // h).transpose(1, 2)
        v = self.v(kv_in).view(B, Tk, h, D // h).transpose(1, 2)
        attn = F.scaled_dot_product_attention(q, k, v)
        return self.out(attn.transpose(1, 2).reshape(B, Tq, D))


class FeedForward(nn.Module):
    def __init__(self, dim: int, hidden: int):
        super().__init__()
        self.net = nn.Sequential(nn.Linear(dim, hidden), nn.ReLU(), nn.Linear(hidden, dim))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


class EncoderLayer(nn.Module):
    def __init__(self, dim: int, heads: int, ffn: int, rank: int, alpha: float | None):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = Attention(dim, heads, rank, alpha)
        self.norm2 = nn.LayerNorm(dim)
        self.ffn = FeedForward(dim, ffn)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.norm1(x)
        x = x + self.attn(h, h)
        return x + self.ffn(self.norm2(x))


class DecoderLayer(nn.Module):
    def __init__(self, dim: int, heads: int, ffn: int, rank: int, alpha: float | None):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.self_attn = Attention(dim, heads, rank, alpha)
        self.norm2 = nn.LayerNorm(dim)
        self.cross_attn = Attention(dim, heads, rank, alpha)
        self.norm3 = nn.LayerNorm(dim)
        self.ffn = FeedForward(dim, ffn)

    def forward(self, x: torch.Tensor, memory: torch.Tensor) -> torch.Tensor:
        h = self.norm1(x)
        x = x + self.self_attn(h, h)
        x = x + self.cross_attn(self.norm2(x), memory)
        return x + self.ffn(self.norm3(x))


class ActLoraPolicy(LoraManagedModule):
    """The parameter store: shared base plus one adapter set per skill."""

    def __init__(self, config: ActConfig):
        super().__init__()
        self.config = config
        d, heads, ffn = config.obs_feature_dim, config.attention_heads, config.ffn_dim
        rank, alpha = config.lora_rank, config.lora_alpha

        self.backbone = ConvBackbone(d)
        self.img_pos = nn.Embedding(16, d)
        self.proprio_proj = nn.Linear(PROPRIO_DIM, d)
        self.latent_proj = nn.Linear(config.latent_dim, d)
        self.token_pos = nn.Embedding(2, d)  # latent token, proprio token
        self.encoder = nn.ModuleList(
            EncoderLayer(d, heads, ffn, rank, alpha) for _ in range(config.encoder_layers)
        )
        self.encoder_norm = nn.LayerNorm(d)
        self.queries = nn.Embedding(config.chunk_size, d)
        self.decoder = nn.ModuleList(
            DecoderLayer(d, heads, ffn, rank, alpha) for _ in range(config.decoder_layers)
        )
        self.decoder_norm = nn.LayerNorm(d)
        self.action_head = nn.Linear(d, config.action_dim)

        # CVAE encoder (training only; plain attention, discarded at inference).
        self.vae_cls = nn.Parameter(torch.zeros(1, 1, d))
        self.vae_action_proj = nn.Linear(config.action_dim, d)
        self.vae_proprio_proj = nn.Linear(PROPRIO_DIM, d)
        self.vae_pos = nn.Embedding(config.chunk_size + 2, d)
        self.vae_encoder = nn.Sequential(
            *[EncoderLayer(d, heads, ffn, rank=0, alpha=None) for _ in range(config.vae_encoder_layers)]
        )
        self.vae_norm = nn.LayerNorm(d)
        self.vae_latent_head = nn.Linear(d, 2 * config.latent_dim)

    # ------------------------------------------------------------------
    def encode_latent(self, proprio: torch.Tensor, actions: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Posterior over the chunk latent from (proprio, ground-truth chunk)."""
        B = actions.shape[0]
        tokens = torch.cat(
            [
                self.vae_cls.expand(B, 1, -1),
                self.vae_proprio_proj(proprio)[:, None],
                self.vae_action_proj(actions),
            ],
            dim=1,
        )
        tokens = tokens + self.vae_pos(torch.arange(tokens.shape[1], device=tokens.device))[None]
        out = self.vae_norm(self.vae_encoder(tokens))[:, 0]
        stats = self.vae_latent_head(out)
        mu, logvar = stats.chunk(2, dim=-1)
        return mu, logvar

    def decode_chunk(self, obs: torch.Tensor, proprio: torch.Tensor, latent: torch.Tensor) -> torch.Tensor:
        """Predict an action chunk from observation, proprio and latent."""
        B = obs.shape[0]
        img_tokens = self.backbone(obs) + self.img_pos.weight[None]
        extra = torch.stack([self.latent_proj(latent), self.proprio_proj(proprio)], dim=1)
        extra = extra + self.token_pos.weight[None]
        x = torch.cat([extra, img_tokens], dim=1)
        for layer in self.encoder:
            x = layer(x)
        memory = self.encoder_norm(x)
        q = self.queries.weight[None].expand(B, -1, -1)
        y = torch.zeros_like(q)
        for layer in self.decoder:
            y = layer(y + q, memory)
        return self.action_head(self.decoder_norm(y))

    def forward(
        self,
        obs: torch.Tensor,
        proprio: torch.Tensor,
        actions: torch.Tensor | None = None,
        generator: torch.Generator | None = None,
    ) -> tuple[torch.Tensor, torch.Tensor | None, torch.Tensor | None]:
        """Training mode (actions given): sample the posterior latent.
        Inference mode: latent pinned to the prior mean (zeros)."""
        B = obs.shape[0]
        if actions is not None:
            mu, logvar = self.encode_latent(proprio, actions)
            eps = torch.randn(mu.shape, generator=generator, dtype=mu.dtype)
            latent = mu + torch.exp(0.5 * logvar) * eps
        else:
            mu = logvar = None
            latent = torch.zeros(B, self.config.latent_dim, dtype=obs.dtype)
        pred = self.decode_chunk(obs, proprio, latent)
        return pred, mu, logvar

    # ------------------------------------------------------------------
    @property
    def adapter_ids(self) -> set[str]:
        linears = self.lora_linears()
        return set(linears[0].lora_A.keys()) if linears else set()

    def __contains__(self, adapter_id: str) -> bool:
        return self.has_adapter(adapter_id)

    def save(self, path) -> None:
        arrays = {k: v.detach().numpy().astype(np.float32) for k, v in self.state_dict().items()}
        extra = {
            "config": {k: v for k, v in self.config.__dict__.items()},
            "adapters": sorted(self.adapter_ids),
            "kind": "act-lora",
        }
        save_arrays(path, arrays, extra)

    @classmethod
    def load(cls, path) -> "ActLoraPolicy":
        arrays, extra = load_arrays(path)
        model = cls(ActConfig(**extra["config"]))
        for adapter in extra.get("adapters", []):
            model.add_adapter(adapter)
        model.load_state_dict({k: torch.from_numpy(v.copy()) for k, v in arrays.items()})
        return model


def predict_chunk(
    model: ActLoraPolicy,
    adapter_id: str,
    observation: np.ndarray,
    proprio: np.ndarray,
) -> np.ndarray:
    """Deterministic (chunk_size, action_dim) prediction, clamped to [-1, 1]."""
    configure_torch_cpu()
    if not model.has_adapter(adapter_id):
        raise KeyError(f"unknown adapter {adapter_id!r}")
    model.eval()
    model.set_active_adapter(adapter_id)
    obs = torch.from_numpy(np.ascontiguousarray(observation)).to(torch.float32)
    if obs.max() > 1.5:
        obs = obs / 255.0
    obs = obs.permute(2, 0, 1)[None]
    prop = torch.from_numpy(np.asarray(proprio, dtype=np.float32))[None]
    with torch.no_grad():
        pred, _, _ = model(obs, prop, None)
    model.set_active_adapter(None)
    chunk = pred[0].numpy()
    if not np.all(np.isfinite(chunk)):
        raise FloatingPointError("policy emitted non-finite actions")
    return np.clip(chunk, -1.0, 1.0)
