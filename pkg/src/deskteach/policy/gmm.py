"""Language-conditioned Gaussian-mixture policy baseline.

A per-step (not chunked) policy: image and proprioception features over a
short history are modulated by the task's language embedding via
feature-wise affine transforms, fused by a small transformer encoder with
low-rank adapter slots, and decoded into mixture weights, means, and
scales over the next action. Trained by negative log-likelihood; actions
are sampled from the mixture at inference, which is exactly why it
struggles on precision tasks.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from ..seeding import rng_for, torch_seed_for
from ..torchutil import configure_torch_cpu
from ..sim.demos import Demonstration
from .act import ConvBackbone, EncoderLayer
from .lora import LoraManagedModule

GMM_STEPS = 5000
GMM_FINETUNE_STEPS = 2000
GMM_LR = 1e-4
GMM_BATCH = 8
LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class GmmPolicyConfig:
    components: int = 3
    encoder_layers: int = 2
    attention_heads: int = 4
    history: int = 2
    d_model: int = 64
    text_dim: int = 64
    action_dim: int = 3
    ffn_dim: int = 256
    lora_rank: int = 8
    lora_alpha: float | None = None
    min_log_std: float = -4.0
    max_log_std: float = 1.0

    def __post_init__(self) -> None:
        if self.components < 1:
            raise ValueError("components must be >= 1")
        if self.history < 1:
            raise ValueError("history must be >= 1")


class FilmLayer(nn.Module):
    """Feature-wise affine modulation by the language embedding."""

    def __init__(self, text_dim: int, feat_dim: int):
        super().__init__()
        self.proj = nn.Linear(text_dim, 2 * feat_dim)

    def forward(self, feats: torch.Tensor, text: torch.Tensor) -> torch.Tensor:
        gamma, beta = self.proj(text).chunk(2, dim=-1)
        while gamma.dim() < feats.dim():
            gamma = gamma.unsqueeze(1)
            beta = beta.unsqueeze(1)
        return feats * (1.0 + gamma) + beta


class GmmPolicy(LoraManagedModule):
    def __init__(self, config: GmmPolicyConfig):
        super().__init__()
        self.config = config
        d = config.d_model
        self.backbone = ConvBackbone(d)
        self.proprio_proj = nn.Linear(3, d)
        self.film_obs = FilmLayer(config.text_dim, d)
        self.film_prop = FilmLayer(config.text_dim, d)
        self.pos = nn.Embedding(2 * config.history, d)
        self.encoder = nn.ModuleList(
            EncoderLayer(d, config.attention_heads, config.ffn_dim,
                         config.lora_rank, config.lora_alpha)
            for _ in range(config.encoder_layers)
        )
        self.norm = nn.LayerNorm(d)
        K = config.components
        self.head = nn.Sequential(
            nn.Linear(d, d), nn.ReLU(),
            nn.Linear(d, K * (1 + 2 * config.action_dim)),
        )

    def mixture(self, obs_hist: torch.Tensor, prop_hist: torch.Tensor,
                text: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """(B, H, 3, 64, 64), (B, H, 3), (B, text_dim) -> mixture parameters."""
        B, H = obs_hist.shape[:2]
        flat = obs_hist.reshape(B * H, *obs_hist.shape[2:])
        obs_feat = self.backbone(flat).mean(dim=1).reshape(B, H, -1)
        obs_feat = self.film_obs(obs_feat, text)
        prop_feat = self.film_prop(self.proprio_proj(prop_hist), text)
        tokens = torch.cat([obs_feat, prop_feat], dim=1)
        tokens = tokens + self.pos(torch.arange(tokens.shape[1], device=tokens.device))[None]
        for layer in self.encoder:
            tokens = layer(tokens)
        pooled = self.norm(tokens).mean(dim=1)
        raw = self.head(pooled)
        K, A = self.config.components, self.config.action_dim
        logits = raw[:, :K]
        means = raw[:, K : K + K * A].reshape(B, K, A)
        log_std = raw[:, K + K * A :].reshape(B, K, A)
        log_std = torch.clamp(log_std, self.config.min_log_std, self.config.max_log_std)
        return logits, means, log_std

    def nll(self, obs_hist, prop_hist, text, actions) -> torch.Tensor:
        """Mean negative log-likelihood of the ground-truth actions."""
        logits, means, log_std = self.mixture(obs_hist, prop_hist, text)
        a = actions[:, None, :]
        comp = -0.5 * (((a - means) / log_std.exp()) ** 2) - log_std - 0.5 * LOG_2PI
        comp = comp.sum(-1) + torch.log_softmax(logits, dim=-1)
        return -torch.logsumexp(comp, dim=-1).mean()


@dataclass
class GmmTrainLog:
    losses: list[float] = field(default_factory=list)

    @property
    def initial_mean(self) -> float:
        k = max(1, len(self.losses) // 20)
        return float(np.mean(self.losses[:k]))

    @property
    def final_mean(self) -> float:
        k = max(1, len(self.losses) // 20)
        return float(np.mean(self.losses[-k:]))


class _StepDataset:
    """Per-step samples with history windows, one skill."""

    def __init__(self, demos: list[Demonstration], history: int):
        for d in demos:
            if d.embodiment != "robot":
                raise ValueError("policies train on robot demonstrations")
        self.demos = demos
        self.history = history
        self.index = [(i, t) for i, d in enumerate(demos) for t in range(d.T)]

    def batch(self, rng: np.random.Generator, size: int):
        H = self.history
        picks = rng.integers(len(self.index), size=size)
        obs = np.empty((size, H, 64, 64, 3), dtype=np.float32)
        prop = np.empty((size, H, 3), dtype=np.float32)
        acts = np.empty((size, self.demos[0].actions.shape[1]), dtype=np.float32)
        for j, pick in enumerate(picks):
            i, t = self.index[pick]
            d = self.demos[i]
            for h in range(H):
                src = max(0, t - (H - 1 - h))
                obs[j, h] = d.frames[src].astype(np.float32) / 255.0
                prop[j, h] = d.proprio[src]
            acts[j] = d.actions[t]
        return (
            torch.from_numpy(obs).permute(0, 1, 4, 2, 3),
            torch.from_numpy(prop),
            torch.from_numpy(acts),
        )


def train_gmm_baseline(
    data: dict[str, tuple[np.ndarray, list[Demonstration]]],
    config: GmmPolicyConfig,
    seed: int,
    steps: int = GMM_STEPS,
    lr: float = GMM_LR,
    batch_size: int = GMM_BATCH,
    progress_cb=None,
) -> tuple[GmmPolicy, GmmTrainLog]:
    """Multitask pretraining conditioned on language; no adapters yet.

    ``data`` maps skill_id -> (text embedding, robot demonstrations).
    """
    configure_torch_cpu()
    if not data:
        raise ValueError("need at least one skill")
    torch.manual_seed(torch_seed_for("gmm-init", seed))
    model = GmmPolicy(config)
    skills = sorted(data)
    texts = {s: torch.from_numpy(np.asarray(data[s][0], dtype=np.float32)) for s in skills}
    datasets = {s: _StepDataset(data[s][1], config.history) for s in skills}
    optim = torch.optim.Adam(model.parameters(), lr=lr)
    rng = rng_for("gmm-pretrain", seed)
    log = GmmTrainLog()
    model.train()
    for step_i in range(steps):
        s = skills[int(rng.integers(len(skills)))]
        obs, prop, acts = datasets[s].batch(rng, batch_size)
        text = texts[s][None].expand(obs.shape[0], -1)
        loss = model.nll(obs, prop, text, acts)
        optim.zero_grad()
        loss.backward()
        optim.step()
        log.losses.append(float(loss.detach()))
        if progress_cb is not None and (step_i + 1) % 50 == 0:
            progress_cb((step_i + 1) / steps)
    model.eval()
    return model, log


def finetune_gmm_skill(
    model: GmmPolicy,
    skill_id: str,
    text_vec: np.ndarray,
    demos: list[Demonstration],
    seed: int,
    steps: int = GMM_FINETUNE_STEPS,
    lr: float = GMM_LR,
    batch_size: int = GMM_BATCH,
    progress_cb=None,
) -> tuple[GmmPolicy, GmmTrainLog]:
    """Frozen base; a fresh adapter on the encoder attention learns the skill."""
    configure_torch_cpu()
    if model.has_adapter(skill_id):
        raise ValueError(f"adapter {skill_id!r} already exists")
    model = copy.deepcopy(model)
    gen = torch.Generator().manual_seed(torch_seed_for("gmm-adapter", seed, skill_id))
    model.add_adapter(skill_id, gen)
    model.set_active_adapter(skill_id)
    new_names = set(model.adapter_param_names(skill_id))
    params = []
    for name, p in model.named_parameters():
        p.requires_grad = name in new_names
        if name in new_names:
            params.append(p)
    dataset = _StepDataset(demos, model.config.history)
    text = torch.from_numpy(np.asarray(text_vec, dtype=np.float32))
    optim = torch.optim.Adam(params, lr=lr)
    rng = rng_for("gmm-finetune", seed, skill_id)
    log = GmmTrainLog()
    model.train()
    for step_i in range(steps):
        obs, prop, acts = dataset.batch(rng, batch_size)
        loss = model.nll(obs, prop, text[None].expand(obs.shape[0], -1), acts)
        optim.zero_grad()
        loss.backward()
        optim.step()
        log.losses.append(float(loss.detach()))
        if progress_cb is not None and (step_i + 1) % 50 == 0:
            progress_cb((step_i + 1) / steps)
    model.set_active_adapter(None)
    for p in model.parameters():
        p.requires_grad = True
    model.eval()
    return model, log


def gmm_predict(
    model: GmmPolicy,
    text_vec: np.ndarray,
    obs_hist: np.ndarray,
    prop_hist: np.ndarray,
    rng: np.random.Generator,
    adapter_id: str | None = None,
) -> np.ndarray:
    """Sample one action from the predicted mixture (seed-deterministic)."""
    configure_torch_cpu()
    model.eval()
    model.set_active_adapter(adapter_id)
    obs = torch.from_numpy(np.asarray(obs_hist, dtype=np.float32)).permute(0, 3, 1, 2)[None]
    prop = torch.from_numpy(np.asarray(prop_hist, dtype=np.float32))[None]
    text = torch.from_numpy(np.asarray(text_vec, dtype=np.float32))[None]
    with torch.no_grad():
        logits, means, log_std = model.mixture(obs, prop, text)
    model.set_active_adapter(None)
    probs = torch.softmax(logits[0], dim=-1).numpy().astype(np.float64)
    probs = probs / probs.sum()
    k = int(rng.choice(len(probs), p=probs))
    mean = means[0, k].numpy()
    std = log_std[0, k].exp().numpy()
    action = mean + std * rng.standard_normal(mean.shape)
    return np.clip(action, -1.0, 1.0)


class GmmRolloutPolicy:
    """History-keeping rollout adapter around gmm_predict."""

    def __init__(self, model: GmmPolicy, text_vec: np.ndarray, adapter_id: str | None = None):
        self.model = model
        self.text_vec = np.asarray(text_vec, dtype=np.float32)
        self.adapter_id = adapter_id
        self._frames: list[np.ndarray] = []
        self._props: list[np.ndarray] = []
        self._rng = rng_for("gmm-rollout", 0)

    def reset(self, episode_seed: int) -> None:
        self._frames = []
        self._props = []
        self._rng = rng_for("gmm-rollout", episode_seed)

    def act(self, frame: np.ndarray, proprio: np.ndarray) -> np.ndarray:
        H = self.model.config.history
        self._frames.append(frame.astype(np.float32) / 255.0)
        self._props.append(np.asarray(proprio, dtype=np.float32))
        frames = self._frames[-H:]
        props = self._props[-H:]
        while len(frames) < H:
            frames = [frames[0]] + frames
            props = [props[0]] + props
        return gmm_predict(
            self.model, self.text_vec, np.stack(frames), np.stack(props),
            self._rng, self.adapter_id,
        )
