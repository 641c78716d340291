"""Pretraining, frozen-base finetuning, and rollout execution for the
chunked-action policy.

Pretraining trains the shared base jointly with one adapter per skill
(each optimization step draws a batch from a single skill and routes it
through that skill's adapter). Finetuning a new skill clones the store,
freezes the base and every prior adapter, and updates only the new
adapter; its full-finetune variant leaves everything trainable and is the
catastrophic-forgetting baseline.
"""

from __future__ import annotations

import copy
import hashlib
from dataclasses import dataclass, field

import numpy as np
import torch

from ..seeding import rng_for, torch_seed_for
from ..torchutil import configure_torch_cpu
from ..sim.catalog import SkillSpec, World
from ..sim.demos import Demonstration, RolloutResult, rollout
from .act import ActConfig, ActLoraPolicy, predict_chunk

PRETRAIN_STEPS = 5000
FINETUNE_STEPS = 2000
PRETRAIN_LR = 1e-4
FINETUNE_LR = 1e-4
BATCH_SIZE = 8


@dataclass
class PolicyTrainLog:
    losses: list[float] = field(default_factory=list)
    l1: list[float] = field(default_factory=list)
    kl: list[float] = field(default_factory=list)

    @property
    def initial_mean(self) -> float:
        k = max(1, len(self.losses) // 20)
        return float(np.mean(self.losses[:k]))

    @property
    def final_mean(self) -> float:
        k = max(1, len(self.losses) // 20)
        return float(np.mean(self.losses[-k:]))


class ChunkDataset:
    """(observation, proprio, action chunk, pad mask) samples for one skill."""

    def __init__(self, demos: list[Demonstration], chunk_size: int):
        if not demos:
            raise ValueError("need at least one demonstration")
        for d in demos:
            if d.embodiment != "robot":
                raise ValueError("policies train on robot demonstrations")
            if d.actions.shape[1] != demos[0].actions.shape[1]:
                raise ValueError("inconsistent action_dim across demonstrations")
        self.demos = demos
        self.chunk = chunk_size
        self.index = [(i, t) for i, d in enumerate(demos) for t in range(d.T)]

    def batch(self, rng: np.random.Generator, size: int):
        picks = rng.integers(len(self.index), size=size)
        K = self.chunk
        obs = np.empty((size, 64, 64, 3), dtype=np.float32)
        prop = np.empty((size, 3), dtype=np.float32)
        acts = np.zeros((size, K, self.demos[0].actions.shape[1]), dtype=np.float32)
        pad = np.ones((size, K), dtype=np.float32)
        for j, pick in enumerate(picks):
            i, t = self.index[pick]
            d = self.demos[i]
            obs[j] = d.frames[t].astype(np.float32) / 255.0
            prop[j] = d.proprio[t]
            avail = min(K, d.T - t)
            acts[j, :avail] = d.actions[t : t + avail]
            pad[j, avail:] = 0.0
        return (
            torch.from_numpy(obs).permute(0, 3, 1, 2),
            torch.from_numpy(prop),
            torch.from_numpy(acts),
            torch.from_numpy(pad),
        )


def chunk_loss(
    model: ActLoraPolicy,
    obs: torch.Tensor,
    prop: torch.Tensor,
    acts: torch.Tensor,
    pad: torch.Tensor,
    generator: torch.Generator | None,
) -> tuple[torch.Tensor, float, float]:
    pred, mu, logvar = model(obs, prop, acts, generator)
    l1 = (torch.abs(pred - acts) * pad[..., None]).sum() / (pad.sum() * acts.shape[-1])
    kl = (-0.5 * (1 + logvar - mu.pow(2) - logvar.exp())).sum(-1).mean()
    loss = l1 + model.config.kl_weight * kl
    return loss, float(l1.detach()), float(kl.detach())


def pretrain(
    demos: dict[str, list[Demonstration]],
    config: ActConfig,
    seed: int,
    steps: int = PRETRAIN_STEPS,
    lr: float = PRETRAIN_LR,
    batch_size: int = BATCH_SIZE,
    progress_cb=None,
    cosine_lr: bool = False,
) -> tuple[ActLoraPolicy, PolicyTrainLog]:
    """Joint training of the base and one adapter per skill."""
    configure_torch_cpu()
    if not demos or any(len(v) < 1 for v in demos.values()):
        raise ValueError("need at least one demonstration per skill")
    torch.manual_seed(torch_seed_for("act-init", seed))
    model = ActLoraPolicy(config)
    gen = torch.Generator().manual_seed(torch_seed_for("act-latent", seed))
    adapter_gen = torch.Generator().manual_seed(torch_seed_for("act-adapters", seed))
    skills = sorted(demos)
    for skill_id in skills:
        model.add_adapter(skill_id, adapter_gen)
    datasets = {s: ChunkDataset(demos[s], config.chunk_size) for s in skills}

    optim = torch.optim.Adam(model.parameters(), lr=lr)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(optim, T_max=steps) if cosine_lr else None
    rng = rng_for("act-pretrain", seed)
    log = PolicyTrainLog()
    model.train()
    for step_i in range(steps):
        skill_id = skills[int(rng.integers(len(skills)))]
        model.set_active_adapter(skill_id)
        batch = datasets[skill_id].batch(rng, batch_size)
        loss, l1, kl = chunk_loss(model, *batch, gen)
        optim.zero_grad()
        loss.backward()
        optim.step()
        if sched is not None:
            sched.step()
        log.losses.append(float(loss.detach()))
        log.l1.append(l1)
        log.kl.append(kl)
        if progress_cb is not None and (step_i + 1) % 50 == 0:
            progress_cb((step_i + 1) / steps)
    model.set_active_adapter(None)
    model.eval()
    return model, log


def _finetune(
    model: ActLoraPolicy,
    new_skill_id: str,
    demos: list[Demonstration],
    seed: int,
    steps: int,
    lr: float,
    batch_size: int,
    freeze_base: bool,
    progress_cb=None,
    cosine_lr: bool = False,
) -> tuple[ActLoraPolicy, PolicyTrainLog]:
    configure_torch_cpu()
    if model.has_adapter(new_skill_id):
        raise ValueError(
            f"adapter {new_skill_id!r} already exists; finetuning an existing skill "
            "is not allowed, teach it as a new skill instead")
    if not demos:
        raise ValueError("need at least one demonstration")
    model = copy.deepcopy(model)  # never mutate a store someone else is reading
    adapter_gen = torch.Generator().manual_seed(torch_seed_for("ft-adapter", seed, new_skill_id))
    model.add_adapter(new_skill_id, adapter_gen)
    model.set_active_adapter(new_skill_id)

    new_names = set(model.adapter_param_names(new_skill_id))
    params = []
    for name, p in model.named_parameters():
        if freeze_base:
            p.requires_grad = name in new_names
            if name in new_names:
                params.append(p)
        else:
            p.requires_grad = True
            # Frozen-or-not, prior adapters see no gradient (inactive in forward);
            # full finetune trains base + the new adapter.
            params.append(p)

    dataset = ChunkDataset(demos, model.config.chunk_size)
    optim = torch.optim.Adam(params, lr=lr)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(optim, T_max=steps) if cosine_lr else None
    gen = torch.Generator().manual_seed(torch_seed_for("ft-latent", seed, new_skill_id))
    rng = rng_for("act-finetune", seed, new_skill_id)
    log = PolicyTrainLog()
    model.train()
    for step_i in range(steps):
        batch = dataset.batch(rng, batch_size)
        loss, l1, kl = chunk_loss(model, *batch, gen)
        optim.zero_grad()
        loss.backward()
        optim.step()
        if sched is not None:
            sched.step()
        log.losses.append(float(loss.detach()))
        log.l1.append(l1)
        log.kl.append(kl)
        if progress_cb is not None and (step_i + 1) % 50 == 0:
            progress_cb((step_i + 1) / steps)
    model.set_active_adapter(None)
    for p in model.parameters():
        p.requires_grad = True
    model.eval()
    return model, log


def finetune_skill(
    model: ActLoraPolicy,
    new_skill_id: str,
    demos: list[Demonstration],
    seed: int,
    steps: int = FINETUNE_STEPS,
    lr: float = FINETUNE_LR,
    batch_size: int = BATCH_SIZE,
    progress_cb=None,
) -> tuple[ActLoraPolicy, PolicyTrainLog]:
    """Frozen-base finetuning: only the new skill's adapter learns."""
    return _finetune(model, new_skill_id, demos, seed, steps, lr, batch_size,
                     freeze_base=True, progress_cb=progress_cb)


def finetune_full(
    model: ActLoraPolicy,
    new_skill_id: str,
    demos: list[Demonstration],
    seed: int,
    steps: int = FINETUNE_STEPS,
    lr: float = FINETUNE_LR,
    batch_size: int = BATCH_SIZE,
    progress_cb=None,
) -> tuple[ActLoraPolicy, PolicyTrainLog]:
    """Baseline: every parameter trains, which clobbers prior skills."""
    return _finetune(model, new_skill_id, demos, seed, steps, lr, batch_size,
                     freeze_base=False, progress_cb=progress_cb)


# ---------------------------------------------------------------------------
# Hashing and rollout execution


def params_hash(model: ActLoraPolicy, names: list[str] | None = None) -> str:
    """sha256 over the named parameters (all when names is None)."""
    state = model.state_dict()
    selected = sorted(state) if names is None else sorted(names)
    h = hashlib.sha256()
    for name in selected:
        h.update(name.encode())
        h.update(state[name].detach().numpy().tobytes())
    return h.hexdigest()


def base_hash(model: ActLoraPolicy) -> str:
    return params_hash(model, model.base_param_names())

def adapter_hash(model: ActLoraPolicy, adapter_id: str) -> str:
    return params_hash(model, model.adapter_param_names(adapter_id))


class ChunkPolicy:
    """Executes each predicted chunk to completion, then re-plans.

    With ensembling enabled it re-plans every step and averages overlapping
    chunk predictions with exponential weights (off by default).
    """

    def __init__(self, model: ActLoraPolicy, adapter_id: str,
                 ensemble: bool = False, ensemble_coeff: float = 0.01):
        if not model.has_adapter(adapter_id):
            raise KeyError(f"unknown adapter {adapter_id!r}")
        self.model = model
        self.adapter_id = adapter_id
        self.ensemble = ensemble
        self.coeff = ensemble_coeff
        self._queue: list[np.ndarray] = []
        self._history: list[tuple[int, np.ndarray]] = []
        self._t = 0

    def reset(self, episode_seed: int) -> None:
        self._queue = []
        self._history = []
        self._t = 0

    def act(self, frame: np.ndarray, proprio: np.ndarray) -> np.ndarray:
        if self.ensemble:
            chunk = predict_chunk(self.model, self.adapter_id, frame, proprio)
            self._history.append((self._t, chunk))
            horizon = self.model.config.chunk_size
            self._history = [(s, c) for s, c in self._history if s + horizon > self._t]
            num = np.zeros(chunk.shape[1])
            den = 0.0
            for start, c in self._history:
                age = self._t - start
                w = float(np.exp(-self.coeff * age))
                num += w * c[age]
                den += w
            self._t += 1
            return num / den
        if not self._queue:
            chunk = predict_chunk(self.model, self.adapter_id, frame, proprio)
            self._queue = [chunk[i] for i in range(chunk.shape[0])]
        self._t += 1
        return self._queue.pop(0)


def act_in_env(
    model: ActLoraPolicy,
    adapter_id: str,
    world: World,
    spec: SkillSpec,
    episode_seed: int,
    max_steps: int = 80,
    record_frames: bool = False,
) -> RolloutResult:
    policy = ChunkPolicy(model, adapter_id)
    return rollout(world, policy, spec, episode_seed, max_steps, record_frames)


def success_rate(
    model: ActLoraPolicy,
    adapter_id: str,
    world: World,
    spec: SkillSpec,
    n_rollouts: int = 50,
    max_steps: int = 80,
    seed_base: int = 0,
) -> float:
    wins = 0
    for i in range(n_rollouts):
        wins += act_in_env(model, adapter_id, world, spec, seed_base + i, max_steps).success
    return wins / n_rollouts
