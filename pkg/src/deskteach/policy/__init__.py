"""Chunked-action policies with per-skill low-rank adapters, plus baselines."""

from .act import ActConfig, ActLoraPolicy, predict_chunk
from .gmm import (
    GmmPolicy,
    GmmPolicyConfig,
    GmmRolloutPolicy,
    GmmTrainLog,
    finetune_gmm_skill,
    gmm_predict,
    train_gmm_baseline,
)
from .gradcheck import GradCheckReport, grad_check
from .lora import LoraLinear, adapter_key
from .train import (
    ChunkPolicy,
    PolicyTrainLog,
    act_in_env,
    adapter_hash,
    base_hash,
    chunk_loss,
    finetune_full,
    finetune_skill,
    params_hash,
    pretrain,
    success_rate,
)

__all__ = [
    "ActConfig",
    "ActLoraPolicy",
    "ChunkPolicy",
    "GmmPolicy",
    "GmmPolicyConfig",
    "GmmRolloutPolicy",
    "GmmTrainLog",
    "GradCheckReport",
    "LoraLinear",
    "PolicyTrainLog",
    "act_in_env",
    "adapter_hash",
    "adapter_key",
    "base_hash",
    "chunk_loss",
    "finetune_full",
    "finetune_gmm_skill",
    "finetune_skill",
    "gmm_predict",
    "grad_check",
    "params_hash",
    "predict_chunk",
    "pretrain",
    "success_rate",
]
