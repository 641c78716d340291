"""Low-rank adapters on linear maps, with one adapter slot per skill.

Every adapted linear map computes ``base(x) + (alpha/r) * B(A(x))`` for the
currently active adapter. B starts at zero, so a freshly created adapter
leaves the map exactly equal to the base map. Adapters are keyed by
sanitized skill ids; at most one adapter is active per forward pass.
"""

from __future__ import annotations

import math

import torch
from torch import nn


def adapter_key(adapter_id: str) -> str:
    """ParameterDict-safe key (no dots, nonempty)."""
    key = adapter_id.replace(".", "_")
    if not key:
        raise ValueError("adapter id must be nonempty")
    return key


class LoraLinear(nn.Module):
    def __init__(self, in_features: int, out_features: int, rank: int, alpha: float | None = None):
        super().__init__()
        if rank < 1:
            raise ValueError("rank must be >= 1")
        self.base = nn.Linear(in_features, out_features)
        self.rank = rank
        self.alpha = float(alpha if alpha is not None else rank)
        self.lora_A = nn.ParameterDict()
        self.lora_B = nn.ParameterDict()
        self.active: str | None = None

    def add_adapter(self, key: str, generator: torch.Generator | None = None) -> None:
        if key in self.lora_A:
            raise ValueError(f"adapter {key!r} already exists")
        dtype = self.base.weight.dtype
        a = torch.empty(self.rank, self.base.in_features, dtype=dtype)
        # Kaiming-uniform A, zero B: the adapted map starts equal to the base map.
        nn.init.kaiming_uniform_(a, a=math.sqrt(5), generator=generator)
        self.lora_A[key] = nn.Parameter(a)
        self.lora_B[key] = nn.Parameter(torch.zeros(self.base.out_features, self.rank, dtype=dtype))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = self.base(x)
        if self.active is not None:
            a = self.lora_A[self.active]
            b = self.lora_B[self.active]
            out = out + (self.alpha / self.rank) * ((x @ a.T) @ b.T)
        return out


class LoraManagedModule(nn.Module):
    """Mixin for networks containing LoraLinear leaves."""

    def lora_linears(self) -> list[LoraLinear]:
        return [m for m in self.modules() if isinstance(m, LoraLinear)]

    def add_adapter(self, adapter_id: str, generator: torch.Generator | None = None) -> None:
        key = adapter_key(adapter_id)
        for m in self.lora_linears():
            m.add_adapter(key, generator)

    def set_active_adapter(self, adapter_id: str | None) -> None:
        key = None if adapter_id is None else adapter_key(adapter_id)
        for m in self.lora_linears():
            if key is not None and key not in m.lora_A:
                raise KeyError(f"unknown adapter {adapter_id!r}")
            m.active = key

    def has_adapter(self, adapter_id: str) -> bool:
        linears = self.lora_linears()
        return bool(linears) and adapter_key(adapter_id) in linears[0].lora_A

    def adapter_param_names(self, adapter_id: str | None = None) -> list[str]:
        """State-dict names of adapter parameters (all adapters, or just one)."""
        key = None if adapter_id is None else adapter_key(adapter_id)
        names = []
        for name, _ in self.named_parameters():
            parts = name.split(".")
            if len(parts) >= 2 and parts[-2] in ("lora_A", "lora_B"):
                if key is None or parts[-1] == key:
                    names.append(name)
        return names

    def base_param_names(self) -> list[str]:
        adapter = set(self.adapter_param_names())
        return [n for n, _ in self.named_parameters() if n not in adapter]
