"""Central finite-difference verification of analytic gradients.

Runs a loss closure twice per probed coordinate and compares against the
autograd gradient, per parameter block. Intended for small 64-bit toy
configurations; tolerances come from the caller.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from ..seeding import rng_for


@dataclass
class BlockReport:
    name: str
    max_rel_err: float
    coords_checked: int


@dataclass
class GradCheckReport:
    blocks: list[BlockReport]

    @property
    def max_rel_err(self) -> float:
        return max((b.max_rel_err for b in self.blocks), default=0.0)

    def ok(self, tol: float) -> bool:
        return self.max_rel_err < tol

    def __str__(self) -> str:
        lines = [f"{b.name}: max_rel_err={b.max_rel_err:.3e} ({b.coords_checked} coords)"
                 for b in self.blocks]
        return "\n".join(lines)


def grad_check(
    loss_fn,
    named_params: dict[str, torch.Tensor],
    eps: float = 1e-5,
    max_coords_per_block: int = 24,
    seed: int = 0,
    grad_floor: float = 1e-7,
) -> GradCheckReport:
    """Compare autograd gradients of ``loss_fn()`` against central differences.

    Parameters must be float64 leaves that ``loss_fn`` reads on every call.
    Coordinates are sampled deterministically per block; coordinates where
    both gradients are below ``grad_floor`` count as agreeing.
    """
    params = dict(named_params)
    for name, p in params.items():
        if p.dtype != torch.float64:
            raise ValueError(f"{name}: gradient checks require float64 parameters")
        p.requires_grad_(True)
        if p.grad is not None:
            p.grad = None

    loss = loss_fn()
    loss.backward()

    blocks: list[BlockReport] = []
    rng = rng_for("grad-check", seed)
    for name, p in params.items():
        analytic = p.grad.detach().clone().reshape(-1) if p.grad is not None else torch.zeros(p.numel(), dtype=torch.float64)
        n = p.numel()
        coords = range(n) if n <= max_coords_per_block else sorted(
            rng.choice(n, size=max_coords_per_block, replace=False).tolist()
        )
        max_err = 0.0
        flat = p.data.reshape(-1)
        checked = 0
        with torch.no_grad():
            for i in coords:
                orig = float(flat[i])
                flat[i] = orig + eps
                plus = float(loss_fn())
                flat[i] = orig - eps
                minus = float(loss_fn())
                flat[i] = orig
                fd = (plus - minus) / (2 * eps)
                a = float(analytic[i])
                denom = max(abs(a), abs(fd))
                if denom > grad_floor:
                    max_err = max(max_err, abs(a - fd) / denom)
                checked += 1
        blocks.append(BlockReport(name, max_err, checked))
    for p in params.values():
        p.grad = None
    return GradCheckReport(blocks)
