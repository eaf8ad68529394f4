"""Shared domain types: image batches, perturbations, budgets, and clipping.

All images live in [0, 1] as float tensors shaped (B, C, H, W). Budgets are
infinity-norm bounds stored as exact real quotients (e.g. 15/255), never as
integer pixel counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch


def clip_elementwise(v: torch.Tensor, lo: float, hi: float) -> torch.Tensor:
    """Clamp every element of ``v`` into [lo, hi]; shape is preserved."""
    if lo > hi:
        raise ValueError(f"invalid clipping range: lo={lo} > hi={hi}")
    return torch.clamp(v, min=lo, max=hi)


@dataclass(frozen=True)
class ImageBatch:
    """A batch of images in [0, 1] with optional integer class labels.

    data: (B, C, H, W) float tensor, every element in [0, 1].
    labels: (B,) int64 tensor or None (generation-only pipelines carry none).
    """

    data: torch.Tensor
    labels: torch.Tensor | None = None

    def __post_init__(self):
        if self.data.dim() != 4:
            raise ValueError(f"image data must be rank 4 (B,C,H,W), got shape {tuple(self.data.shape)}")
        if not self.data.is_floating_point():
            raise ValueError("image data must be a floating tensor scaled to [0,1]")
        if self.data.numel():
            lo, hi = self.data.min().item(), self.data.max().item()
            if lo < 0.0 or hi > 1.0:
                raise ValueError(f"image intensities out of range: min={lo}, max={hi}")
        if self.labels is not None:
            if self.labels.shape != (self.data.shape[0],):
                raise ValueError(
                    f"labels must be shaped ({self.data.shape[0]},), got {tuple(self.labels.shape)}"
                )

    @property
    def batch_size(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[1]

    def with_data(self, data: torch.Tensor) -> "ImageBatch":
        """Same labels, new pixel data (used by attacks to carry labels through)."""
        return ImageBatch(data=data, labels=self.labels)


@dataclass(frozen=True)
class Perturbation:
    """An additive perturbation bounded elementwise by ``budget`` (inf-norm)."""

    data: torch.Tensor
    budget: float

    def __post_init__(self):
        if self.budget <= 0:
            raise ValueError(f"budget must be positive, got {self.budget}")
        worst = self.data.abs().max().item() if self.data.numel() else 0.0
        if worst > self.budget:
            raise ValueError(f"perturbation exceeds budget: max |delta| = {worst} > {self.budget}")


@dataclass(frozen=True)
class AttackBudget:
    """Test-time budget eps_test and the (tunable) training budget eps_train."""

    eps_test: float
    eps_train: float
    norm: str = "inf"

    def __post_init__(self):
        if not (0.0 < self.eps_test <= 1.0):
            raise ValueError(f"eps_test must be in (0,1], got {self.eps_test}")
        if not (0.0 < self.eps_train <= 1.0):
            raise ValueError(f"eps_train must be in (0,1], got {self.eps_train}")
        if self.norm != "inf":
            raise ValueError("only the infinity norm is supported")


@dataclass(frozen=True)
class LabelSpec:
    """Attack goal: untargeted (flip away from truth) or targeted at one class."""

    mode: str = "untargeted"
    target_class: int | None = field(default=None)

    def __post_init__(self):
        if self.mode not in ("untargeted", "targeted"):
            raise ValueError(f"mode must be 'untargeted' or 'targeted', got {self.mode!r}")
        if self.mode == "targeted":
            if self.target_class is None or self.target_class < 0:
                raise ValueError("targeted mode requires a nonnegative target_class")
        elif self.target_class is not None:
            raise ValueError("target_class is only meaningful in targeted mode")

    @property
    def targeted(self) -> bool:
        return self.mode == "targeted"


def apply_perturbation(x: ImageBatch, delta: Perturbation) -> ImageBatch:
    """Add a perturbation and project back into the valid pixel range [0, 1]."""
    if delta.data.shape != x.data.shape:
        raise ValueError(
            f"perturbation shape {tuple(delta.data.shape)} does not match image shape {tuple(x.data.shape)}"
        )
    return x.with_data(clip_elementwise(x.data + delta.data, 0.0, 1.0))
