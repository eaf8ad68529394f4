"""Gradient-sign attacks against any classifier exposing logits and gradients.

Four attacks built on one iterate:

    FGSM      x_adv = x + eps * sign(grad J)
    I-FGSM    x_{n+1} = x_n + alpha * sign(grad J(x_n))
    MI-FGSM   g_{n+1} = mu * g_n + grad J(x_n) / ||grad J(x_n)||_1,
              x_{n+1} = x_n + alpha * sign(g_{n+1})
    NI-FGSM   as MI-FGSM with the gradient taken at the lookahead point
              x_n + alpha * mu * g_n

J is cross-entropy on the true label (ascended) in untargeted mode and
cross-entropy on the target class (descended) in targeted mode. After every
step the cumulative perturbation is clipped to [-eps, eps] and pixels to
[0, 1].
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Protocol

import torch

from .core import ImageBatch, LabelSpec, clip_elementwise


@dataclass(frozen=True)
class GradAttackConfig:
    """eps: total budget; step_size: per-iteration stride; decay: momentum mu."""

    eps: float = 15 / 255
    step_size: float = 2 / 255
    n_iter: int = 10
    decay: float = 1.0

    def __post_init__(self):
        if not (0 < self.step_size <= self.eps):
            raise ValueError(f"need 0 < step_size <= eps, got step={self.step_size}, eps={self.eps}")
        if self.n_iter < 1:
            raise ValueError(f"n_iter must be >= 1, got {self.n_iter}")
        if self.decay < 0:
            raise ValueError(f"decay must be nonnegative, got {self.decay}")


class ClassifierHandle(Protocol):
    """Frozen (evaluation-mode) classifier surface the attacks operate on."""

    def logits(self, x) -> torch.Tensor: ...

    def loss_grad(self, x, spec: LabelSpec, y: torch.Tensor | None = None) -> torch.Tensor: ...


def sign(v: torch.Tensor) -> torch.Tensor:
    """Elementwise sign in {-1, 0, +1}; exact zero maps to 0."""
    return torch.sign(v)


def _require_labels(x: ImageBatch, spec: LabelSpec):
    if not spec.targeted and x.labels is None:
        raise ValueError("untargeted attacks need ground-truth labels on the image batch")


def _normalized_grad(grad: torch.Tensor) -> torch.Tensor:
    """Per-sample L1-normalized gradient; zero-gradient samples contribute 0."""
    norms = grad.flatten(start_dim=1).abs().sum(dim=1)
    zero = norms == 0
    if bool(zero.any()):
        warnings.warn(
            f"{int(zero.sum())} sample(s) have zero attack-loss gradient; "
            "their momentum contribution is 0",
            RuntimeWarning,
        )
    safe = torch.where(zero, torch.ones_like(norms), norms)
    out = grad / safe.view(-1, *([1] * (grad.dim() - 1)))
    return torch.where(zero.view(-1, *([1] * (grad.dim() - 1))), torch.zeros_like(out), out)


def _iterate(
    model: ClassifierHandle,
    x: ImageBatch,
    spec: LabelSpec,
    eps: float,
    step_size: float,
    n_iter: int,
    decay: float = 0.0,
    momentum: bool = False,
    lookahead: bool = False,
) -> ImageBatch:
    """Shared sign-attack iterate tracking the cumulative perturbation delta."""
    _require_labels(x, spec)
    data, y = x.data, x.labels
    # targeted mode descends J(target); folding the flip into the direction
    # keeps one ascent recurrence for all four attacks
    direction = -1.0 if spec.targeted else 1.0
    delta = torch.zeros_like(data)
    g = torch.zeros_like(data) if momentum else None
    for _ in range(n_iter):
        x_n = clip_elementwise(data + delta, 0.0, 1.0)
        if lookahead and g is not None:
            x_eval = x_n + step_size * decay * g
        else:
            x_eval = x_n
        grad = model.loss_grad(x_eval, spec, y=y)
        if momentum:
            g = decay * g + direction * _normalized_grad(grad)
            d = g
        else:
            d = direction * grad
        delta = clip_elementwise(delta + step_size * sign(d), -eps, eps)
    return x.with_data(clip_elementwise(data + delta, 0.0, 1.0))


def fgsm(model: ClassifierHandle, x: ImageBatch, spec: LabelSpec, eps: float) -> ImageBatch:
    """Single-step sign attack with step size equal to the full budget."""
    if eps == 0:
        _require_labels(x, spec)
        return x.with_data(clip_elementwise(x.data, 0.0, 1.0))
    return _iterate(model, x, spec, eps=eps, step_size=eps, n_iter=1)


def ifgsm(model: ClassifierHandle, x: ImageBatch, spec: LabelSpec, cfg: GradAttackConfig) -> ImageBatch:
    """Iterative FGSM with per-step budget and pixel-range projection."""
    return _iterate(model, x, spec, eps=cfg.eps, step_size=cfg.step_size, n_iter=cfg.n_iter)


def mifgsm(model: ClassifierHandle, x: ImageBatch, spec: LabelSpec, cfg: GradAttackConfig) -> ImageBatch:
    """Momentum iterative FGSM (decay mu, per-sample L1-normalized gradients)."""
    return _iterate(
        model, x, spec,
        eps=cfg.eps, step_size=cfg.step_size, n_iter=cfg.n_iter,
        decay=cfg.decay, momentum=True,
    )


def nifgsm(model: ClassifierHandle, x: ImageBatch, spec: LabelSpec, cfg: GradAttackConfig) -> ImageBatch:
    """Nesterov iterative FGSM: momentum plus gradient at the lookahead point."""
    return _iterate(
        model, x, spec,
        eps=cfg.eps, step_size=cfg.step_size, n_iter=cfg.n_iter,
        decay=cfg.decay, momentum=True, lookahead=True,
    )
