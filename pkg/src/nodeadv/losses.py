"""Training objectives for the adversarial generator and its discriminator.

The generator minimizes

    L_G = L_CW + w_gan * L_LSGAN_G + w_hinge * L_hinge

where L_CW is a Carlini-Wagner margin on the target model's logits, L_LSGAN_G
is the least-squares GAN generator term, and L_hinge softly penalizes the L2
size of the perturbation. All batch reductions are arithmetic means.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch


@dataclass(frozen=True)
class LossWeights:
    """kappa: CW confidence floor; c_hinge: L2 threshold; w_gan/w_hinge: term weights."""

    kappa: float = 0.0
    c_hinge: float = 0.1
    w_gan: float = 0.01
    w_hinge: float = 0.01

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError(f"kappa must be nonnegative, got {self.kappa}")
        if self.c_hinge < 0:
            raise ValueError(f"c_hinge must be nonnegative, got {self.c_hinge}")


def _check_logits(logits: torch.Tensor):
    if logits.dim() != 2:
        raise ValueError(f"logits must be (B, K), got shape {tuple(logits.shape)}")
    if logits.shape[1] < 2:
        raise ValueError(f"need at least 2 classes, got K={logits.shape[1]}")


def cw_untargeted(logits: torch.Tensor, y: torch.Tensor, kappa: float = 0.0) -> torch.Tensor:
    """Mean over the batch of max(f_true - max_{i != true} f_i, kappa).

    Minimizing this drives the true-class logit below its strongest
    competitor; once a sample is misclassified the term floors at kappa.
    """
    _check_logits(logits)
    y = y.long().view(-1, 1)
    true = logits.gather(1, y).squeeze(1)
    other = logits.scatter(1, y, float("-inf")).amax(dim=1)
    return torch.clamp(true - other, min=kappa).mean()


def cw_targeted(logits: torch.Tensor, target: int, kappa: float = 0.0) -> torch.Tensor:
    """Mean over the batch of max(max_{i != target} f_i - f_target, kappa)."""
    _check_logits(logits)
    if not (0 <= target < logits.shape[1]):
        raise ValueError(f"target class {target} outside [0, {logits.shape[1]})")
    idx = torch.full((logits.shape[0], 1), target, dtype=torch.long, device=logits.device)
    tgt = logits.gather(1, idx).squeeze(1)
    other = logits.scatter(1, idx, float("-inf")).amax(dim=1)
    return torch.clamp(other - tgt, min=kappa).mean()


def hinge_penalty(delta: torch.Tensor, c_hinge: float) -> torch.Tensor:
    """Mean over the batch of max(0, ||delta_b||_2 - c_hinge), flattening per sample."""
    norms = delta.flatten(start_dim=1).norm(p=2, dim=1)
    return torch.relu(norms - c_hinge).mean()


def lsgan_generator(d_fake: torch.Tensor) -> torch.Tensor:
    """Least-squares generator loss 0.5 * E[(D(x_adv) - 1)^2]."""
    return 0.5 * torch.mean((d_fake - 1.0) ** 2)


def lsgan_discriminator(d_real: torch.Tensor, d_fake: torch.Tensor) -> torch.Tensor:
    """Least-squares discriminator loss 0.5 * E[(D(x) - 1)^2] + 0.5 * E[D(x_adv)^2]."""
    return 0.5 * torch.mean((d_real - 1.0) ** 2) + 0.5 * torch.mean(d_fake**2)


def generator_total(cw: torch.Tensor, gan: torch.Tensor, hinge: torch.Tensor, w: LossWeights) -> torch.Tensor:
    """Weighted sum cw + w_gan * gan + w_hinge * hinge."""
    return cw + w.w_gan * gan + w.w_hinge * hinge
