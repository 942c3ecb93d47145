"""
Loss terms of the adversarial game: critic/generator losses per loss mode,
gradient penalty, and the capped auxiliary-classifier term with its scale.
"""
from typing import Callable, Optional, Tuple

import torch
import torch.nn.functional as F

LOSS_MODES = ("wgan_gp", "vanilla", "vanilla_gp")
PROB_CLAMP = 1e-7


def _check_mode(mode: str):
    if mode not in LOSS_MODES:
        raise ValueError(f"Unknown loss mode '{mode}', expected one of {LOSS_MODES}")


def discriminator_loss(mode: str, disc_real: torch.Tensor, disc_fake: torch.Tensor) -> torch.Tensor:
    _check_mode(mode)
    if mode == "wgan_gp":
        return -(disc_real.mean() - disc_fake.mean())
    # cross-entropy on logits: real -> 1, fake -> 0
    return F.softplus(-disc_real).mean() + F.softplus(disc_fake).mean()


def generator_loss(mode: str, disc_fake: torch.Tensor) -> torch.Tensor:
    _check_mode(mode)
    if mode == "wgan_gp":
        return -disc_fake.mean()
    # non-saturating: maximise log D(G(z))
    return F.softplus(-disc_fake).mean()


def loss_terms(mode: str, disc_real: torch.Tensor, disc_fake: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """(discriminator loss, generator loss), before penalty and AC terms."""
    return discriminator_loss(mode, disc_real, disc_fake), generator_loss(mode, disc_fake)


def gradient_penalty(disc: Callable[[torch.Tensor, torch.Tensor], torch.Tensor],
                     real_batch: torch.Tensor, fake_batch: torch.Tensor, labels: torch.Tensor,
                     gp_lambda: float, generator: Optional[torch.Generator] = None) -> torch.Tensor:
    """
    Two-sided penalty on the critic's input-gradient norm at random interpolates.

    Each interpolate is paired with the real row's label. The result keeps its
    graph, so it can be backpropagated into the critic weights.
    """
    if real_batch.shape != fake_batch.shape:
        raise ValueError(f"real {tuple(real_batch.shape)} and fake {tuple(fake_batch.shape)} batches differ")
    eps = torch.rand((real_batch.shape[0], 1), generator=generator, dtype=real_batch.dtype)
    interpolates = (eps * real_batch + (1 - eps) * fake_batch).detach().requires_grad_(True)
    scores = disc(interpolates, labels)
    grads = torch.autograd.grad(outputs=scores.sum(), inputs=interpolates,
                                create_graph=True, retain_graph=True)[0]
    return gp_lambda * ((grads.norm(2, dim=1) - 1) ** 2).mean()


def ac_loss_term(ac_probs: torch.Tensor, target_labels: torch.Tensor, cap: float = 0.3) -> torch.Tensor:
    """Batch mean of max(BCE - cap, 0); confident enough predictions cost nothing."""
    p = ac_probs.clamp(PROB_CLAMP, 1 - PROB_CLAMP)
    y = target_labels.to(p.dtype)
    bce = -(y * torch.log(p) + (1 - y) * torch.log(1 - p))
    return torch.clamp(bce - cap, min=0).mean()


def ac_scale(disc_fake_scores: torch.Tensor, ratio: float = 0.1) -> torch.Tensor:
    """ratio * mean |D(G(z))|, detached."""
    return ratio * disc_fake_scores.detach().abs().mean()
