"""
Building blocks shared by the generator, discriminator and auxiliary classifier.
"""
from typing import Optional, Sequence

import torch
from torch import nn

from resampling_engine.core.preprocess import EncodedLayout


def sample_gumbel(shape, generator: Optional[torch.Generator] = None,
                  dtype=torch.float32, eps: float = 1e-10) -> torch.Tensor:
    """Gumbel(0, 1) draws."""
    u = torch.rand(shape, generator=generator, dtype=dtype)
    return -torch.log(-torch.log(u + eps) + eps)


def gumbel_softmax(logits: torch.Tensor, tau: float, gumbel_noise: Optional[torch.Tensor] = None,
                   generator: Optional[torch.Generator] = None) -> torch.Tensor:
    """
    Softmax of Gumbel-perturbed logits at temperature tau, over the last axis.

    Args:
        logits: Unnormalised scores, shape (..., k).
        tau: Temperature, > 0.
        gumbel_noise: Noise of the same shape; drawn from `generator` when omitted.
        generator: RNG stream used for the noise.

    Returns:
        Soft one-hot rows summing to 1.
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if not torch.isfinite(logits).all():
        raise ValueError("gumbel_softmax received non-finite logits")
    if gumbel_noise is None:
        gumbel_noise = sample_gumbel(logits.shape, generator=generator, dtype=logits.dtype)
    elif gumbel_noise.shape != logits.shape:
        raise ValueError(f"noise shape {tuple(gumbel_noise.shape)} != logits shape {tuple(logits.shape)}")
    return torch.softmax((logits + gumbel_noise) / tau, dim=-1)


def crosslayer(x0: torch.Tensor, xn: torch.Tensor, w: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """x0 * (xn . w) + b + xn, without forming the outer product. Works on single rows or batches."""
    d = x0.shape[-1]
    if xn.shape[-1] != d or w.shape[-1] != d or b.shape[-1] != d or x0.shape != xn.shape:
        raise ValueError(
            f"crosslayer dimension mismatch: x0 {tuple(x0.shape)}, xn {tuple(xn.shape)}, "
            f"w {tuple(w.shape)}, b {tuple(b.shape)}"
        )
    return x0 * (xn @ w).unsqueeze(-1) + b + xn


class CrossLayer(nn.Module):

    def __init__(self, dim: int):
        super().__init__()
        self.w = nn.Parameter(torch.empty(dim))
        self.b = nn.Parameter(torch.zeros(dim))
        nn.init.normal_(self.w, std=1.0 / dim ** 0.5)

    def forward(self, x0, xn):
        return crosslayer(x0, xn, self.w, self.b)


class CrossNet(nn.Module):
    """A stack of crosslayers, all fed the same x0."""

    def __init__(self, dim: int, n_layers: int):
        super().__init__()
        self.layers = nn.ModuleList([CrossLayer(dim) for _ in range(n_layers)])

    def forward(self, x0):
        xn = x0
        for layer in self.layers:
            xn = layer(x0, xn)
        return xn


class CategoricalEmbedding(nn.Module):
    """Bias-free linear map of a (soft) one-hot span; row i of `table` embeds category i."""

    def __init__(self, n_categories: int, dim: int):
        super().__init__()
        self.linear = nn.Linear(n_categories, dim, bias=False)

    @property
    def table(self) -> torch.Tensor:
        return self.linear.weight.T

    def forward(self, x):
        return self.linear(x)


class TabularEmbedder(nn.Module):
    """
    Numeric block passed through, each categorical span replaced by its embedding.
    With `naive=True` every encoded column is passed through untouched.
    """

    def __init__(self, layout: EncodedLayout, embedding_dims: Sequence[int], naive: bool = False):
        super().__init__()
        self.layout = layout
        self.naive = naive
        if naive:
            self.embeddings = nn.ModuleList()
            self.output_dim = layout.width
        else:
            self.embeddings = nn.ModuleList(
                [CategoricalEmbedding(span.width, dim) for span, dim in zip(layout.spans, embedding_dims)]
            )
            self.output_dim = layout.n_numeric + sum(embedding_dims)

    def forward(self, x):
        if self.naive or not self.layout.spans:
            return x
        parts = [x[:, :self.layout.n_numeric]]
        for span, embed in zip(self.layout.spans, self.embeddings):
            parts.append(embed(x[:, span.start:span.stop]))
        return torch.cat(parts, dim=1)


def hidden_stack(input_dim: int, widths: Sequence[int], slope: float, layer_norm: bool = False) -> nn.Sequential:
    """Linear + leaky rectifier per width, optionally followed by layer normalisation."""
    layers = []
    dim = input_dim
    for width in widths:
        layers += [nn.Linear(dim, width), nn.LeakyReLU(slope)]
        if layer_norm:
            layers.append(nn.LayerNorm(width))
        dim = width
    return nn.Sequential(*layers)
