"""
Generator, discriminator and auxiliary classifier for encoded tabular rows.
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import torch
from torch import nn

from resampling_engine.core.preprocess import EncodedLayout
from resampling_engine.gan.config import GanConfig
from resampling_engine.gan.layers import CategoricalEmbedding, CrossNet, TabularEmbedder, gumbel_softmax, hidden_stack


@dataclass
class SyntheticBatch:
    """Generator output: unbounded numeric block, one soft one-hot block per categorical column."""
    numeric: torch.Tensor
    categorical: Tuple[torch.Tensor, ...]
    labels: torch.Tensor

    def as_matrix(self) -> torch.Tensor:
        return torch.cat([self.numeric, *self.categorical], dim=1)


class Generator(nn.Module):
    """
    (z, y) -> encoded row.

    A hidden stack and a crosslayer stack both read [z, y]; their outputs are
    concatenated and feed one Gumbel-softmax head per categorical column and a
    linear numeric head. The numeric head also sees the embedded categorical
    outputs, reduced to `self_conditioning_dim` units, with gradients blocked
    on that path.
    """

    def __init__(self, layout: EncodedLayout, config: GanConfig):
        super().__init__()
        self.layout = layout
        self.config = config
        self.naive = config.naive_categorical

        input_dim = config.noise_dim + 1
        self.hidden = hidden_stack(input_dim, config.gen_layers, config.leaky_slope)
        self.cross = CrossNet(input_dim, config.gen_crosslayers)
        concat_dim = config.gen_layers[-1] + input_dim

        self.cat_heads = nn.ModuleList()
        self.self_embeddings = nn.ModuleList()
        self.reduce = None
        if self.naive:
            numeric_out = layout.width
        else:
            numeric_out = layout.n_numeric
            for span in layout.spans:
                self.cat_heads.append(nn.Linear(concat_dim, span.width))
                self.self_embeddings.append(CategoricalEmbedding(span.width, config.embedding_dim(span.width)))
            if layout.spans:
                emb_dim = sum(config.embedding_dim(span.width) for span in layout.spans)
                self.reduce = nn.Sequential(nn.Linear(emb_dim, config.self_conditioning_dim),
                                            nn.LeakyReLU(config.leaky_slope))

        num_in = concat_dim + (config.self_conditioning_dim if self.reduce is not None else 0)
        self.numeric_head = None
        if numeric_out > 0:
            layers = []
            if config.extra_numeric_layer:
                layers += [nn.Linear(num_in, config.gen_layers[-1]), nn.LeakyReLU(config.leaky_slope)]
                num_in = config.gen_layers[-1]
            layers.append(nn.Linear(num_in, numeric_out))
            self.numeric_head = nn.Sequential(*layers)

    def forward(self, z: torch.Tensor, y: torch.Tensor, generator: Optional[torch.Generator] = None,
                gumbel_noise: Optional[Sequence[torch.Tensor]] = None) -> SyntheticBatch:
        if z.ndim != 2 or z.shape[1] != self.config.noise_dim:
            raise ValueError(f"noise must have shape (batch, {self.config.noise_dim}), got {tuple(z.shape)}")
        y = y.reshape(-1, 1).to(z.dtype)
        h0 = torch.cat([z, y], dim=1)
        h = torch.cat([self.hidden(h0), self.cross(h0)], dim=1)

        cats = []
        for i, head in enumerate(self.cat_heads):
            noise = None if gumbel_noise is None else gumbel_noise[i]
            cats.append(gumbel_softmax(head(h), self.config.gumbel_tau, noise, generator))

        num_in = h
        if self.reduce is not None:
            embedded = torch.cat([embed(c.detach()) for embed, c in zip(self.self_embeddings, cats)], dim=1)
            num_in = torch.cat([h, self.reduce(embedded)], dim=1)
        if self.numeric_head is not None:
            numeric = self.numeric_head(num_in)
        else:
            numeric = h.new_zeros((h.shape[0], 0))
        return SyntheticBatch(numeric=numeric, categorical=tuple(cats), labels=y.squeeze(1))


class _TabularCritic(nn.Module):
    """Embeddings, then a layer-normalised hidden stack next to a crosslayer stack, then a scalar head."""

    def __init__(self, layout: EncodedLayout, config: GanConfig, widths, n_cross: int, with_label: bool):
        super().__init__()
        self.layout = layout
        self.config = config
        self.with_label = with_label
        dims = [config.embedding_dim(span.width) for span in layout.spans]
        self.embedder = TabularEmbedder(layout, dims, naive=config.naive_categorical)
        input_dim = self.embedder.output_dim + (1 if with_label else 0)
        self.hidden = hidden_stack(input_dim, widths, config.leaky_slope, layer_norm=True)
        self.cross = CrossNet(input_dim, n_cross)
        self.head = nn.Linear(widths[-1] + input_dim, 1)

    def _score(self, x: torch.Tensor, y: Optional[torch.Tensor] = None) -> torch.Tensor:
        if x.ndim != 2 or x.shape[1] != self.layout.width:
            raise ValueError(f"expected rows of width {self.layout.width}, got shape {tuple(x.shape)}")
        h0 = self.embedder(x)
        if self.with_label:
            h0 = torch.cat([h0, y.reshape(-1, 1).to(h0.dtype)], dim=1)
        h = torch.cat([self.hidden(h0), self.cross(h0)], dim=1)
        return self.head(h).squeeze(-1)


class Discriminator(_TabularCritic):
    """Conditional critic; unbounded output. Gaussian noise is added to numeric inputs."""

    def __init__(self, layout: EncodedLayout, config: GanConfig):
        super().__init__(layout, config, config.disc_layers, config.disc_crosslayers, with_label=True)

    def forward(self, x: torch.Tensor, y: torch.Tensor, generator: Optional[torch.Generator] = None,
                noise_sd: Optional[float] = None) -> torch.Tensor:
        sd = self.config.numeric_noise_sd if noise_sd is None else noise_sd
        n_noisy = self.layout.width if self.config.naive_categorical else self.layout.n_numeric
        if sd > 0 and n_noisy > 0:
            noise = torch.randn((x.shape[0], n_noisy), generator=generator, dtype=x.dtype) * sd
            x = torch.cat([x[:, :n_noisy] + noise, x[:, n_noisy:]], dim=1)
        return self._score(x, y)


class AuxClassifier(_TabularCritic):
    """P(minority | x). No label input, no input noise."""

    def __init__(self, layout: EncodedLayout, config: GanConfig):
        super().__init__(layout, config, config.ac_layers, config.ac_crosslayers, with_label=False)

    def logits(self, x: torch.Tensor) -> torch.Tensor:
        return self._score(x)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self._score(x))


@dataclass
class GanParams:
    generator: Generator
    discriminator: Discriminator
    classifier: Optional[AuxClassifier] = None


def build_networks(layout: EncodedLayout, config: GanConfig, seed: int) -> GanParams:
    """Fresh generator and discriminator with weights drawn from `seed`."""
    torch.manual_seed(seed)
    return GanParams(generator=Generator(layout, config), discriminator=Discriminator(layout, config))
