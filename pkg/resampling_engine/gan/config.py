"""
Hyperparameters of the conditional WGAN and its grid search.
"""
import itertools
import math
from pathlib import Path
from typing import List, Literal, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from resampling_engine.errors import ConfigError

LossMode = Literal["wgan_gp", "vanilla", "vanilla_gp"]


class GanConfig(BaseModel):
    """Frozen once built; derive validated variants with `with_updates`."""
    model_config = ConfigDict(frozen=True)

    noise_dim: int = Field(30, gt=0)
    gumbel_tau: float = Field(0.66, gt=0)
    gp_lambda: float = Field(15.0, ge=0)
    ac_cap: float = Field(0.3, ge=0)
    ac_scale_ratio: float = Field(0.1, ge=0)
    critic_updates: int = Field(3, gt=0)
    batch_size: int = Field(64, gt=0)
    epochs: int = Field(300, gt=0)
    gen_layers: Tuple[int, ...] = (128, 64)
    gen_crosslayers: int = Field(1, ge=0)
    extra_numeric_layer: bool = False
    disc_layers: Tuple[int, ...] = (128, 64, 32)
    disc_crosslayers: int = Field(2, ge=0)
    ac_layers: Tuple[int, ...] = (64, 64)
    ac_crosslayers: int = Field(2, ge=0)
    leaky_slope: float = Field(0.2, ge=0)
    learning_rate: float = Field(5e-4, gt=0)
    betas: Tuple[float, float] = (0.0, 0.9)
    numeric_noise_sd: float = Field(0.01, ge=0)
    loss_mode: LossMode = "wgan_gp"
    use_ac: bool = True
    naive_categorical: bool = False
    ac_pretrain_epochs: int = Field(30, gt=0)
    self_conditioning_dim: int = Field(16, gt=0)
    max_embedding_dim: int = Field(20, gt=0)
    hard_sampling: Literal["sample", "argmax"] = "sample"

    @field_validator("gen_layers", "disc_layers", "ac_layers")
    @classmethod
    def _positive_widths(cls, value):
        if not value or any(w <= 0 for w in value):
            raise ValueError("layer widths must be a non-empty list of positive integers")
        return tuple(value)

    @field_validator("betas")
    @classmethod
    def _check_betas(cls, value):
        if not all(0.0 <= b < 1.0 for b in value):
            raise ValueError("Adam betas must lie in [0, 1)")
        return value

    def embedding_dim(self, n_categories: int) -> int:
        return min(math.ceil(n_categories / 3), self.max_embedding_dim)

    def with_updates(self, **updates) -> "GanConfig":
        """A copy with `updates` applied, validated like a freshly loaded config."""
        try:
            return GanConfig.model_validate({**self.model_dump(), **updates})
        except ValidationError as e:
            raise ConfigError(f"Invalid GAN config override {updates}: {e}") from e

    @property
    def uses_penalty(self) -> bool:
        return self.loss_mode in ("wgan_gp", "vanilla_gp")

    @classmethod
    def from_yaml(cls, path) -> "GanConfig":
        raw = read_yaml(path)
        try:
            return cls.model_validate(raw)
        except ValidationError as e:
            raise ConfigError(f"Invalid GAN config '{path}': {e}") from e


class GridSpec(BaseModel):
    """Candidate values searched by cross-validation; cells enumerate in canonical order."""
    model_config = ConfigDict(frozen=True)

    epochs: Tuple[int, ...] = (300, 500)
    gen_layers: Tuple[Tuple[int, ...], ...] = ((64,), (128, 64))
    extra_numeric_layer: Tuple[bool, ...] = (True, False)
    folds: int = Field(3, ge=2)
    selection_metric: Literal["auc_roc"] = "auc_roc"

    @model_validator(mode="after")
    def _non_empty(self):
        if not self.epochs or not self.gen_layers or not self.extra_numeric_layer:
            raise ValueError("every grid axis needs at least one candidate")
        return self

    @property
    def size(self) -> int:
        return len(self.epochs) * len(self.gen_layers) * len(self.extra_numeric_layer)

    def cells(self, base: GanConfig) -> List[GanConfig]:
        return [
            base.with_updates(epochs=e, gen_layers=tuple(g), extra_numeric_layer=x)
            for e, g, x in itertools.product(self.epochs, self.gen_layers, self.extra_numeric_layer)
        ]


def read_yaml(path) -> dict:
    try:
        with open(Path(path), "r", encoding="utf-8") as fh:
            return yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"Could not read config '{path}': {e}") from e
