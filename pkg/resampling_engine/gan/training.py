"""
Training Module
Responsible for auxiliary-classifier pretraining, the adversarial training
schedule, and drawing synthetic rows from a trained generator.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
import torch
import torch.nn.functional as F
from tqdm import tqdm

import settings
from resampling_engine.core.preprocess import EncodedLayout, EncodedMatrix, PreprocessorModel, inverse_transform
from resampling_engine.errors import TrainingError
from resampling_engine.gan.config import GanConfig
from resampling_engine.gan.losses import ac_loss_term, ac_scale, discriminator_loss, generator_loss, gradient_penalty
from resampling_engine.gan.networks import AuxClassifier, GanParams, SyntheticBatch, build_networks
from resampling_engine.seeding import derive_seed

_logger = logging.getLogger(__name__)

SAMPLE_CHUNK = 1024


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    wasserstein: float
    penalty: float
    ac_term: float
    ac_scale: float
    disc_loss: float
    gen_loss: float


@dataclass
class TrainedGan:
    params: GanParams
    config: GanConfig
    layout: EncodedLayout
    label_prior: float
    history: List[EpochLog]
    disc_steps: int
    gen_steps: int
    step_trace: List[Tuple[float, float]] = field(default_factory=list)  # (ac scale, mean |D(G(z))|) per generator step
    preprocessor: Optional[PreprocessorModel] = None
    seed: Optional[int] = None


def _require_labels(encoded: EncodedMatrix) -> np.ndarray:
    if encoded.labels is None:
        raise TrainingError("Training data carries no labels")
    return encoded.labels


def _freeze(model: torch.nn.Module):
    for p in model.parameters():
        p.requires_grad_(False)
    model.eval()


def pretrain_ac(encoded: EncodedMatrix, config: GanConfig, seed: int) -> Tuple[AuxClassifier, List[float]]:
    """
    Fit the auxiliary classifier on real rows with BCE, then freeze it.

    Returns:
        The frozen classifier and its mean training loss per epoch.

    Raises:
        TrainingError: if the labels hold a single class.
    """
    labels = _require_labels(encoded)
    if len(np.unique(labels)) < 2:
        raise TrainingError("Auxiliary classifier needs both classes in the training data")

    torch.set_num_threads(settings.TORCH_THREADS)
    torch.manual_seed(seed)
    rng = torch.Generator().manual_seed(seed)
    model = AuxClassifier(encoded.layout, config)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate, betas=config.betas)

    x = torch.as_tensor(encoded.values, dtype=torch.float32)
    y = torch.as_tensor(labels, dtype=torch.float32)
    n = x.shape[0]
    batch_size = min(config.batch_size, n)

    history = []
    for epoch in range(config.ac_pretrain_epochs):
        order = torch.randperm(n, generator=rng)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            loss = F.binary_cross_entropy_with_logits(model.logits(x[idx]), y[idx])
            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            optimizer.step()
            total += loss.item() * len(idx)
        history.append(total / n)
        _logger.debug("AC epoch %d/%d: bce=%.4f", epoch + 1, config.ac_pretrain_epochs, history[-1])

    _freeze(model)
    _logger.info("Auxiliary classifier pretrained for %d epochs (final bce %.4f)", len(history), history[-1])
    return model, history


def _check_finite(value: torch.Tensor, phase: str, snapshot: dict):
    if not torch.isfinite(value).all():
        snapshot = dict(snapshot, phase=phase, value=float(value.detach()))
        _logger.error("Non-finite %s loss, aborting training: %s", phase, snapshot)
        raise TrainingError(f"Non-finite {phase} loss at epoch {snapshot.get('epoch')}", snapshot=snapshot)


def _draw_conditions(n: int, prior: float, rng: torch.Generator) -> torch.Tensor:
    return torch.bernoulli(torch.full((n,), prior), generator=rng)


def _discriminator_step(params: GanParams, config: GanConfig, optimizer, real_x, real_y,
                        prior: float, rng: torch.Generator, snapshot: dict) -> dict:
    gen, disc = params.generator, params.discriminator
    batch = real_x.shape[0]

    with torch.no_grad():
        z = torch.rand((batch, config.noise_dim), generator=rng)
        fake_y = _draw_conditions(batch, prior, rng)
        fake_x = gen(z, fake_y, generator=rng).as_matrix()

    d_real = disc(real_x, real_y, generator=rng)
    d_fake = disc(fake_x, fake_y, generator=rng)
    loss = discriminator_loss(config.loss_mode, d_real, d_fake)
    penalty = torch.zeros(())
    if config.uses_penalty:
        penalty = gradient_penalty(lambda xs, ys: disc(xs, ys, generator=rng),
                                   real_x, fake_x, real_y, config.gp_lambda, generator=rng)
    total = loss + penalty
    _check_finite(total, "discriminator", snapshot)

    optimizer.zero_grad(set_to_none=True)
    total.backward()
    optimizer.step()
    return {
        "wasserstein": (d_real.mean() - d_fake.mean()).item(),
        "penalty": penalty.item(),
        "disc_loss": loss.item(),
    }


def _generator_step(params: GanParams, config: GanConfig, optimizer, batch: int,
                    prior: float, rng: torch.Generator, snapshot: dict) -> dict:
    gen, disc, classifier = params.generator, params.discriminator, params.classifier

    z = torch.rand((batch, config.noise_dim), generator=rng)
    gen_y = _draw_conditions(batch, prior, rng)
    fake_x = gen(z, gen_y, generator=rng).as_matrix()
    d_fake = disc(fake_x, gen_y, generator=rng)
    loss = generator_loss(config.loss_mode, d_fake)

    ac_term = torch.zeros(())
    scale = torch.zeros(())
    if classifier is not None:
        ac_term = ac_loss_term(classifier(fake_x), gen_y, config.ac_cap)
        scale = ac_scale(d_fake, config.ac_scale_ratio)
    total = loss + scale * ac_term
    _check_finite(total, "generator", snapshot)

    optimizer.zero_grad(set_to_none=True)
    total.backward()
    optimizer.step()
    return {
        "gen_loss": loss.item(),
        "ac_term": ac_term.item(),
        "ac_scale": scale.item(),
        "mean_abs_fake": d_fake.detach().abs().mean().item(),
    }


def train_cwgan(encoded: EncodedMatrix, config: GanConfig, seed: int,
                classifier: Optional[AuxClassifier] = None,
                preprocessor: Optional[PreprocessorModel] = None,
                verbose: bool = False) -> TrainedGan:
    """
    Train the conditional generator against the critic.

    Each epoch walks ⌊rows/batch⌋ shuffled batches (last partial batch dropped);
    every batch is one critic step and every `critic_updates`-th critic step is
    followed by one generator step. Generator conditions are drawn from the
    empirical label distribution. When `use_ac` is set and no classifier is
    given, one is pretrained first.

    Raises:
        TrainingError: batch larger than the data, or a non-finite loss.
    """
    labels = _require_labels(encoded)
    n = encoded.n_rows
    if config.batch_size > n:
        raise TrainingError(f"batch_size {config.batch_size} exceeds the {n} training rows")

    torch.set_num_threads(settings.TORCH_THREADS)
    if config.use_ac and classifier is None:
        classifier, _ = pretrain_ac(encoded, config, derive_seed(seed, "ac"))

    params = build_networks(encoded.layout, config, seed)
    params.classifier = classifier if config.use_ac else None
    opt_g = torch.optim.Adam(params.generator.parameters(), lr=config.learning_rate, betas=config.betas)
    opt_d = torch.optim.Adam(params.discriminator.parameters(), lr=config.learning_rate, betas=config.betas)
    rng = torch.Generator().manual_seed(seed)

    x = torch.as_tensor(encoded.values, dtype=torch.float32)
    y = torch.as_tensor(labels, dtype=torch.float32)
    prior = float(labels.mean())
    bs = config.batch_size
    n_batches = n // bs

    history, trace = [], []
    disc_steps = gen_steps = 0
    for epoch in tqdm(range(config.epochs), desc="cWGAN", disable=not verbose):
        d_logs, g_logs = [], []
        order = torch.randperm(n, generator=rng)
        for b in range(n_batches):
            idx = order[b * bs:(b + 1) * bs]
            snapshot = {"epoch": epoch, "disc_steps": disc_steps, "gen_steps": gen_steps}
            d_logs.append(_discriminator_step(params, config, opt_d, x[idx], y[idx], prior, rng, snapshot))
            disc_steps += 1

            if disc_steps % config.critic_updates == 0:
                g = _generator_step(params, config, opt_g, bs, prior, rng, snapshot)
                g_logs.append(g)
                gen_steps += 1
                trace.append((g["ac_scale"], g["mean_abs_fake"]))
                _logger.debug("generator step %d: ac_scale=%.6f mean|D(G(z))|=%.6f",
                              gen_steps, g["ac_scale"], g["mean_abs_fake"])

        log = EpochLog(
            epoch=epoch + 1,
            wasserstein=_mean(d_logs, "wasserstein"),
            penalty=_mean(d_logs, "penalty"),
            ac_term=_mean(g_logs, "ac_term"),
            ac_scale=_mean(g_logs, "ac_scale"),
            disc_loss=_mean(d_logs, "disc_loss"),
            gen_loss=_mean(g_logs, "gen_loss"),
        )
        history.append(log)
        if (epoch + 1) % settings.LOG_EVERY == 0 or epoch + 1 == config.epochs:
            _logger.info("epoch %d/%d: wasserstein=%.4f penalty=%.4f ac=%.4f (steps D=%d G=%d)",
                         log.epoch, config.epochs, log.wasserstein, log.penalty, log.ac_term,
                         disc_steps, gen_steps)

    for module in (params.generator, params.discriminator):
        module.eval()
    return TrainedGan(params=params, config=config, layout=encoded.layout, label_prior=prior,
                      history=history, disc_steps=disc_steps, gen_steps=gen_steps,
                      step_trace=trace, preprocessor=preprocessor, seed=seed)


def _mean(logs: List[dict], key: str) -> float:
    if not logs:
        return 0.0
    return float(np.mean([entry[key] for entry in logs]))


def _harden(batch: SyntheticBatch, gan: TrainedGan, hard: str, rng: torch.Generator) -> torch.Tensor:
    """Clip numerics to [0, 1] and turn each soft span into a one-hot row."""
    layout = gan.layout
    if gan.config.naive_categorical:
        raw = batch.numeric
        numeric = raw[:, :layout.n_numeric]
        soft = [raw[:, span.start:span.stop] for span in layout.spans]
        hard = "argmax"
    else:
        numeric = batch.numeric
        soft = list(batch.categorical)

    parts = [numeric.clamp(0.0, 1.0)]
    for probs in soft:
        if hard == "sample":
            idx = torch.multinomial(probs, 1, generator=rng).squeeze(1)
        else:
            idx = probs.argmax(dim=1)
        parts.append(F.one_hot(idx, probs.shape[1]).to(numeric.dtype))
    return torch.cat(parts, dim=1)


def sample_encoded(gan: TrainedGan, n: int, seed: int, label: int = 1, hard: Optional[str] = None) -> EncodedMatrix:
    """n generated rows conditioned on `label`, with hard one-hot spans and numerics in [0, 1]."""
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    hard = hard or gan.config.hard_sampling
    rng = torch.Generator().manual_seed(seed)
    generator = gan.params.generator
    generator.eval()

    chunks = []
    with torch.no_grad():
        remaining = n
        while remaining > 0:
            m = min(remaining, SAMPLE_CHUNK)
            z = torch.rand((m, gan.config.noise_dim), generator=rng)
            y = torch.full((m,), float(label))
            chunks.append(_harden(generator(z, y, generator=rng), gan, hard, rng).numpy())
            remaining -= m

    values = np.vstack(chunks).astype(np.float64) if chunks else np.zeros((0, gan.layout.width))
    return EncodedMatrix(values=values, layout=gan.layout, labels=np.full(n, label, dtype=np.int64))


def sample_minority(gan: TrainedGan, n: int, seed: int, hard: Optional[str] = None) -> pd.DataFrame:
    """n synthetic minority rows in raw table space, label column set to the positive label."""
    if gan.preprocessor is None:
        raise TrainingError("Trained GAN has no preprocessor attached; cannot map rows to raw space")
    encoded = sample_encoded(gan, n, seed, label=1, hard=hard)
    return inverse_transform(gan.preprocessor, encoded)


def classifier_scores(gan: TrainedGan, matrix: EncodedMatrix) -> np.ndarray:
    """Frozen auxiliary-classifier probabilities for the given rows."""
    if gan.params.classifier is None:
        raise TrainingError("This GAN was trained without an auxiliary classifier")
    with torch.no_grad():
        x = torch.as_tensor(matrix.values, dtype=torch.float32)
        return gan.params.classifier(x).numpy().astype(np.float64)


def ac_score_table(gan: TrainedGan, real: EncodedMatrix, n_per_class: int, seed: int) -> pd.DataFrame:
    """Classifier scores per (source, class) for real rows and rows generated for each class."""
    frames = []
    real_scores = classifier_scores(gan, real)
    frames.append(pd.DataFrame({"source": "real", "label": real.labels, "score": real_scores}))
    for label in (0, 1):
        synth = sample_encoded(gan, n_per_class, derive_seed(seed, "ac_scores", label), label=label)
        frames.append(pd.DataFrame({"source": "synthetic", "label": label,
                                    "score": classifier_scores(gan, synth)}))
    return pd.concat(frames, ignore_index=True)
