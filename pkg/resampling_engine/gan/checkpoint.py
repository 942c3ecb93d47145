"""
Versioned model checkpoints: config, preprocessor, history and network weights in one file.
"""
import logging
import pickle
from dataclasses import asdict
from pathlib import Path

import torch

import settings
from resampling_engine.core.preprocess import EncodedLayout, PreprocessorModel
from resampling_engine.errors import CheckpointError
from resampling_engine.gan.config import GanConfig
from resampling_engine.gan.networks import AuxClassifier, Discriminator, GanParams, Generator
from resampling_engine.gan.training import EpochLog, TrainedGan

_logger = logging.getLogger(__name__)


def save_checkpoint(gan: TrainedGan, path) -> Path:
    path = Path(path)
    classifier = gan.params.classifier
    payload = {
        "format_version": settings.CHECKPOINT_FORMAT_VERSION,
        "config": gan.config.model_dump(mode="json"),
        "layout": gan.layout.to_dict(),
        "preprocessor": gan.preprocessor.to_dict() if gan.preprocessor is not None else None,
        "label_prior": gan.label_prior,
        "seed": gan.seed,
        "history": [asdict(h) for h in gan.history],
        "steps": {"discriminator": gan.disc_steps, "generator": gan.gen_steps},
        "step_trace": [list(t) for t in gan.step_trace],
        "generator": gan.params.generator.state_dict(),
        "discriminator": gan.params.discriminator.state_dict(),
        "classifier": classifier.state_dict() if classifier is not None else None,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)
    _logger.info("Checkpoint written to %s", path)
    return path


def load_checkpoint(path) -> TrainedGan:
    """
    Rebuild a TrainedGan from a checkpoint file.

    Raises:
        CheckpointError: unreadable file or unsupported format version.
    """
    try:
        payload = torch.load(Path(path), map_location="cpu", weights_only=True)
    except (OSError, RuntimeError, pickle.UnpicklingError) as e:
        raise CheckpointError(f"Could not read checkpoint '{path}': {e}") from e

    version = payload.get("format_version") if isinstance(payload, dict) else None
    if version != settings.CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(f"Unsupported checkpoint format version: {version}")

    try:
        config = GanConfig.model_validate(payload["config"])
        layout = EncodedLayout.from_dict(payload["layout"])
        generator = Generator(layout, config)
        generator.load_state_dict(payload["generator"])
        discriminator = Discriminator(layout, config)
        discriminator.load_state_dict(payload["discriminator"])
        classifier = None
        if payload["classifier"] is not None:
            classifier = AuxClassifier(layout, config)
            classifier.load_state_dict(payload["classifier"])
            for p in classifier.parameters():
                p.requires_grad_(False)
            classifier.eval()
    except (KeyError, RuntimeError, ValueError) as e:
        raise CheckpointError(f"Checkpoint '{path}' is inconsistent: {e}") from e

    generator.eval()
    discriminator.eval()
    pre = payload["preprocessor"]
    return TrainedGan(
        params=GanParams(generator=generator, discriminator=discriminator, classifier=classifier),
        config=config,
        layout=layout,
        label_prior=float(payload["label_prior"]),
        history=[EpochLog(**h) for h in payload["history"]],
        disc_steps=int(payload["steps"]["discriminator"]),
        gen_steps=int(payload["steps"]["generator"]),
        step_trace=[tuple(t) for t in payload["step_trace"]],
        preprocessor=PreprocessorModel.from_dict(pre) if pre is not None else None,
        seed=payload["seed"],
    )
