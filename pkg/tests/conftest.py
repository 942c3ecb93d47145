import numpy as np
import pandas as pd
import pytest
import yaml

from resampling_engine.core.preprocess import fit_preprocessor, transform, transform_mixed
from resampling_engine.core.schema import ColumnKind, ColumnSpec, DatasetSchema
from resampling_engine.datasets import make_toy_credit
from resampling_engine.gan.config import GanConfig


@pytest.fixture
def toy():
    """400-row toy credit frame and its schema."""
    return make_toy_credit(n_rows=400, minority_share=0.2, seed=0)


@pytest.fixture
def toy_encoded(toy):
    frame, schema = toy
    pre = fit_preprocessor(frame, schema)
    return pre, transform(pre, frame), transform_mixed(pre, frame)


@pytest.fixture
def toy_files(tmp_path, toy):
    """Toy data written as CSV with a schema YAML next to it; returns the schema path."""
    frame, schema = toy
    frame.to_csv(tmp_path / "toy.csv", index=False)
    raw = schema.model_dump(mode="json", exclude_none=True)
    raw["path"] = "toy.csv"
    path = tmp_path / "toy_schema.yaml"
    path.write_text(yaml.safe_dump(raw, sort_keys=False))
    return path


@pytest.fixture
def small_schema():
    return DatasetSchema(
        name="small",
        columns=[
            ColumnSpec(name="amount", kind=ColumnKind.NUMERICAL),
            ColumnSpec(name="colour", kind=ColumnKind.CATEGORICAL, categories=["red", "green", "blue"]),
            ColumnSpec(name="label", kind=ColumnKind.CATEGORICAL, categories=["no", "yes"]),
        ],
        target="label",
        positive_label="yes",
    )


@pytest.fixture
def small_frame():
    return pd.DataFrame({
        "amount": [1.0, np.nan, 3.0, 5.0],
        "colour": ["red", "green", "green", np.nan],
        "label": ["no", "no", "yes", "yes"],
    })


@pytest.fixture
def tiny_config():
    """A GAN small enough to train in a second."""
    return GanConfig(
        noise_dim=4, gen_layers=(8,), disc_layers=(8,), ac_layers=(8,),
        gen_crosslayers=1, disc_crosslayers=1, ac_crosslayers=1,
        batch_size=16, epochs=2, ac_pretrain_epochs=2,
    )


@pytest.fixture
def bench_raw(toy_files, tmp_path):
    """Raw benchmark config over the toy data, small enough for the unit suite."""
    return {
        "name": "toy",
        "datasets": [str(toy_files)],
        "methods": [{"tag": "none"}, {"tag": "random"}],
        "seeds": [0, 1],
        "bootstrap_size": 5,
        "output_dir": str(tmp_path / "results"),
        "n_jobs": 1,
    }


@pytest.fixture
def tiny_gan_raw(tiny_config):
    return tiny_config.model_dump(mode="json")
