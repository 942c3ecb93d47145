import numpy as np
import pytest
import yaml

import results_store
from resampling_engine.benchmark import BenchmarkConfig, run_benchmark, split_dataset
from resampling_engine.core.schema import DatasetSchema, load_dataset
from resampling_engine.errors import ConfigError


def test_record_count_and_layout(bench_raw):
    result = run_benchmark(BenchmarkConfig.from_dict(bench_raw))
    # 1 dataset x 2 seeds x 2 methods x 5 classifiers x 3 metrics
    assert result.n_records == 60
    assert result.n_failures == 0
    frame = results_store.records_frame(result.output_dir)
    assert len(frame) == 60
    assert set(frame["metric"]) == {"auc_roc", "auc_pr", "brier"}
    assert all(len(b) == 5 for b in frame["bootstrap"])
    assert len(results_store.read_runs(result.output_dir)) == 4


def test_every_method_sees_the_same_partition(bench_raw):
    result = run_benchmark(BenchmarkConfig.from_dict(bench_raw))
    by_seed = {}
    for run in result.runs:
        by_seed.setdefault(run.seed, set()).add((run.partition_checksum, run.train_checksum))
    assert all(len(checksums) == 1 for checksums in by_seed.values())
    assert by_seed[0] != by_seed[1]


def test_rerun_is_byte_identical(bench_raw):
    config = BenchmarkConfig.from_dict(bench_raw)
    first = run_benchmark(config)
    metrics = (first.output_dir / results_store.METRICS_FILE).read_bytes()
    second = run_benchmark(config)
    assert (second.output_dir / results_store.METRICS_FILE).read_bytes() == metrics


def test_parallel_run_matches_serial(bench_raw, tmp_path):
    serial = run_benchmark(BenchmarkConfig.from_dict(bench_raw))
    parallel_raw = dict(bench_raw, n_jobs=2, output_dir=str(tmp_path / "parallel"))
    parallel = run_benchmark(BenchmarkConfig.from_dict(parallel_raw))
    assert serial.config_hash == parallel.config_hash
    assert ((parallel.output_dir / results_store.METRICS_FILE).read_bytes()
            == (serial.output_dir / results_store.METRICS_FILE).read_bytes())


def test_failed_cells_are_recorded(bench_raw, toy, tmp_path):
    frame, schema = toy
    frame.drop(columns=["housing"]).to_csv(tmp_path / "numeric.csv", index=False)
    raw = schema.model_dump(mode="json", exclude_none=True)
    raw.update(name="numeric", path="numeric.csv",
               columns=[c for c in raw["columns"] if c["name"] != "housing"])
    (tmp_path / "numeric.yaml").write_text(yaml.safe_dump(raw))

    config = BenchmarkConfig.from_dict(dict(bench_raw, datasets=[str(tmp_path / "numeric.yaml")],
                                            methods=[{"tag": "smote"}, {"tag": "smote_nc"}], seeds=[0]))
    result = run_benchmark(config)
    assert result.n_records == 15
    failures = results_store.read_failures(result.output_dir)
    assert len(failures) == 1
    assert failures[0]["method"] == "smote_nc"
    assert failures[0]["stage"] == "oversample"
    assert [r.status for r in result.runs] == ["ok", "failed"]


def test_cwgan_cell_writes_quality_files(bench_raw, tiny_gan_raw):
    raw = dict(bench_raw, methods=[{"tag": "cwgan", "gan": tiny_gan_raw}], seeds=[0],
               classifiers=[{"algo": "logistic"}])
    result = run_benchmark(BenchmarkConfig.from_dict(raw))
    assert result.n_records == 3
    target = results_store.quality_dir(result.output_dir, "toy_credit", 0, "cwgan")
    assert (target / "quality.json").exists()
    assert (target / "ac_scores.csv").exists()
    assert result.runs[0].selected["epochs"] == 2


def test_config_hash_ignores_execution_fields(bench_raw):
    base = BenchmarkConfig.from_dict(bench_raw)
    moved = BenchmarkConfig.from_dict(dict(bench_raw, output_dir="elsewhere", n_jobs=4))
    reseeded = BenchmarkConfig.from_dict(dict(bench_raw, seeds=[0, 2]))
    assert base.config_hash == moved.config_hash
    assert base.config_hash != reseeded.config_hash


def test_ablation_flags_reach_gan_methods(bench_raw, tiny_gan_raw):
    raw = dict(bench_raw, methods=[{"tag": "none"}, {"tag": "cwgan", "gan": tiny_gan_raw}],
               ablation={"use_ac": False})
    methods = BenchmarkConfig.from_dict(raw).resolved_methods()
    assert methods[0].gan is None
    assert methods[1].gan.use_ac is False


@pytest.mark.parametrize("change", [
    {"methods": [{"tag": "smote"}, {"tag": "smote"}]},
    {"seeds": [1, 1]},
    {"seeds": []},
    {"test_fraction": 1.5},
    {"methods": [{"tag": "tomek"}]},
])
def test_invalid_configs(bench_raw, change):
    with pytest.raises(ConfigError):
        BenchmarkConfig.from_dict(dict(bench_raw, **change))


def test_relative_paths_resolve_against_the_config_file(tmp_path, toy_files):
    path = tmp_path / "bench.yaml"
    path.write_text(yaml.safe_dump({"datasets": [toy_files.name], "methods": [{"tag": "none"}],
                                    "output_dir": "out"}))
    config = BenchmarkConfig.from_yaml(path)
    assert config.datasets == [str(tmp_path / toy_files.name)]
    assert config.output_dir == str(tmp_path / "out")


def test_split_is_stratified_and_seeded(toy_files):
    schema = DatasetSchema.from_yaml(toy_files)
    frame = load_dataset(schema=schema)
    a = split_dataset(frame, schema, seed=4, test_fraction=0.1)
    b = split_dataset(frame, schema, seed=4, test_fraction=0.1)
    assert a.checksum == b.checksum
    assert a.test.n_rows == 40
    assert int(a.test.labels.sum()) == 8
    assert a.train.numeric.min() == 0.0 and a.train.numeric.max() == 1.0
    np.testing.assert_array_equal(a.train.values, b.train.values)


def test_ablation_overrides_are_validated(bench_raw, tiny_gan_raw):
    raw = dict(bench_raw, methods=[{"tag": "cwgan", "gan": tiny_gan_raw}],
               ablation={"loss_mode": "vanilla", "naive_categorical": True})
    gan = BenchmarkConfig.from_dict(raw).resolved_methods()[0].gan
    assert (gan.loss_mode, gan.naive_categorical, gan.epochs) == ("vanilla", True, 2)
    assert isinstance(gan.gen_layers, tuple)
