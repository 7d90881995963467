"""Config validation, defaults, and hashing."""

import math

import pytest

from afdetect.config import validate_config
from afdetect.errors import ConfigError


def _minimal(**extra):
    raw = {"dataset": {"synth": {"n_subjects": 2, "segments_per_subject": 2}}}
    raw.update(extra)
    return raw


def test_defaults_applied():
    cfg = validate_config(_minimal())
    assert cfg.seed == 0
    assert cfg.output_dir == "out"
    assert cfg.test_fraction == 0.2
    assert cfg.cv_folds == 10
    assert cfg.preprocess.denoise and cfg.features.hrv
    assert [name for name, _ in cfg.models] == ["bagged_trees", "cubic_svm",
                                                "subspace_knn"]
    assert cfg.models[0][1]["n_trees"] == 30
    assert cfg.synth.noise_snr_db == math.inf
    assert cfg.synth.seed == 0  # inherits the master seed


def test_synth_seed_override_independent_of_master():
    cfg = validate_config(_minimal(seed=9))
    assert cfg.synth.seed == 9
    raw = _minimal(seed=9)
    raw["dataset"]["synth"]["seed"] = 4
    assert validate_config(raw).synth.seed == 4


@pytest.mark.parametrize("mutate", [
    lambda r: r.update(bogus=1),
    lambda r: r["dataset"].update(bogus=1),
    lambda r: r["dataset"]["synth"].update(bogus=1),
    lambda r: r.update(preprocess={"bogus": True}),
    lambda r: r.update(models={"bogus_model": {}}),
    lambda r: r.update(models={"bagged_trees": {"bogus": 2}}),
    lambda r: r.update(split={"bogus": 1}),
])
def test_unknown_keys_rejected(mutate):
    raw = _minimal()
    mutate(raw)
    with pytest.raises(ConfigError):
        validate_config(raw)


def test_dataset_source_exactly_one():
    with pytest.raises(ConfigError):
        validate_config({"dataset": {}})
    with pytest.raises(ConfigError):
        validate_config({"dataset": {
            "manifest": "m.csv",
            "synth": {"n_subjects": 1, "segments_per_subject": 1}}})


def test_range_checks():
    with pytest.raises(ConfigError):
        validate_config(_minimal(split={"cv_folds": 1}))
    with pytest.raises(ConfigError):
        validate_config(_minimal(split={"test_fraction": 1.0}))
    with pytest.raises(ConfigError):
        validate_config(_minimal(seed=-1))
    raw = _minimal()
    raw["dataset"]["synth"]["label_ratio_af"] = 1.5
    with pytest.raises(ConfigError):
        validate_config(raw)


def test_string_floats_coerced():
    cfg = validate_config(_minimal(models={"cubic_svm": {"tol": "1e-4"}}))
    assert cfg.models[0][1]["tol"] == 1e-4


def test_hash_sensitivity():
    base = validate_config(_minimal())
    assert base.config_hash == validate_config(_minimal()).config_hash
    assert base.config_hash != validate_config(_minimal(seed=1)).config_hash
    raw = _minimal()
    raw["dataset"]["synth"]["noise_snr_db"] = 15.0
    assert base.config_hash != validate_config(raw).config_hash


def test_hash_ignores_output_dir():
    a = validate_config(_minimal(output_dir="a"))
    b = validate_config(_minimal(output_dir="b"))
    assert a.config_hash == b.config_hash


def test_overrides_feed_hash_and_fields():
    cfg = validate_config(_minimal(), seed_override=77, output_override="custom")
    assert cfg.seed == 77 and cfg.synth.seed == 77
    assert cfg.output_dir == "custom"
    assert cfg.config_hash == validate_config(_minimal(seed=77)).config_hash
