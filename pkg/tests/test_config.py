"""Config round-trips, validation, and hashing."""

from __future__ import annotations

import dataclasses

import pytest

from lesionattn.config import (
    ConafConfig,
    GenConfig,
    NlpConfig,
    RamafConfig,
    RunConfig,
    config_from_dict,
    config_hash,
    config_to_dict,
    load_config,
    save_config,
)
from lesionattn.errors import ConfigError


def test_default_config_validates():
    RunConfig().validate()


def test_yaml_round_trip(tmp_path):
    cfg = RunConfig(seed=17)
    cfg.gen.counts = {"Normal": 10, "Lesion": 12, "Others": 4}
    cfg.conaf.lambda2 = 0.0
    path = tmp_path / "cfg.yaml"
    save_config(cfg, path)
    loaded = load_config(path)
    assert loaded == cfg


def test_round_trip_preserves_hash(tmp_path):
    cfg = RunConfig(seed=3)
    path = tmp_path / "cfg.yaml"
    save_config(cfg, path)
    assert config_hash(load_config(path)) == config_hash(cfg)


def test_unknown_top_level_key_rejected():
    with pytest.raises(ConfigError, match="unknown top-level"):
        config_from_dict({"sneed": 1})


def test_unknown_section_key_rejected():
    with pytest.raises(ConfigError, match="unknown keys"):
        config_from_dict({"gen": {"image_sixe": [64, 64]}})


def test_type_mismatch_rejected():
    with pytest.raises(ConfigError, match="expected an integer"):
        config_from_dict({"conaf": {"max_steps": "many"}})


def test_seed_must_be_int():
    with pytest.raises(ConfigError, match="seed"):
        config_from_dict({"seed": True})


def test_optional_field_accepts_null():
    cfg = config_from_dict({"gen": {"mm_per_pixel": None}})
    assert cfg.gen.mm_per_pixel is None
    cfg = config_from_dict({"gen": {"mm_per_pixel": 0.5}})
    assert cfg.gen.mm_per_pixel == 0.5


@pytest.mark.parametrize(
    "section,field,value,message",
    [
        ("gen", "annotated_fraction", 1.5, "annotated_fraction"),
        ("gen", "lesion_radius_range", (1, 5), "lesion_radius_range"),
        ("gen", "lesion_radius_range", (9, 5), "lesion_radius_range"),
        ("gen", "lesion_contrast_range", (0.1, 0.9), "lesion_contrast_range"),
        ("gen", "clutter_amplitude", 0.5, "clutter_amplitude"),
        ("nlp", "noise_rate", 0.6, "noise_rate"),
        ("nlp", "fuzzy_threshold", 0.0, "fuzzy_threshold"),
        ("conaf", "alpha", 1.0, "alpha"),
        ("conaf", "batch_size", 7, "batch_size"),
        ("conaf", "channels", (8, 16, 32), "channels"),
        ("conaf", "optimizer", "rmsprop", "optimizer"),
        ("ramaf", "patch_size", 7, "patch_size"),
        ("ramaf", "sigma_sq", 0.0, "sigma_sq"),
        ("ramaf", "annotated_min", 30, "annotated_min"),
        ("eval", "overlap_threshold", 0.0, "overlap_threshold"),
        ("eval", "detection_thresholds", (0.2, 1.0), "detection thresholds"),
    ],
)
def test_section_validation(section, field, value, message):
    cfg = RunConfig()
    setattr(cfg, section, dataclasses.replace(getattr(cfg, section), **{field: value}))
    with pytest.raises(ConfigError, match=message):
        cfg.validate()


def test_image_size_must_fit_four_pools():
    cfg = RunConfig(gen=GenConfig(image_size=(72, 72), lesion_radius_range=(3, 6)))
    with pytest.raises(ConfigError, match="divisible by 16"):
        cfg.validate()


def test_coarse_glimpse_must_fit():
    cfg = RunConfig(
        gen=GenConfig(image_size=(64, 64), lesion_radius_range=(3, 6)),
        ramaf=RamafConfig(patch_size=40),
    )
    with pytest.raises(ConfigError, match="coarse glimpse"):
        cfg.validate()


def test_gen_seed_falls_back_to_run_seed():
    assert RunConfig(seed=5).gen_seed == 5
    assert RunConfig(seed=5, gen=GenConfig(seed=9)).gen_seed == 9


def test_hash_changes_with_content():
    a = RunConfig()
    b = RunConfig(conaf=ConafConfig(lambda2=0.0))
    assert config_hash(a) != config_hash(b)


def test_to_dict_is_plain_data():
    d = config_to_dict(RunConfig())
    assert isinstance(d["gen"]["image_size"], list)
    assert isinstance(d["nlp"], dict)


def test_missing_config_file():
    with pytest.raises(ConfigError, match="not found"):
        load_config("/nonexistent/cfg.yaml")


def test_nlp_noise_bounds_accept_reference_rate():
    NlpConfig(noise_rate=0.04).validate()
    NlpConfig(noise_rate=0.5).validate()
