"""Config defaults, precedence, validation, and round-trip."""

import pytest

from locedit.config import EditConfig, parse_config, serialize_config


def test_defaults_match_published_values():
    cfg = parse_config(env={})
    assert cfg.total_steps == 100
    assert (cfg.feature_lo, cfg.feature_hi) == (30, 50)
    assert (cfg.attn_lo, cfg.attn_hi) == (1, 75)
    assert (cfg.reg_lo, cfg.reg_hi) == (1, 75)
    assert cfg.k_clusters == 8
    assert cfg.n_points == 100
    assert (cfg.s_img_loc, cfg.s_txt_loc) == (1.5, 7.5)
    assert (cfg.s_img_edit, cfg.s_txt_edit) == (1.5, 3.5)
    assert cfg.clustering == "kmeans"
    assert cfg.agglo_threshold == 0.5
    assert cfg.edit_mode == "attention_reg"


def test_empty_file_keeps_defaults(tmp_path):
    path = tmp_path / "empty.cfg"
    path.write_text("# nothing but a comment\n\n")
    assert parse_config(path, env={}) == parse_config(env={})


def test_file_overrides_defaults(tmp_path):
    path = tmp_path / "k16.cfg"
    path.write_text("k_clusters = 16\n")
    assert parse_config(path, env={}).k_clusters == 16


def test_cli_overrides_beat_file(tmp_path):
    path = tmp_path / "k16.cfg"
    path.write_text("k_clusters = 16\nseed = 5\n")
    cfg = parse_config(path, overrides={"k_clusters": 32}, env={})
    assert cfg.k_clusters == 32
    assert cfg.seed == 5


def test_env_seed_lowest_above_default(tmp_path):
    assert parse_config(env={"LIME_SEED": "77"}).seed == 77
    path = tmp_path / "s.cfg"
    path.write_text("seed = 5\n")
    assert parse_config(path, env={"LIME_SEED": "77"}).seed == 5  # file wins
    cfg = parse_config(path, overrides={"seed": 9}, env={"LIME_SEED": "77"})
    assert cfg.seed == 9  # flags win


def test_round_trip_identity(tmp_path):
    cfg = parse_config(overrides={"k_clusters": 12, "edit_mode": "noise_blend"}, env={})
    path = tmp_path / "rt.cfg"
    path.write_text(serialize_config(cfg))
    assert parse_config(path, env={}) == cfg


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("clusters = 9\n")
    with pytest.raises(ValueError, match="unknown config key 'clusters'"):
        parse_config(path, env={})


def test_out_of_range_errors_name_the_key():
    with pytest.raises(ValueError, match="total_steps"):
        parse_config(overrides={"total_steps": 0}, env={})
    with pytest.raises(ValueError, match="n_points"):
        parse_config(overrides={"n_points": 5000}, env={})
    with pytest.raises(ValueError, match="feature"):
        parse_config(overrides={"feature_hi": 200}, env={})
    with pytest.raises(ValueError, match="agglo_threshold"):
        parse_config(overrides={"agglo_threshold": 1.5}, env={})
    with pytest.raises(ValueError, match="edit_mode"):
        parse_config(overrides={"edit_mode": "bogus"}, env={})


def test_bad_value_type_names_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("total_steps = soon\n")
    with pytest.raises(ValueError, match="total_steps"):
        parse_config(path, env={})


def test_windows_must_fit_total_steps():
    with pytest.raises(ValueError):
        EditConfig(total_steps=20).validate()  # default windows exceed 20


def test_scaled_to_rescales_windows():
    cfg = EditConfig().scaled_to(20)
    assert cfg.total_steps == 20
    assert (cfg.feature_lo, cfg.feature_hi) == (6, 10)
    assert (cfg.attn_lo, cfg.attn_hi) == (1, 15)
    assert (cfg.reg_lo, cfg.reg_hi) == (1, 15)
    cfg10 = EditConfig().scaled_to(10)
    assert (cfg10.feature_lo, cfg10.feature_hi) == (3, 5)
    assert (cfg10.attn_lo, cfg10.attn_hi) == (1, 8)
