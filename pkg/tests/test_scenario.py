"""Scenario file tests: defaults, validation, overrides, round trips, hashing.

The bundled default document must parse into the reference parameter tables,
serialise back to an equal config (display units verbatim), and reject
malformed input with errors naming the dotted path of the offending key.
"""

import pytest

from qocalloc import (
    apply_overrides,
    config_hash,
    config_to_dict,
    default_config_dict,
    load_config_file,
    parse_config,
)
from qocalloc.errors import ConfigError

from conftest import CATEGORY_ROWS, DENSITY_ROWS, VIDEO_ROWS


class TestDefaults:
    def test_parses_cleanly(self):
        config = parse_config(default_config_dict())
        assert config.num_vehicles == 3

    def test_category_parameters_match_reference_rows(self):
        config = parse_config(default_config_dict())
        for category, row in zip(config.scenario.categories, CATEGORY_ROWS):
            assert (category.alpha, category.beta, category.gamma) == row

    def test_video_parameters_match_reference_rows(self):
        config = parse_config(default_config_dict())
        for video, (a, b), densities in zip(
                config.scenario.videos, VIDEO_ROWS, DENSITY_ROWS):
            assert (video.a, video.b) == (a, b)
            assert video.densities == densities

    def test_experiment_knobs(self):
        config = parse_config(default_config_dict())
        assert config.b_total_mhz == tuple(float(b) for b in range(2, 21, 2))
        assert config.b_min_fraction == 0.1
        assert config.p_min == 0.3
        assert config.distance_range_km == (0.1, 1.1)
        assert config.speed_range_kmh == (0.0, 60.0)
        assert config.tx_power_dbm == 23.0
        assert config.noise_psd_dbm_hz == -174.0
        assert config.carrier_ghz == 2.0
        assert config.duration_s == 2.0
        assert config.delay_ms == 200.0
        assert config.te_ms == 50.0
        assert config.schemes == ("qoc", "da", "qoe")
        assert config.episode().num_slots == 36

    def test_unit_accessors(self):
        config = parse_config(default_config_dict())
        assert config.carrier_hz == 2.0e9
        assert config.b_total_hz[0] == 2.0e6
        assert config.slot_s == 0.05
        assert config.delay_s == 0.2

    def test_factories_carry_the_values_through(self):
        config = parse_config(default_config_dict())
        ranges = config.link_ranges()
        assert ranges.count == 3
        assert ranges.distances_km is None  # default scenario samples them
        radio = config.radio()
        assert radio.doppler_mode == "jakes"
        assert radio.shadowing_std_db == 8.0
        constraints = config.constraints(10e6)
        assert constraints.b_min_hz == 1e6
        assert constraints.p_min == 0.3


class TestRoundTrip:
    def test_serialise_parse_is_identity(self):
        config = parse_config(default_config_dict())
        again = parse_config(config_to_dict(config))
        assert again == config

    def test_hash_is_stable_across_round_trips(self):
        config = parse_config(default_config_dict())
        again = parse_config(config_to_dict(config))
        assert config_hash(config) == config_hash(again)

    def test_hash_changes_with_any_knob(self):
        base = parse_config(default_config_dict())
        changed = parse_config(apply_overrides(
            default_config_dict(), ["runs.seed=999"]))
        assert config_hash(base) != config_hash(changed)

    def test_round_trip_preserves_pinned_links(self):
        doc = apply_overrides(default_config_dict(), [
            "channel.distances_km=[0.2, 0.5, 0.9]",
        ])
        config = parse_config(doc)
        assert config.distances_km == (0.2, 0.5, 0.9)
        again = parse_config(config_to_dict(config))
        assert again == config


class TestOverrides:
    def test_scalar_override(self):
        doc = apply_overrides(default_config_dict(), ["runs.trials=17"])
        assert parse_config(doc).trials == 17

    def test_list_override(self):
        doc = apply_overrides(default_config_dict(), ["problem.b_total_mhz=[4, 12]"])
        assert parse_config(doc).b_total_mhz == (4.0, 12.0)

    def test_scalar_budget_becomes_a_singleton_sweep(self):
        doc = apply_overrides(default_config_dict(), ["problem.b_total_mhz=10"])
        assert parse_config(doc).b_total_mhz == (10.0,)

    def test_list_index_override(self):
        doc = apply_overrides(default_config_dict(), ["videos.0.a_qp=44.5"])
        assert parse_config(doc).scenario.videos[0].a == 44.5

    def test_multiple_overrides_apply_in_order(self):
        doc = apply_overrides(default_config_dict(),
                              ["runs.trials=3", "runs.trials=8"])
        assert parse_config(doc).trials == 8

    def test_original_document_is_untouched(self):
        doc = default_config_dict()
        apply_overrides(doc, ["runs.trials=99"])
        assert doc["runs"]["trials"] != 99

    def test_missing_equals_sign_rejected(self):
        with pytest.raises(ConfigError, match="KEY=VALUE"):
            apply_overrides(default_config_dict(), ["runs.trials"])

    def test_unknown_section_in_path_rejected(self):
        with pytest.raises(ConfigError, match="no section"):
            apply_overrides(default_config_dict(), ["rums.trials=5"])

    def test_out_of_range_index_rejected(self):
        with pytest.raises(ConfigError, match="out of range"):
            apply_overrides(default_config_dict(), ["videos.7.a_qp=40"])

    def test_typo_in_final_key_is_caught_by_parse(self):
        doc = apply_overrides(default_config_dict(), ["runs.trails=5"])
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config(doc)


class TestValidation:
    def broken(self, *assignments):
        return apply_overrides(default_config_dict(), list(assignments))

    def test_unknown_section_rejected(self):
        doc = default_config_dict()
        doc["extras"] = {}
        with pytest.raises(ConfigError, match="unknown section"):
            parse_config(doc)

    def test_missing_section_rejected(self):
        doc = default_config_dict()
        del doc["timing"]
        with pytest.raises(ConfigError, match="missing section"):
            parse_config(doc)

    def test_error_messages_carry_dotted_paths(self):
        cases = [
            (["problem.p_min=1.5"], "problem.p_min"),
            (["problem.b_min_fraction=0.5"], "problem.b_min_fraction"),
            (["channel.doppler_mode=clarke"], "channel.doppler_mode"),
            (["timing.te_ms=0"], "timing.te_ms"),
            (["runs.trials=0"], "runs.trials"),
            (["runs.jobs=0"], "runs.jobs"),
            (["channel.carrier_ghz=-2"], "channel.carrier_ghz"),
        ]
        for assignments, expected_path in cases:
            with pytest.raises(ConfigError, match=expected_path.replace(".", r"\.")):
                parse_config(self.broken(*assignments))

    def test_p_min_above_a_ceiling_names_the_category(self):
        with pytest.raises(ConfigError, match="ceiling"):
            parse_config(self.broken("problem.p_min=0.71"))

    def test_duplicate_scheme_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config(self.broken('runs.schemes=["qoc", "qoc"]'))

    def test_unknown_scheme_rejected(self):
        with pytest.raises(ConfigError, match="runs.schemes"):
            parse_config(self.broken('runs.schemes=["qoc", "psnr"]'))

    def test_strict_flag_must_be_boolean(self):
        with pytest.raises(ConfigError, match="strict_min_accuracy"):
            parse_config(self.broken("problem.strict_min_accuracy=maybe"))

    def test_wrong_density_length_rejected(self):
        with pytest.raises(ConfigError, match="objects_per_frame"):
            parse_config(self.broken("videos.1.objects_per_frame=[1.0, 2.0]"))

    def test_pinned_distance_length_rejected(self):
        with pytest.raises(ConfigError, match="distances_km"):
            parse_config(self.broken("channel.distances_km=[0.2, 0.5]"))

    def test_window_shorter_than_slot_rejected(self):
        with pytest.raises(ConfigError, match="te_ms"):
            parse_config(self.broken("timing.te_ms=5000"))

    def test_non_mapping_document_rejected(self):
        with pytest.raises(ConfigError):
            parse_config(["not", "a", "mapping"])


class TestLoadConfigFile:
    def test_loads_yaml(self, tmp_path):
        target = tmp_path / "scenario.yaml"
        target.write_text("runs:\n  trials: 5\n", encoding="utf-8")
        assert load_config_file(target) == {"runs": {"trials": 5}}

    def test_yaml_errors_carry_position(self, tmp_path):
        target = tmp_path / "broken.yaml"
        target.write_text("runs: [unclosed\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="broken.yaml"):
            load_config_file(target)

    def test_non_mapping_file_rejected(self, tmp_path):
        target = tmp_path / "list.yaml"
        target.write_text("- 1\n- 2\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="mapping"):
            load_config_file(target)
