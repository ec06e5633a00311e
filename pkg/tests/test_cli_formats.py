import json

import pytest

from app.cli.formats import (
    ConfigFile,
    decimal_text,
    load_config,
    parse_config,
    parse_decimal,
    parse_run,
    read_run,
    serialize_run,
    write_run,
    write_table,
)
from app.core.errors import ConfigurationError, DataError
from app.pipeline.campaign import CampaignConfig, ParallelizationSettings
from app.pipeline.stages import simulate_casimir_run
from app.simulator.config import NoiseConfig


def _run():
    config = CampaignConfig()
    return simulate_casimir_run(config, 5, config.apparatus.offset_voltage)


def test_run_file_restores_every_value(tmp_path) -> None:
    run = _run()

    path = write_run(run, tmp_path / "runs" / "casimir.csv")
    restored = read_run(path)

    assert restored.same_as(run)
    assert restored.config_hash == run.config_hash
    assert serialize_run(restored) == path.read_text(encoding="utf-8")


def test_run_file_uses_plain_decimals_with_units_in_the_header() -> None:
    text = serialize_run(_run())

    header = next(line for line in text.splitlines() if not line.startswith("#"))
    assert header == "v_pzt_volt,v_c_mv,t_s,delta_nu2_hz2,sigma_delta_nu2_hz2,d_s_m"
    assert "e-" not in text.lower().split(header)[1]
    assert "# role=casimir" in text


def test_decimal_text_is_exact() -> None:
    assert decimal_text(-0.0644, 3) == "-64.4"
    assert decimal_text(2.34e-28) == "0.000000000000000000000000000234"
    assert parse_decimal("-64.4", 3) == -0.0644


def test_bad_header_is_a_data_error() -> None:
    with pytest.raises(DataError, match="header"):
        parse_run("a,b\n1,2\n", source="broken.csv")


def test_ragged_row_is_a_data_error() -> None:
    text = serialize_run(_run())
    lines = text.splitlines()
    lines[-1] = lines[-1].rsplit(",", 1)[0]

    with pytest.raises(DataError, match="columns"):
        parse_run("\n".join(lines))


def test_non_numeric_cell_is_a_data_error() -> None:
    text = "v_pzt_volt,v_c_mv,t_s,delta_nu2_hz2,sigma_delta_nu2_hz2,d_s_m\n1,abc,0,0,1,0\n"

    with pytest.raises(DataError, match="abc"):
        parse_run(text)


def test_table_keeps_metadata_and_text_cells(tmp_path) -> None:
    path = write_table(
        tmp_path / "table.csv", ("key", "value"), [("c_el", 4.24e-13)], {"seed": "3"}
    )

    assert path.read_text(encoding="utf-8").splitlines() == [
        "# seed=3",
        "key,value",
        "c_el,0.000000000000424",
    ]


def test_default_config_round_trips_through_json() -> None:
    config = ConfigFile()

    assert parse_config(config.to_json()) == config
    assert parse_config("") == config


def test_default_config_matches_the_campaign_defaults() -> None:
    campaign = ConfigFile().to_campaign()
    defaults = CampaignConfig()

    assert campaign.biases == pytest.approx(defaults.biases, rel=1e-12)
    assert campaign.calibration_gaps == pytest.approx(defaults.calibration_gaps, rel=1e-12)
    assert campaign.apparatus.plate_area == pytest.approx(defaults.apparatus.plate_area, rel=1e-12)
    assert campaign.apparatus.offset_voltage == pytest.approx(defaults.apparatus.offset_voltage, rel=1e-12)
    assert campaign.apparatus.distance_correction == pytest.approx(
        defaults.apparatus.distance_correction, rel=1e-12
    )
    assert campaign.scan_near == pytest.approx(defaults.scan_near, rel=1e-12)
    assert campaign.cancel_bias == pytest.approx(defaults.cancel_bias, rel=1e-12)


def test_partial_config_keeps_the_other_defaults() -> None:
    config = parse_config(json.dumps({"seed": 7, "noise": {"inject_noise": False}}))

    campaign = config.to_campaign()
    assert campaign.seed == 7
    assert not campaign.noise.inject_noise
    assert campaign.propagation == "effective_variance"
    assert campaign.casimir_points is None


def test_unknown_key_names_its_location() -> None:
    with pytest.raises(ConfigurationError, match="apparatus.nu0_mhz"):
        parse_config(json.dumps({"apparatus": {"nu0_mhz": 1}}))


def test_invalid_json_reports_the_line() -> None:
    with pytest.raises(ConfigurationError, match="line 2"):
        parse_config('{\n  "seed": ,\n}')


def test_two_near_cancellation_biases_are_rejected() -> None:
    config = parse_config(json.dumps({"bias_mv": [-205.8, -137.2, -68.6, -60.0]}))

    with pytest.raises(ConfigurationError):
        config.to_campaign()


def test_missing_config_file_is_a_configuration_error(tmp_path) -> None:
    with pytest.raises(ConfigurationError, match="cannot read config"):
        load_config(tmp_path / "missing.json")


def test_every_noise_and_parallelization_setting_reaches_the_campaign() -> None:
    config = parse_config(
        json.dumps(
            {
                "noise": {
                    "rms_averages": 4,
                    "resolution_bandwidth_hz": 0.0625,
                    "spectrum_noise_floor": 2.5e-7,
                    "spectrum_peak_power": 2e-6,
                    "reading_interval_s": 0.5,
                },
                "parallelization": {"initial_step_rad": 1e-4, "min_step_rad": 1e-7, "max_moves": 50},
                "output": {"write_plots": False, "max_concurrency": 2},
            }
        )
    )

    campaign = config.to_campaign()

    assert campaign.noise == NoiseConfig(
        rms_averages=4,
        resolution_bandwidth=0.0625,
        spectrum_noise_floor=2.5e-7,
        spectrum_peak_power=2e-6,
        reading_interval=0.5,
    )
    assert campaign.parallelization == ParallelizationSettings(
        initial_step=1e-4, min_step=1e-7, max_moves=50
    )
    assert parse_config(config.to_json()) == config
    assert not config.output.write_plots
    assert config.output.max_concurrency == 2


def test_output_settings_do_not_change_the_campaign_hash() -> None:
    plain = parse_config("{}").to_campaign()
    quiet_output = parse_config(json.dumps({"output": {"write_plots": False}})).to_campaign()

    assert plain.config_hash() == quiet_output.config_hash()


def test_default_config_mirrors_every_noise_and_parallelization_default() -> None:
    campaign = ConfigFile().to_campaign()

    assert campaign.noise == NoiseConfig()
    assert campaign.parallelization == ParallelizationSettings()
