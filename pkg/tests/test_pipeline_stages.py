import numpy as np
import pytest
from scipy import stats

from app.core.errors import ConfigurationError, ContactError
from app.physics.models import kc_from_coefficients
from app.pipeline.campaign import CampaignConfig, ParallelizationSettings
from app.pipeline.stages import (
    simulate_calibration_runs,
    simulate_casimir_run,
    stage_calibrate,
    stage_extract_casimir,
    stage_offset_voltage,
    stage_parallelize,
    stage_resonance,
)
from app.simulator.config import NoiseConfig


def test_parallelization_reaches_the_flat_maximum_within_one_quantum() -> None:
    config = CampaignConfig()

    outcome = stage_parallelize(config)

    assert not outcome.aborted
    assert outcome.residual_tilt <= 3e-5
    assert abs(outcome.capacitance - outcome.flat_capacitance) <= config.apparatus.bridge_resolution
    assert outcome.trace[0][:2] == config.parallelization.start_tilt
    assert outcome.moves == len(outcome.trace) - 1


def test_unquantized_parallelization_converges_to_zero_tilt() -> None:
    config = CampaignConfig(parallelization=ParallelizationSettings(quantized=False))

    outcome = stage_parallelize(config)

    assert outcome.residual_tilt < 1e-7
    assert outcome.capacitance == pytest.approx(outcome.flat_capacitance, rel=1e-6)


def test_parallelization_stops_at_the_last_safe_tilt_on_contact(monkeypatch) -> None:
    def _touching(cfg, tilt_x, tilt_y, min_gap):
        if 0.0 < tilt_x < 5.5e-4:
            raise ContactError("corner touched")
        return 30e-12 - 1e-9 * (abs(tilt_x) + abs(tilt_y))

    monkeypatch.setattr("app.pipeline.stages.contact_limited_capacitance", _touching)

    outcome = stage_parallelize(CampaignConfig(parallelization=ParallelizationSettings(quantized=False)))

    assert outcome.aborted
    assert (outcome.tilt_x, outcome.tilt_y) == (6e-4, -4e-4)
    assert outcome.moves == 0


def test_parallelization_start_must_be_within_range() -> None:
    with pytest.raises(ConfigurationError):
        ParallelizationSettings(start_tilt=(2e-3, 0.0))


def test_noiseless_offset_stage_recovers_v0_and_mass() -> None:
    config = CampaignConfig(noise=NoiseConfig.quiet())
    cfg = config.apparatus

    outcome = stage_offset_voltage(config, seed=0)

    assert outcome.v0 == pytest.approx(cfg.offset_voltage, abs=1e-9)
    assert outcome.effective_mass == pytest.approx(cfg.effective_mass, rel=1e-8)
    assert len(outcome.v0_per_distance) == len(config.deflection_gaps)
    assert outcome.effective_mass_ratio == pytest.approx(0.305, abs=0.005)


def test_noisy_offset_stage_meets_the_published_precision() -> None:
    config = CampaignConfig()
    cfg = config.apparatus
    v0_within, mass_within = 0, 0
    for seed in range(50):
        outcome = stage_offset_voltage(config, seed=seed)
        assert outcome.sigma_v0 > 0
        v0_within += abs(outcome.v0 - cfg.offset_voltage) <= 2.2e-3
        mass_within += abs(outcome.effective_mass_ratio - cfg.effective_mass / cfg.physical_mass) <= 0.05

    assert v0_within / 50 >= 0.68
    assert mass_within >= 48


def test_calibration_stage_needs_three_runs() -> None:
    config = CampaignConfig(noise=NoiseConfig.quiet())
    runs = simulate_calibration_runs(config, config.stage_seeds())

    with pytest.raises(ConfigurationError):
        stage_calibrate(config, -0.064, runs[:2])


def test_noiseless_extraction_recovers_the_casimir_coefficient() -> None:
    config = CampaignConfig(noise=NoiseConfig.quiet())
    cfg = config.apparatus
    seeds = config.stage_seeds()
    runs = simulate_calibration_runs(config, seeds)
    cal = stage_calibrate(config, -0.07, runs)
    casimir_run = simulate_casimir_run(config, seeds["casimir"], cfg.offset_voltage)

    outcome = stage_extract_casimir(config, cal, casimir_run, runs)

    params = outcome.casimir.params
    # the calibration model has no Casimir term, so its noiseless fit is slightly biased
    assert abs(params.c_cas - cfg.casimir_coefficient) < 0.5 * params.sigma_c_cas
    assert params.kc == pytest.approx(kc_from_coefficients(params.c_cas, cal.c_el), rel=1e-12)
    assert abs(outcome.exponent.exponent - 5.0) < 0.5 * outcome.exponent.sigma_exponent
    assert abs(outcome.wedge.deviation_squared) < 3.0 * outcome.wedge.sigma_deviation_squared
    assert outcome.drift.drift_rate == pytest.approx(0.0, abs=1e-6)
    assert outcome.drift_casimir.c_cas == pytest.approx(cfg.casimir_coefficient, rel=1e-6)
    assert outcome.cancel_bias == cfg.offset_voltage


def test_resonance_stage_finds_the_free_frequency() -> None:
    config = CampaignConfig()

    outcome = stage_resonance(config, seed=config.stage_seeds()["spectrum"])

    assert outcome.params.center == pytest.approx(config.apparatus.free_frequency, abs=0.05)
    assert outcome.params.sigma_center >= 7e-3


def test_stages_read_only_their_own_inputs() -> None:
    base = CampaignConfig()
    changed = CampaignConfig(calibration_gaps=(5e-6, 6e-6, 7e-6, 8e-6), casimir_points=12)

    assert stage_parallelize(base) == stage_parallelize(changed)
    assert stage_resonance(base, 9) == stage_resonance(changed, 9)


def test_calibration_chi2_probability_is_uniform_over_seeds() -> None:
    probabilities = []
    for seed in range(300):
        config = CampaignConfig().with_seed(seed)
        cal = stage_calibrate(config, -0.07, simulate_calibration_runs(config, config.stage_seeds()))
        probabilities.append(cal.chi2_probability)

    assert stats.kstest(probabilities, "uniform").pvalue > 0.01


def test_noisy_extraction_cross_checks_agree_with_the_truth() -> None:
    relative_kc = []
    for seed in range(20):
        config = CampaignConfig().with_seed(seed)
        cfg = config.apparatus
        seeds = config.stage_seeds()
        runs = simulate_calibration_runs(config, seeds)
        cal = stage_calibrate(config, -0.07, runs)
        casimir_run = simulate_casimir_run(config, seeds["casimir"], cfg.offset_voltage)

        outcome = stage_extract_casimir(config, cal, casimir_run, runs)

        exponent = outcome.exponent
        assert abs(exponent.exponent - 5.0) < 4.0 * exponent.sigma_exponent
        wedge = outcome.wedge
        assert abs(wedge.deviation_squared) < 4.0 * wedge.sigma_deviation_squared
        drift = outcome.drift
        assert abs(drift.drift_rate) < 4.0 * drift.sigma_drift_rate
        drift_casimir = outcome.drift_casimir
        assert abs(drift_casimir.c_cas - cfg.casimir_coefficient) < 4.0 * drift_casimir.sigma_c_cas
        relative_kc.append(outcome.casimir.params.sigma_kc / outcome.casimir.params.kc)

    assert 0.05 < float(np.median(relative_kc)) < 0.3
