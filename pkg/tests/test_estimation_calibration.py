import dataclasses

import numpy as np
import pytest

from app.core.errors import ConvergenceError, DataError, IdentifiabilityError
from app.estimation.calibration import fit_calibration_global, require_converged, stack_runs
from app.estimation.lm import FitData
from app.estimation.results import FitResult
from app.physics.published import published
from app.pipeline.campaign import CampaignConfig
from app.pipeline.stages import simulate_calibration_runs
from app.simulator.config import NoiseConfig


def _runs(config: CampaignConfig, seed: int = 0):
    return simulate_calibration_runs(config, config.with_seed(seed).stage_seeds())


def test_noiseless_runs_recover_the_truth() -> None:
    config = CampaignConfig(noise=NoiseConfig.quiet(), casimir_on=False)
    cfg = config.apparatus

    cal = fit_calibration_global(_runs(config), cfg, v0_guess=-0.07)

    assert cal.delta_nu2_offset == pytest.approx(cfg.frequency_offset, rel=1e-6)
    assert cal.d0 == pytest.approx(cfg.distance_correction, rel=1e-6)
    assert cal.c_el == pytest.approx(cfg.electrostatic_coefficient, rel=1e-6)
    assert cal.v0 == pytest.approx(cfg.offset_voltage, abs=1e-8)
    assert cal.chi2_probability == pytest.approx(1.0, abs=1e-6)


def test_per_run_offsets_are_reported_and_averaged() -> None:
    config = CampaignConfig(noise=NoiseConfig.quiet(), casimir_on=False)
    cfg = config.apparatus

    cal = fit_calibration_global(_runs(config), cfg, v0_guess=-0.07, shared_offset=False)

    assert len(cal.run_offsets) == 3
    assert cal.run_offsets == pytest.approx([cfg.frequency_offset] * 3, rel=1e-6)
    assert cal.delta_nu2_offset == pytest.approx(cfg.frequency_offset, rel=1e-6)
    assert cal.cov.shape == (4, 4)


def test_noisy_calibration_lies_within_its_uncertainty() -> None:
    config = CampaignConfig(casimir_on=False)
    cfg = config.apparatus

    cal = fit_calibration_global(_runs(config, seed=3), cfg, v0_guess=-0.07)

    truth = {
        "delta_nu2_offset": cfg.frequency_offset,
        "d0": cfg.distance_correction,
        "c_el": cfg.electrostatic_coefficient,
        "v0": cfg.offset_voltage,
    }
    for name, value in truth.items():
        assert abs(getattr(cal, name) - value) < 4.0 * cal.sigma(name)


def test_calibration_pulls_have_unit_spread() -> None:
    config = CampaignConfig(casimir_on=False)
    cfg = config.apparatus
    truth = {
        "delta_nu2_offset": cfg.frequency_offset,
        "d0": cfg.distance_correction,
        "c_el": cfg.electrostatic_coefficient,
        "v0": cfg.offset_voltage,
    }
    pulls = {name: [] for name in truth}
    for seed in range(1000):
        cal = fit_calibration_global(_runs(config, seed), cfg, v0_guess=-0.07)
        for name, value in truth.items():
            pulls[name].append((getattr(cal, name) - value) / cal.sigma(name))

    for name, values in pulls.items():
        assert 0.8 < float(np.std(values)) < 1.2, name
        assert abs(float(np.mean(values))) < 0.1, name


def test_calibration_uncertainties_match_the_published_budget() -> None:
    config = CampaignConfig()
    cfg = config.apparatus
    sigmas = {"delta_nu2_offset": [], "d0": [], "c_el": [], "v0": []}
    d0_within = 0
    for seed in range(100):
        cal = fit_calibration_global(_runs(config, seed), cfg, v0_guess=-0.07)
        for name in sigmas:
            sigmas[name].append(cal.sigma(name))
        d0_within += abs(cal.d0 - cfg.distance_correction) < published("distance_correction").sigma

    assert float(np.mean(sigmas["d0"])) == pytest.approx(published("distance_correction").sigma, rel=0.25)
    assert float(np.mean(sigmas["c_el"])) == pytest.approx(
        published("electrostatic_coefficient").sigma, rel=0.25
    )
    assert float(np.mean(sigmas["delta_nu2_offset"])) <= published("frequency_offset").sigma
    assert float(np.mean(sigmas["v0"])) <= published("dynamic_offset_voltage").sigma
    assert d0_within >= 60


def test_a_single_bias_cannot_identify_the_calibration() -> None:
    config = CampaignConfig(noise=NoiseConfig.quiet(), casimir_on=False)

    with pytest.raises(IdentifiabilityError):
        fit_calibration_global(_runs(config)[:1], config.apparatus)


def test_short_runs_are_rejected() -> None:
    config = CampaignConfig(noise=NoiseConfig.quiet(), casimir_on=False)
    runs = _runs(config)
    short = dataclasses.replace(
        runs[0],
        v_pzt=runs[0].v_pzt[:3],
        v_c=runs[0].v_c[:3],
        timestamp=runs[0].timestamp[:3],
        delta_nu2=runs[0].delta_nu2[:3],
        sigma_delta_nu2=runs[0].sigma_delta_nu2[:3],
        d_s=runs[0].d_s[:3],
    )

    with pytest.raises(DataError):
        fit_calibration_global([short, *runs[1:]], config.apparatus)


def test_unconverged_fit_carries_diagnostics() -> None:
    fit = FitResult(
        parameters=(6.1, -3.2e-7, 4.3e-13, -0.06),
        covariance=tuple(tuple(1.0 if i == j else 0.0 for j in range(4)) for i in range(4)),
        names=("delta_nu2_offset", "d0", "c_el", "v0"),
        chi2=812.0,
        dof=44,
        chi2_probability=0.0,
        converged=False,
        iterations=200,
    )

    with pytest.raises(ConvergenceError) as excinfo:
        require_converged(fit, "electrostatic calibration")

    diagnostics = excinfo.value.diagnostics
    assert diagnostics["iterations"] == 200
    assert diagnostics["parameters"]["c_el"] == 4.3e-13
    assert excinfo.value.exit_code == 5


def test_stacked_data_keeps_every_point() -> None:
    config = CampaignConfig(noise=NoiseConfig.quiet())
    runs = _runs(config)

    data = stack_runs(runs, config.apparatus)

    assert isinstance(data, FitData)
    assert data.n_points == sum(run.n_points for run in runs)
    assert set(np.unique(data.x[:, 2])) == {0.0, 1.0, 2.0}
