import numpy as np
import pytest

from app.core.errors import ConfigurationError, DomainError
from app.physics.apparatus import ApparatusConfig
from app.physics.models import deflection_coefficient
from app.simulator.capacitance import map_capacitance, quantize
from app.simulator.config import NoiseConfig
from app.simulator.deflection import run_deflection_sweep
from app.simulator.spectrum import analyzer_bins, synthesize_spectrum


def test_analyzer_bins_are_resolution_multiples_around_the_line() -> None:
    noise = NoiseConfig()

    bins = analyzer_bins(138.275, noise)

    assert bins.size == noise.spectrum_bins
    assert bins[0] < 138.275 < bins[-1]
    assert np.allclose(np.diff(bins), noise.resolution_bandwidth)


def test_quiet_spectrum_peaks_at_the_nearest_bin() -> None:
    noise = NoiseConfig.quiet()

    spectrum = synthesize_spectrum(138.275, 0.138, noise)

    nearest = spectrum.frequencies[np.argmin(np.abs(spectrum.frequencies - 138.275))]
    assert spectrum.peak_frequency == nearest
    assert np.all(spectrum.power > 0)


def test_noisy_spectrum_is_reproducible_and_non_negative() -> None:
    noise = NoiseConfig(rng_seed=11)

    first = synthesize_spectrum(138.275, 0.138, noise)
    second = synthesize_spectrum(138.275, 0.138, noise)

    assert np.array_equal(first.power, second.power)
    assert np.all(first.power >= 0)


def test_bins_missing_the_line_are_rejected() -> None:
    with pytest.raises(ConfigurationError):
        synthesize_spectrum(138.275, 0.138, NoiseConfig(), frequencies=np.linspace(100.0, 110.0, 64))


def test_spectrum_needs_a_positive_linewidth() -> None:
    with pytest.raises(DomainError):
        synthesize_spectrum(138.275, 0.0, NoiseConfig())


def test_quiet_deflection_differences_follow_the_parabola() -> None:
    cfg = ApparatusConfig()
    distances = [3e-6, 4e-6, 5e-6]
    biases = np.linspace(-0.2, 0.08, 8)

    sweep = run_deflection_sweep(cfg, distances, biases, NoiseConfig.quiet())

    differences = sweep.alternation_differences() * sweep.sensitivity
    for row, d in zip(differences, distances):
        k_i = deflection_coefficient(d, cfg)
        v0 = cfg.offset_voltage
        expected = k_i * ((biases - v0) ** 2 - v0**2)
        assert row == pytest.approx(expected, rel=1e-9, abs=1e-20)


def test_deflection_timestamps_increase_across_gaps() -> None:
    sweep = run_deflection_sweep(ApparatusConfig(), [3e-6, 4e-6], [-0.1, 0.0, 0.1], NoiseConfig())

    flat = sweep.timestamps.ravel()
    assert np.all(np.diff(flat) > 0)
    assert sweep.bias_readings.shape == (2, 3)


def test_capacitance_map_is_best_at_zero_tilt() -> None:
    cfg = ApparatusConfig()
    grid = [(tx, ty) for tx in (-2e-4, 0.0, 2e-4) for ty in (-2e-4, 0.0, 2e-4)]

    raw = map_capacitance(cfg, grid, 0.4e-6, quantized=False)
    readings = map_capacitance(cfg, grid, 0.4e-6)

    assert raw.best_tilt == (0.0, 0.0)
    assert raw.quantum is None
    assert readings.quantum == cfg.bridge_resolution
    assert np.allclose(readings.capacitance / cfg.bridge_resolution, np.round(readings.capacitance / cfg.bridge_resolution))


def test_quantize_rounds_to_the_nearest_step() -> None:
    assert quantize(1.26e-12, 0.4e-12) == pytest.approx(1.2e-12)
    assert quantize(1.41e-12, 0.4e-12) == pytest.approx(1.6e-12)


def test_one_bridge_step_resolves_tilt_within_thirty_microradians() -> None:
    cfg = ApparatusConfig()
    tilts = [(float(t), 0.0) for t in np.linspace(0.0, 6e-5, 601)]

    cmap = map_capacitance(cfg, tilts, 0.4e-6)

    steps = cmap.capacitance / 0.4e-12
    assert steps == pytest.approx(np.round(steps), abs=1e-6)
    first_drop = int(np.argmax(cmap.capacitance < cmap.capacitance[0]))
    assert first_drop > 0
    assert tilts[first_drop][0] <= 3e-5
