from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from app.physics.apparatus import ApparatusConfig
from app.physics.models import static_deflection
from app.simulator.config import NoiseConfig
from app.simulator.records import DeflectionSweep

logger = logging.getLogger(__name__)


def run_deflection_sweep(
    cfg: ApparatusConfig,
    distances: Sequence[float],
    biases: Sequence[float],
    noise: NoiseConfig,
) -> DeflectionSweep:
    """Static-deflection readings alternating zero bias and each counterbias.

    Per gap the sequence is Z, B1, Z, B2, ..., Bn, Z; the laser drift is a
    random walk advanced at every reading and shared across gaps.
    """
    distances = np.asarray(distances, dtype=float)
    biases = np.asarray(biases, dtype=float)
    n_d, n_b = distances.size, biases.size
    readings_per_gap = 2 * n_b + 1

    rng = np.random.default_rng(noise.rng_seed)
    walk_draws = rng.standard_normal(n_d * readings_per_gap)
    read_draws = rng.standard_normal(n_d * readings_per_gap)
    scale = 1.0 if noise.inject_noise else 0.0
    drift = np.cumsum(scale * noise.laser_drift_step * walk_draws)
    read_noise = scale * noise.deflection_noise * read_draws

    sensitivity = cfg.interferometer_sensitivity
    bias_readings = np.empty((n_d, n_b))
    zero_before = np.empty((n_d, n_b))
    zero_after = np.empty((n_d, n_b))
    timestamps = np.empty((n_d, n_b))

    for i, d in enumerate(distances):
        zero_level = static_deflection(0.0, d, cfg)
        sequence = np.empty(readings_per_gap)
        for k in range(readings_per_gap):
            slot = i * readings_per_gap + k
            level = zero_level if k % 2 == 0 else static_deflection(biases[k // 2], d, cfg)
            sequence[k] = (level + drift[slot] + read_noise[slot]) / sensitivity
        bias_readings[i] = sequence[1::2]
        zero_before[i] = sequence[0:-1:2]
        zero_after[i] = sequence[2::2]
        first_slot = i * readings_per_gap
        timestamps[i] = (first_slot + 1 + 2 * np.arange(n_b)) * noise.reading_interval

    logger.debug(
        "Deflection sweep simulated | distances=%s biases=%s seed=%s",
        n_d,
        n_b,
        noise.rng_seed,
    )
    return DeflectionSweep(
        distances=distances,
        biases=biases,
        bias_readings=bias_readings,
        zero_before=zero_before,
        zero_after=zero_after,
        timestamps=timestamps,
        sensitivity=sensitivity,
    )
