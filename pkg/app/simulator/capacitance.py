from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from app.core.errors import ContactError
from app.physics.apparatus import ApparatusConfig, WedgeGeometry
from app.physics.constants import DEFAULT_CONSTANTS, PhysicalConstants
from app.physics.wedge import tilt_capacitance
from app.simulator.records import CapacitanceMap


def contact_limited_capacitance(
    cfg: ApparatusConfig,
    tilt_x: float,
    tilt_y: float,
    min_gap: float,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> float:
    """Capacitance [F] with the closest corner held at min_gap.

    The two tilt axes are independent wedges sharing the mean gap; their
    shape factors multiply.
    """
    if not min_gap > 0:
        raise ContactError(f"closest approach must be positive, got {min_gap!r} m")
    width, length = cfg.plate_width, cfg.plate_length
    mean_gap = min_gap + 0.5 * (abs(tilt_x) * width + abs(tilt_y) * length)
    flat = constants.epsilon0 * width * length / mean_gap
    along_x = tilt_capacitance(
        mean_gap,
        WedgeGeometry(tilt_theta=tilt_x, plate_width=width, plate_length=length),
        constants,
    )
    along_y = tilt_capacitance(
        mean_gap,
        WedgeGeometry(tilt_theta=tilt_y, plate_width=length, plate_length=width),
        constants,
    )
    return along_x * along_y / flat + cfg.stray_capacitance


def quantize(value: float, quantum: float) -> float:
    return round(value / quantum) * quantum


def map_capacitance(
    cfg: ApparatusConfig,
    tilt_grid: Sequence[tuple[float, float]],
    min_gap: float,
    *,
    quantized: bool = True,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> CapacitanceMap:
    """Bridge readings over a grid of (tilt_x, tilt_y), rounded to the bridge resolution."""
    tilts = np.asarray(tilt_grid, dtype=float).reshape(-1, 2)
    values = np.empty(len(tilts))
    for index, (tilt_x, tilt_y) in enumerate(tilts):
        value = contact_limited_capacitance(cfg, tilt_x, tilt_y, min_gap, constants)
        values[index] = quantize(value, cfg.bridge_resolution) if quantized else value
    return CapacitanceMap(
        tilts=tilts,
        capacitance=values,
        min_gap=min_gap,
        quantum=cfg.bridge_resolution if quantized else None,
    )
