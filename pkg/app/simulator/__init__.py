from app.simulator.capacitance import map_capacitance
from app.simulator.config import DriftConfig, NoiseConfig, ScanPlan, ScanStep
from app.simulator.deflection import run_deflection_sweep
from app.simulator.records import (
    CapacitanceMap,
    DeflectionSweep,
    MeasurementRun,
    SpectrumRecord,
)
from app.simulator.scan import run_gap_scan, static_bending
from app.simulator.spectrum import synthesize_spectrum

__all__ = [
    "map_capacitance",
    "DriftConfig",
    "NoiseConfig",
    "ScanPlan",
    "ScanStep",
    "run_deflection_sweep",
    "CapacitanceMap",
    "DeflectionSweep",
    "MeasurementRun",
    "SpectrumRecord",
    "run_gap_scan",
    "static_bending",
    "synthesize_spectrum",
]
