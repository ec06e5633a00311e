"""Values reported for the parallel-plate measurement, with where they come from.

Voltages are stored in volts and lengths in metres; the citation strings quote
the wording that introduces each number.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict


class PublishedValue(BaseModel):
    model_config = ConfigDict(frozen=True)

    key: str
    value: float
    sigma: float | None
    unit: str
    citation: str


PUBLISHED: dict[str, PublishedValue] = {
    item.key: item
    for item in (
        PublishedValue(
            key="kc_theory",
            value=1.3e-27,
            sigma=None,
            unit="N m^2",
            citation="coefficient K_C = pi h c/480 = 1.3e-27 N m^2",
        ),
        PublishedValue(
            key="plate_side",
            value=1.2e-3,
            sigma=None,
            unit="m",
            citation="capacitor with an area of 1.2 x 1.2 mm^2",
        ),
        PublishedValue(
            key="beam_length",
            value=1.9e-2,
            sigma=None,
            unit="m",
            citation="optically flat surfaces of size 1.9 cm x 1.2 mm x 47 um",
        ),
        PublishedValue(
            key="beam_thickness",
            value=47e-6,
            sigma=None,
            unit="m",
            citation="optically flat surfaces of size 1.9 cm x 1.2 mm x 47 um",
        ),
        PublishedValue(
            key="free_frequency",
            value=138.275,
            sigma=None,
            unit="Hz",
            citation="free frequency being nu0 = 138.275 Hz",
        ),
        PublishedValue(
            key="quality_factor",
            value=1.0e3,
            sigma=None,
            unit="1",
            citation="mechanical quality factor ~10^3",
        ),
        PublishedValue(
            key="interferometer_sensitivity",
            value=1.0e-7,
            sigma=None,
            unit="m/V",
            citation="typical sensitivity of 1.0e-7 m/V",
        ),
        PublishedValue(
            key="reference_distance",
            value=1.2e-5,
            sigma=None,
            unit="m",
            citation="distance corresponding to V_PZT = 0 V as d_r0 = 1.2e-5 m",
        ),
        PublishedValue(
            key="actuation_coefficient",
            value=1.508e-7,
            sigma=0.002e-7,
            unit="m/V",
            citation="actuation coefficient A = (1.508 +- 0.002)e-7 m/V",
        ),
        PublishedValue(
            key="bridge_resolution",
            value=0.4e-12,
            sigma=None,
            unit="F",
            citation="ac bridge sensitivity of ~0.4 pF",
        ),
        PublishedValue(
            key="max_capacitance",
            value=22e-12,
            sigma=None,
            unit="F",
            citation="a maximum value of 22 pF is obtained",
        ),
        PublishedValue(
            key="parallelism_tilt",
            value=0.0,
            sigma=3e-5,
            unit="rad",
            citation="angular deviation of ~3e-5 radians",
        ),
        PublishedValue(
            key="static_offset_voltage",
            value=-68.6e-3,
            sigma=2.2e-3,
            unit="V",
            citation="average value of V0 = -(68.6 +- 2.2) mV",
        ),
        PublishedValue(
            key="effective_mass_ratio",
            value=0.30,
            sigma=0.05,
            unit="1",
            citation="m_eff = (0.30 +- 0.05) m0",
        ),
        PublishedValue(
            key="frequency_offset",
            value=6.0,
            sigma=1.0,
            unit="Hz^2",
            citation="Delta nu^2_offset = (6 +- 1) Hz^2",
        ),
        PublishedValue(
            key="distance_correction",
            value=-3.30e-7,
            sigma=0.32e-7,
            unit="m",
            citation="d0 = -(3.30 +- 0.32)e-7 m",
        ),
        PublishedValue(
            key="electrostatic_coefficient",
            value=4.24e-13,
            sigma=0.11e-13,
            unit="Hz^2 m^3 V^-2",
            citation="C_el = (4.24 +- 0.11)e-13 Hz^2 m^3",
        ),
        PublishedValue(
            key="dynamic_offset_voltage",
            value=60.2e-3,
            sigma=1.7e-3,
            unit="V",
            citation="V0 = (60.2 +- 1.7) mV",
        ),
        PublishedValue(
            key="calibration_chi2_probability",
            value=0.85,
            sigma=None,
            unit="1",
            citation="with a chi^2 probability of 85%",
        ),
        PublishedValue(
            key="casimir_coefficient",
            value=2.34e-28,
            sigma=0.34e-28,
            unit="Hz^2 m^5",
            citation="C_Cas = (2.34 +- 0.34)e-28 Hz^2 m^5",
        ),
        PublishedValue(
            key="kc_measured",
            value=1.22e-27,
            sigma=0.18e-27,
            unit="N m^2",
            citation="K_C = (1.22 +- 0.18)e-27 N m^2",
        ),
        PublishedValue(
            key="casimir_chi2_probability",
            value=0.61,
            sigma=None,
            unit="1",
            citation="the resulting chi^2 probability is 61%",
        ),
        PublishedValue(
            key="casimir_points",
            value=9,
            sigma=None,
            unit="1",
            citation="the points at the 9 smallest distances (0.5 - 1.1 um region)",
        ),
        PublishedValue(
            key="kc_with_drift",
            value=1.24e-27,
            sigma=0.10e-27,
            unit="N m^2",
            citation="K_C = (1.24 +- 0.10)e-27 N m^2",
        ),
        PublishedValue(
            key="drift_chi2_probability",
            value=0.55,
            sigma=None,
            unit="1",
            citation="with a chi^2 probability of 55%",
        ),
        PublishedValue(
            key="drift_span",
            value=50.0,
            sigma=None,
            unit="Hz^2",
            citation="shift values ranging from 0 to 50 Hz^2",
        ),
        PublishedValue(
            key="exponent",
            value=5.0,
            sigma=0.1,
            unit="1",
            citation="best fit with exponent 5.0 +- 0.1",
        ),
        PublishedValue(
            key="wedge_deviation",
            value=0.0,
            sigma=30e-9,
            unit="m",
            citation="the resulting deviation is 0 +- 30 nm",
        ),
        PublishedValue(
            key="frequency_stat_sigma",
            value=7e-3,
            sigma=None,
            unit="Hz",
            citation="a statistical uncertainty of 7 mHz",
        ),
        PublishedValue(
            key="resolution_bandwidth",
            value=31.25e-3,
            sigma=None,
            unit="Hz",
            citation="resolution bandwidth of 31.25 mHz",
        ),
        PublishedValue(
            key="rms_averages",
            value=2,
            sigma=None,
            unit="1",
            citation="acquiring two rms averages",
        ),
        PublishedValue(
            key="acquisition_budget",
            value=2400.0,
            sigma=None,
            unit="s",
            citation="overall acquisition time is kept below 40 minutes",
        ),
        PublishedValue(
            key="bias_voltages",
            value=-68.6e-3,
            sigma=None,
            unit="V",
            citation="V_c = [-205.8, -137.2, +68.6 mV] and the fourth V_c = -68.6 mV",
        ),
    )
}


def published(key: str) -> PublishedValue:
    return PUBLISHED[key]
