from __future__ import annotations

import logging
import math
from collections.abc import Callable
from typing import TypeVar

from app.core.errors import CasimirTwinError, exit_code_for
from app.physics.constants import DEFAULT_CONSTANTS
from app.physics.params import CalibrationParams, CasimirParams
from app.physics.published import published
from app.pipeline.campaign import (
    CampaignConfig,
    CampaignReport,
    ComparisonRow,
    ExtractionOutcome,
    OffsetOutcome,
    ParallelizationOutcome,
    ResonanceOutcome,
    StageOutcome,
)
from app.pipeline.stages import (
    simulate_calibration_runs,
    simulate_casimir_run,
    stage_calibrate,
    stage_extract_casimir,
    stage_offset_voltage,
    stage_parallelize,
    stage_resonance,
)
from app.smart_logging.stage_logging import stage_context

logger = logging.getLogger(__name__)

T = TypeVar("T")

STAGE_ORDER = ("parallelize", "offset", "calibrate", "extract", "resonance")


class _StageRunner:
    def __init__(self) -> None:
        self.outcomes: list[StageOutcome] = []

    def run(self, name: str, func: Callable[[], T]) -> T | None:
        with stage_context(name):
            try:
                result = func()
            except CasimirTwinError as exc:
                logger.warning("Stage failed | stage=%s error=%s", name, exc)
                self._record(name, "failed", exc)
                return None
            except Exception as exc:
                logger.exception("Stage crashed | stage=%s", name)
                self._record(name, "failed", exc)
                return None
            logger.info("Stage finished | stage=%s", name)
            self.outcomes.append(StageOutcome(name=name, status="ok"))
            return result

    def skip(self, name: str, reason: str) -> None:
        logger.warning("Stage skipped | stage=%s reason=%s", name, reason)
        self.outcomes.append(StageOutcome(name=name, status="skipped", error=reason))

    def _record(self, name: str, status: str, exc: BaseException) -> None:
        self.outcomes.append(
            StageOutcome(
                name=name,
                status=status,
                error_type=type(exc).__name__,
                error=str(exc),
                exit_code=exit_code_for(exc),
            )
        )


def _pull(
    recovered: float,
    sigma_recovered: float | None,
    reference: float,
    sigma_reference: float | None,
) -> float | None:
    variance = (sigma_recovered or 0.0) ** 2 + (sigma_reference or 0.0) ** 2
    if not variance > 0:
        return None
    return (recovered - reference) / math.sqrt(variance)


def _row(
    key: str,
    recovered: float,
    sigma_recovered: float | None,
    truth: float | None,
) -> ComparisonRow:
    reference = published(key)
    value = reference.value
    return ComparisonRow(
        key=key,
        unit=reference.unit,
        published=value,
        sigma_published=reference.sigma,
        recovered=recovered,
        sigma_recovered=sigma_recovered,
        truth=truth,
        pull_vs_published=_pull(recovered, sigma_recovered, value, reference.sigma),
        pull_vs_truth=None if truth is None else _pull(recovered, sigma_recovered, truth, None),
        citation=reference.citation,
    )


def casimir_rows(config: CampaignConfig, casimir: CasimirParams) -> list[ComparisonRow]:
    cfg = config.apparatus
    truth_c_cas = cfg.casimir_coefficient if config.casimir_on else 0.0
    truth_kc = cfg.casimir_kc if config.casimir_on else 0.0
    return [
        _row("casimir_coefficient", casimir.c_cas, casimir.sigma_c_cas, truth_c_cas),
        _row("kc_measured", casimir.kc, casimir.sigma_kc, truth_kc),
        # ideal-conductor value; the finite-conductivity gap is physics, not noise
        _row("kc_theory", casimir.kc, None, DEFAULT_CONSTANTS.kc_theory()),
        _row("casimir_chi2_probability", casimir.chi2_probability or 0.0, None, None),
        _row("casimir_points", float(casimir.n_points), None, None),
    ]


def calibration_rows(config: CampaignConfig, calibration: CalibrationParams) -> list[ComparisonRow]:
    cfg = config.apparatus
    return [
        _row(
            "frequency_offset",
            calibration.delta_nu2_offset,
            calibration.sigma("delta_nu2_offset"),
            cfg.frequency_offset,
        ),
        _row("distance_correction", calibration.d0, calibration.sigma("d0"), cfg.distance_correction),
        _row(
            "electrostatic_coefficient",
            calibration.c_el,
            calibration.sigma("c_el"),
            cfg.electrostatic_coefficient,
        ),
        # published with the opposite sign convention
        _row("dynamic_offset_voltage", -calibration.v0, calibration.sigma("v0"), -cfg.offset_voltage),
        _row("calibration_chi2_probability", calibration.chi2_probability or 0.0, None, None),
    ]


def comparison_rows(
    config: CampaignConfig,
    parallelization: ParallelizationOutcome | None,
    offset: OffsetOutcome | None,
    calibration: CalibrationParams | None,
    extraction: ExtractionOutcome | None,
    resonance: ResonanceOutcome | None,
) -> tuple[ComparisonRow, ...]:
    """Published vs recovered values with pulls against the publication and the truth."""
    cfg = config.apparatus
    rows: list[ComparisonRow] = []
    if parallelization is not None:
        rows.append(_row("parallelism_tilt", parallelization.residual_tilt, None, 0.0))
        rows.append(_row("max_capacitance", parallelization.capacitance, None, None))
    if offset is not None:
        rows.append(_row("static_offset_voltage", offset.v0, offset.sigma_v0, cfg.offset_voltage))
        rows.append(
            _row(
                "effective_mass_ratio",
                offset.effective_mass_ratio,
                offset.sigma_effective_mass_ratio,
                cfg.effective_mass / cfg.physical_mass,
            )
        )
    if calibration is not None:
        rows.extend(calibration_rows(config, calibration))
    if extraction is not None:
        truth_kc = cfg.casimir_kc if config.casimir_on else 0.0
        rows.extend(casimir_rows(config, extraction.casimir.params))
        rows.append(
            _row(
                "exponent",
                extraction.exponent.exponent,
                extraction.exponent.sigma_exponent,
                5.0 if config.casimir_on else None,
            )
        )
        rows.append(
            _row(
                "wedge_deviation",
                extraction.wedge.deviation,
                extraction.wedge.sigma_deviation,
                abs(config.scan_tilt) * cfg.plate_width,
            )
        )
        rows.append(
            _row(
                "kc_with_drift",
                extraction.drift_casimir.kc,
                extraction.drift_casimir.sigma_kc,
                truth_kc,
            )
        )
        rows.append(_row("drift_chi2_probability", extraction.drift.chi2_probability, None, None))
    if resonance is not None:
        params = resonance.params
        rows.append(_row("free_frequency", params.center, params.sigma_center, cfg.free_frequency))
        rows.append(
            _row("quality_factor", params.quality_factor, params.sigma_quality_factor, cfg.quality_factor)
        )
    return tuple(rows)


def dynamic_effective_mass(config: CampaignConfig, calibration: CalibrationParams) -> float:
    """m_eff implied by C_el = eps0 S / (4 pi^2 m_eff)."""
    cfg = config.apparatus
    return DEFAULT_CONSTANTS.epsilon0 * cfg.plate_area / (4.0 * math.pi**2 * calibration.c_el)


def reproduce_paper(seed: int = 0, config: CampaignConfig | None = None) -> CampaignReport:
    """Run every stage for one seed and assemble the report.

    A failing stage is recorded and the stages depending on it are skipped;
    the report is always returned.
    """
    config = (config or CampaignConfig()).with_seed(seed)
    seeds = config.stage_seeds()
    runner = _StageRunner()
    logger.info("Campaign started | seed=%s config_hash=%s", seed, config.config_hash())

    parallelization = runner.run("parallelize", lambda: stage_parallelize(config))
    offset = runner.run("offset", lambda: stage_offset_voltage(config, seeds["deflection"]))

    calibration = None
    calibration_runs = None
    if offset is None:
        runner.skip("calibrate", "offset voltage unavailable")
    else:

        def _calibrate() -> tuple[list, CalibrationParams]:
            runs = simulate_calibration_runs(config, seeds)
            return runs, stage_calibrate(config, offset.v0, runs)

        calibrated = runner.run("calibrate", _calibrate)
        if calibrated is not None:
            calibration_runs, calibration = calibrated

    extraction = None
    if calibration is None:
        runner.skip("extract", "calibration unavailable")
    else:
        bias = config.cancel_bias_override if config.cancel_bias_override is not None else offset.v0

        def _extract() -> ExtractionOutcome:
            run = simulate_casimir_run(config, seeds["casimir"], bias)
            return stage_extract_casimir(config, calibration, run, calibration_runs)

        extraction = runner.run("extract", _extract)

    resonance = runner.run("resonance", lambda: stage_resonance(config, seeds["spectrum"]))

    report = CampaignReport(
        seed=config.seed,
        config_hash=config.config_hash(),
        stages=tuple(runner.outcomes),
        parallelization=parallelization,
        offset=offset,
        calibration=calibration,
        extraction=extraction,
        resonance=resonance,
        effective_mass_dynamic=(
            dynamic_effective_mass(config, calibration) if calibration is not None else None
        ),
        comparisons=comparison_rows(
            config, parallelization, offset, calibration, extraction, resonance
        ),
    )
    logger.info(
        "Campaign finished | seed=%s ok=%s failed=%s",
        seed,
        report.ok,
        [stage.name for stage in report.stages if stage.status != "ok"],
    )
    return report
