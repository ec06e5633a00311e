from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict

from app.cli.formats import OutputSection, load_config, read_run, write_run, write_table
from app.cli.plots import plot_calibration, plot_casimir, plot_selection
from app.core.errors import CasimirTwinError, ConvergenceError, DataError, exit_code_for
from app.core.settings import load_settings
from app.estimation.calibration import fit_calibration_global
from app.estimation.casimir import fit_casimir
from app.estimation.propagation import subtract_electrostatic
from app.estimation.results import CasimirFit
from app.physics.params import CalibrationParams
from app.physics.published import PUBLISHED
from app.pipeline.batch import coverage_summary, run_coverage
from app.pipeline.campaign import CampaignConfig, CampaignReport, ComparisonRow, ExtractionOutcome
from app.pipeline.reproduce import calibration_rows, casimir_rows, comparison_rows, reproduce_paper
from app.pipeline.stages import (
    simulate_calibration_runs,
    simulate_casimir_run,
    stage_extract_casimir,
    stage_parallelize,
)
from app.simulator.deflection import run_deflection_sweep
from app.simulator.records import MeasurementRun
from app.simulator.spectrum import synthesize_spectrum

logger = logging.getLogger("casimir-twin.cli")

SIMULATE_STAGES = ("scan", "deflection", "spectrum", "parallelize")
ANALYZE_MODES = ("calibrate", "extract", "full")


class AnalysisReport(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: Literal["calibrate", "extract", "full"]
    inputs: tuple[str, ...]
    config_hash: str
    calibration: CalibrationParams
    casimir: CasimirFit | None = None
    extraction: ExtractionOutcome | None = None
    comparisons: tuple[ComparisonRow, ...] = ()

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def _out_dir(out: str | None) -> Path:
    path = Path(out) if out else load_settings().out_dir
    path.mkdir(parents=True, exist_ok=True)
    return path


def _campaign(config_path: str | None, seed: int | None) -> tuple[CampaignConfig, OutputSection]:
    config_file = load_config(config_path)
    config = config_file.to_campaign()
    return (config if seed is None else config.with_seed(seed)), config_file.output


def cmd_simulate(
    config_path: str | None,
    stage: str = "scan",
    seed: int | None = None,
    out: str | None = None,
) -> list[Path]:
    """Write the simulated records of one stage; returns the written paths."""
    config, _ = _campaign(config_path, seed)
    seeds = config.stage_seeds()
    out_dir = _out_dir(out)
    meta = {"seed": str(config.seed), "config_hash": config.config_hash()}
    written: list[Path] = []

    if stage == "scan":
        bias = (
            config.cancel_bias_override
            if config.cancel_bias_override is not None
            else config.cancel_bias
        )
        runs = [
            *simulate_calibration_runs(config, seeds),
            simulate_casimir_run(config, seeds["casimir"], bias),
        ]
        written = [write_run(run, out_dir / f"{run.label}.csv") for run in runs]
    elif stage == "deflection":
        sweep = run_deflection_sweep(
            config.apparatus,
            config.deflection_gaps,
            config.deflection_biases,
            config.noise.with_seed(seeds["deflection"]),
        )
        rows = [
            (d, v, reading, before, after, t)
            for i, d in enumerate(sweep.distances)
            for v, reading, before, after, t in zip(
                sweep.biases,
                sweep.bias_readings[i],
                sweep.zero_before[i],
                sweep.zero_after[i],
                sweep.timestamps[i],
            )
        ]
        written = [
            write_table(
                out_dir / "deflection.csv",
                ("distance_m", "v_c_volt", "reading_v", "zero_before_v", "zero_after_v", "t_s"),
                rows,
                meta,
            )
        ]
    elif stage == "spectrum":
        spectrum = synthesize_spectrum(
            config.apparatus.free_frequency,
            config.apparatus.linewidth,
            config.noise.with_seed(seeds["spectrum"]),
        )
        written = [
            write_table(
                out_dir / "spectrum.csv",
                ("frequency_hz", "power_v2"),
                zip(spectrum.frequencies, spectrum.power),
                meta,
            )
        ]
    elif stage == "parallelize":
        outcome = stage_parallelize(config)
        written = [
            write_table(
                out_dir / "parallelization.csv",
                ("tilt_x_rad", "tilt_y_rad", "capacitance_f"),
                outcome.trace,
                {**meta, "aborted": str(outcome.aborted).lower()},
            )
        ]
    else:
        raise DataError(
            f"unknown simulation stage {stage!r}; choose from {', '.join(SIMULATE_STAGES)}"
        )

    logger.info("Simulation written | stage=%s seed=%s files=%s", stage, config.seed, len(written))
    return written


def _split_runs(runs: Sequence[MeasurementRun]) -> tuple[list[MeasurementRun], list[MeasurementRun]]:
    casimir = [run for run in runs if run.role == "casimir"]
    calibration = [run for run in runs if run.role != "casimir"] or list(runs)
    return calibration, casimir


def cmd_analyze(
    paths: Sequence[str | Path],
    mode: str = "full",
    config_path: str | None = None,
    out: str | None = None,
) -> AnalysisReport:
    """Fit run files and write report.json plus the figures under the output directory."""
    if mode not in ANALYZE_MODES:
        raise DataError(f"unknown analysis mode {mode!r}; choose from {', '.join(ANALYZE_MODES)}")
    config, output = _campaign(config_path, None)
    cfg = config.apparatus
    runs = [read_run(path) for path in paths]
    calibration_runs, casimir_runs = _split_runs(runs)
    if mode != "calibrate" and len(casimir_runs) != 1:
        raise DataError(
            f"{mode} mode needs exactly one run with role=casimir, got {len(casimir_runs)}"
        )
    v0_guess = casimir_runs[0].bias if casimir_runs else 0.0
    out_dir = _out_dir(out)
    plots = output.write_plots

    cal = fit_calibration_global(
        calibration_runs, cfg, v0_guess=v0_guess, shared_offset=config.shared_offset
    )
    if plots:
        plot_calibration(calibration_runs, cal, cfg, out_dir)
    casimir: CasimirFit | None = None
    extraction: ExtractionOutcome | None = None
    rows = calibration_rows(config, cal)

    if mode != "calibrate":
        residuals = subtract_electrostatic(casimir_runs[0], cal, cfg)
        if mode == "extract":
            casimir = fit_casimir(residuals, config.casimir_points, propagation=config.propagation)
            rows.extend(casimir_rows(config, casimir.params))
        else:
            extraction = stage_extract_casimir(config, cal, casimir_runs[0], calibration_runs)
            casimir = extraction.casimir
            rows = list(comparison_rows(config, None, None, cal, extraction, None))
        if plots:
            plot_casimir(residuals, casimir, out_dir)
            plot_selection(casimir.selection, out_dir)

    report = AnalysisReport(
        mode=mode,
        inputs=tuple(str(path) for path in paths),
        config_hash=config.config_hash(),
        calibration=cal,
        casimir=casimir,
        extraction=extraction,
        comparisons=tuple(rows),
    )
    (out_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    logger.info("Analysis written | mode=%s runs=%s out=%s", mode, len(runs), out_dir)
    return report


def _format_value(value: float | None) -> str:
    return "-" if value is None else f"{value:.4g}"


def comparison_table(rows: Sequence[ComparisonRow]) -> str:
    header = (
        f"{'key':<30} {'unit':<14} {'published':>12} {'recovered':>12} "
        f"{'sigma':>10} {'pull_pub':>9} {'pull_true':>9}"
    )
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row.key:<30} {row.unit:<14} {_format_value(row.published):>12} "
            f"{_format_value(row.recovered):>12} {_format_value(row.sigma_recovered):>10} "
            f"{_format_value(row.pull_vs_published):>9} {_format_value(row.pull_vs_truth):>9}"
        )
    return "\n".join(lines)


def list_defaults() -> str:
    return "\n".join(
        f"{item.key:<30} {_format_value(item.value):>10} {_format_value(item.sigma):>10} "
        f"{item.unit:<14} {item.citation}"
        for item in PUBLISHED.values()
    )


def _write_report(report: CampaignReport, out_dir: Path) -> Path:
    run_dir = out_dir / f"seed-{report.seed}"
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    write_table(
        run_dir / "comparison.csv",
        ("key", "unit", "published", "recovered", "sigma_recovered", "pull_vs_published", "pull_vs_truth"),
        [
            (
                row.key,
                row.unit,
                row.published,
                row.recovered,
                "" if row.sigma_recovered is None else row.sigma_recovered,
                "" if row.pull_vs_published is None else row.pull_vs_published,
                "" if row.pull_vs_truth is None else row.pull_vs_truth,
            )
            for row in report.comparisons
        ],
        {"seed": str(report.seed), "config_hash": report.config_hash},
    )
    return run_dir


def cmd_reproduce(
    seed: int = 0,
    config_path: str | None = None,
    out: str | None = None,
    *,
    coverage: int | None = None,
) -> int:
    """Full campaign for one seed (or a coverage batch); returns the exit code."""
    config, output = _campaign(config_path, None)
    out_dir = _out_dir(out)

    if coverage:
        reports = run_coverage(
            range(seed, seed + coverage),
            config,
            max_concurrency=output.max_concurrency,
        )
        summary = coverage_summary(reports)
        payload = {
            "first_seed": seed,
            "seeds": coverage,
            "completed": len(reports),
            "coverage": [row.model_dump(mode="json") for row in summary],
        }
        (out_dir / "coverage.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        for row in summary:
            print(f"{row.key:<30} {row.within_one_sigma:6.3f}  ({row.seeds} seeds)")
        return 0 if len(reports) == coverage else 1

    report = reproduce_paper(seed, config)
    run_dir = _write_report(report, out_dir)
    print(comparison_table(report.comparisons))
    logger.info("Report written | dir=%s ok=%s", run_dir, report.ok)
    failed = [stage for stage in report.stages if stage.status == "failed"]
    return failed[0].exit_code if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="casimir-twin",
        description="Simulated Casimir-force campaign: simulate, analyze, reproduce.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="write simulated run files")
    simulate.add_argument("--config", default=None, help="JSON config file")
    simulate.add_argument("--stage", choices=SIMULATE_STAGES, default="scan")
    simulate.add_argument("--seed", type=int, default=None)
    simulate.add_argument("--out", default=None, help="output directory")

    analyze = sub.add_parser("analyze", help="fit run files")
    analyze.add_argument("files", nargs="+", help="run data files")
    analyze.add_argument("--mode", choices=ANALYZE_MODES, default="full")
    analyze.add_argument("--config", default=None)
    analyze.add_argument("--out", default=None)

    reproduce = sub.add_parser("reproduce", help="run the whole campaign")
    reproduce.add_argument("--config", default=None)
    reproduce.add_argument("--seed", type=int, default=0)
    reproduce.add_argument("--out", default=None)
    reproduce.add_argument("--coverage", type=int, default=None, metavar="N")
    reproduce.add_argument("--list-defaults", action="store_true")
    return parser


def run_cli(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            for path in cmd_simulate(args.config, args.stage, args.seed, args.out):
                print(path)
            return 0
        if args.command == "analyze":
            report = cmd_analyze(args.files, args.mode, args.config, args.out)
            print(comparison_table(report.comparisons))
            return 0
        if args.list_defaults:
            print(list_defaults())
            return 0
        return cmd_reproduce(args.seed, args.config, args.out, coverage=args.coverage)
    except CasimirTwinError as exc:
        logger.error("Command failed | command=%s error=%s", args.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc, ConvergenceError) and exc.diagnostics:
            print(json.dumps(exc.diagnostics, indent=2, default=str), file=sys.stderr)
        return exit_code_for(exc)
