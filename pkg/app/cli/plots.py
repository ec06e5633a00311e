"""Static figures and the tables behind them.

Every figure is written twice: the plotted numbers as a delimited table and
an SVG image. Nothing here feeds back into a fit.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from app.cli.formats import write_table  # noqa: E402
from app.estimation.propagation import ResidualRun  # noqa: E402
from app.estimation.results import CasimirFit, SelectionStep  # noqa: E402
from app.physics.apparatus import ApparatusConfig  # noqa: E402
from app.physics.params import CalibrationParams  # noqa: E402
from app.simulator.records import MeasurementRun  # noqa: E402

logger = logging.getLogger(__name__)

# fixed ids and no timestamp, so identical data give identical files
_SVG_STYLE = {"svg.hashsalt": "casimir-twin", "svg.fonttype": "none"}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def calibration_model(run: MeasurementRun, cal: CalibrationParams, cfg: ApparatusConfig) -> np.ndarray:
    d = run.relative_displacement(cfg) + cal.d0
    return -cal.delta_nu2_offset - cal.c_el * (run.v_c - cal.v0) ** 2 / d**3


def plot_calibration(
    runs: Sequence[MeasurementRun],
    cal: CalibrationParams,
    cfg: ApparatusConfig,
    out_dir: str | Path,
) -> list[Path]:
    """Squared-frequency shift against relative displacement with the global fit."""
    out_dir = Path(out_dir)
    rows = []
    with plt.rc_context(_SVG_STYLE):
        fig, ax = plt.subplots(figsize=(6.4, 4.8))
        for run in runs:
            d_r = run.relative_displacement(cfg)
            model = calibration_model(run, cal, cfg)
            order = np.argsort(d_r)
            ax.errorbar(
                d_r * 1e6,
                run.delta_nu2,
                yerr=run.sigma_delta_nu2,
                fmt="o",
                markersize=3,
                label=f"V_c = {run.bias * 1e3:.1f} mV",
            )
            ax.plot(d_r[order] * 1e6, model[order], "-", linewidth=1)
            rows.extend(
                (run.label, d, y, s, m)
                for d, y, s, m in zip(d_r, run.delta_nu2, run.sigma_delta_nu2, model)
            )
        ax.set_xlabel("relative displacement d_r [um]")
        ax.set_ylabel("Delta nu^2 [Hz^2]")
        ax.legend(fontsize="small")
        svg = _save(fig, out_dir / "calibration_fit.svg")
    table = write_table(
        out_dir / "calibration_fit.csv",
        ("run", "d_r_m", "delta_nu2_hz2", "sigma_delta_nu2_hz2", "model_hz2"),
        rows,
    )
    logger.debug("Calibration figure written | svg=%s csv=%s", svg, table)
    return [table, svg]


def plot_casimir(residuals: ResidualRun, casimir: CasimirFit, out_dir: str | Path) -> list[Path]:
    """Residual shift against gap with the -C_Cas/d^5 overlay on the fitted points."""
    out_dir = Path(out_dir)
    c_cas = casimir.params.c_cas
    fitted = np.zeros(residuals.n_points, dtype=bool)
    fitted[np.argsort(residuals.gap, kind="stable")[: casimir.params.n_points]] = True
    model = -c_cas / residuals.gap**5

    with plt.rc_context(_SVG_STYLE):
        fig, ax = plt.subplots(figsize=(6.4, 4.8))
        ax.errorbar(
            residuals.gap[fitted] * 1e6,
            residuals.residual[fitted],
            yerr=residuals.sigma_residual[fitted],
            fmt="o",
            markersize=3,
            label="fitted",
        )
        if np.any(~fitted):
            ax.errorbar(
                residuals.gap[~fitted] * 1e6,
                residuals.residual[~fitted],
                yerr=residuals.sigma_residual[~fitted],
                fmt="o",
                markersize=3,
                mfc="none",
                label="not fitted",
            )
        grid = np.linspace(residuals.gap.min(), residuals.gap.max(), 200)
        ax.plot(grid * 1e6, -c_cas / grid**5, "-", linewidth=1, label="-C_Cas / d^5")
        ax.axhline(0.0, color="grey", linewidth=0.5)
        ax.set_xlabel("gap d [um]")
        ax.set_ylabel("residual Delta nu^2 [Hz^2]")
        ax.legend(fontsize="small")
        svg = _save(fig, out_dir / "casimir_residuals.svg")
    table = write_table(
        out_dir / "casimir_residuals.csv",
        ("gap_m", "residual_hz2", "sigma_residual_hz2", "model_hz2", "fitted"),
        [
            (g, r, s, m, "yes" if f else "no")
            for g, r, s, m, f in zip(
                residuals.gap, residuals.residual, residuals.sigma_residual, model, fitted
            )
        ],
    )
    return [table, svg]


def plot_selection(selection: Sequence[SelectionStep], out_dir: str | Path) -> list[Path]:
    """chi2 probability of the d^-5 fit against the number of smallest gaps used."""
    out_dir = Path(out_dir)
    table = write_table(
        out_dir / "casimir_selection.csv",
        ("n_points", "c_cas_hz2_m5", "sigma_c_cas_hz2_m5", "chi2", "chi2_probability", "chi2_lower_tail"),
        [
            (
                str(step.n_points),
                step.c_cas,
                step.sigma_c_cas,
                step.chi2,
                step.chi2_probability,
                step.chi2_lower_tail,
            )
            for step in selection
        ],
    )
    with plt.rc_context(_SVG_STYLE):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        ax.plot(
            [step.n_points for step in selection],
            [step.chi2_probability for step in selection],
            "o-",
        )
        ax.set_xlabel("points at the smallest gaps")
        ax.set_ylabel("chi2 probability")
        ax.set_ylim(0.0, 1.0)
        svg = _save(fig, out_dir / "casimir_selection.svg")
    return [table, svg]
