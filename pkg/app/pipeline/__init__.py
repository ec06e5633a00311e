from app.pipeline.batch import CoverageBatch, coverage_summary, run_coverage
from app.pipeline.campaign import CampaignConfig, CampaignReport, ComparisonRow, StageOutcome
from app.pipeline.reproduce import comparison_rows, reproduce_paper
from app.pipeline.stages import (
    stage_calibrate,
    stage_extract_casimir,
    stage_offset_voltage,
    stage_parallelize,
    stage_resonance,
)

__all__ = [
    "CoverageBatch",
    "coverage_summary",
    "run_coverage",
    "CampaignConfig",
    "CampaignReport",
    "ComparisonRow",
    "StageOutcome",
    "comparison_rows",
    "reproduce_paper",
    "stage_calibrate",
    "stage_extract_casimir",
    "stage_offset_voltage",
    "stage_parallelize",
    "stage_resonance",
]
