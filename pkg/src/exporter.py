"""Experiment export: report tables, quantile matrices, stacked models and manifest."""

from __future__ import annotations

import json
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

import pandas as pd

from . import __version__
from .api.v1.endpoints import AlgorithmStatus, ExperimentConfig, RunManifest
from .ensemble.quantiles import QuantileMatrix
from .ensemble.roster import file_slug
from .ensemble.stacking import StackedModel
from .metrics import EvaluationReport
from .services.io import FLOAT_FORMAT, write_quantile_csv

REPORT_FILE = "report.json"
FIG5_FILE = "fig5_scoring_rule_skill.csv"
FIG6_FILE = "fig6_skill_and_ranks.csv"
FIG7_FILE = "fig7_coverage.csv"
STACKED_FILE = "stacked_models.json"
MANIFEST_FILE = "manifest.json"


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _write_frame(frame: pd.DataFrame, path: Path) -> None:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n", encoding="utf-8")


def _remove_previous_outputs(out_path: Path) -> None:
    """Delete files listed by an earlier manifest in the same directory."""
    manifest_path = out_path / MANIFEST_FILE
    if not manifest_path.exists():
        return
    try:
        previous = json.loads(manifest_path.read_text(encoding="utf-8")).get("files", [])
    except (json.JSONDecodeError, AttributeError):
        return
    for name in previous:
        target = out_path / Path(name).name
        if target.is_file():
            target.unlink()


def quantile_file_name(algorithm_id: str) -> str:
    return f"quantiles_{file_slug(algorithm_id)}.csv"


def write_report(report: EvaluationReport, out_dir: str | Path) -> dict[str, Path]:
    """report.json plus the three figure tables."""
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    written = {
        "report": out_path / REPORT_FILE,
        "fig5": out_path / FIG5_FILE,
        "fig6": out_path / FIG6_FILE,
        "fig7": out_path / FIG7_FILE,
    }
    written["report"].write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
    _write_frame(report.fig5_frame(), written["fig5"])
    _write_frame(report.fig6_frame(), written["fig6"])
    _write_frame(report.fig7_frame(), written["fig7"])
    return written


def write_results(
    out_dir: str | Path,
    config: ExperimentConfig,
    matrices: Mapping[str, QuantileMatrix],
    report: EvaluationReport | None,
    stacked: Mapping[str, StackedModel],
) -> list[Path]:
    """Write every result file and return the paths written.

    Files listed by an earlier manifest in ``out_dir`` are removed first.
    Result files depend only on config and seed.
    """
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    _remove_previous_outputs(out_path)

    written: list[Path] = []
    for algorithm_id in config.algorithms:
        if algorithm_id in matrices:
            written.append(write_quantile_csv(matrices[algorithm_id], out_path / quantile_file_name(algorithm_id)))
    if report is not None:
        written.extend(write_report(report, out_path).values())
    if stacked:
        payload = {a: stacked[a].to_dict() for a in config.algorithms if a in stacked}
        (out_path / STACKED_FILE).write_text(json.dumps(payload, indent=2), encoding="utf-8")
        written.append(out_path / STACKED_FILE)
    return written


def write_manifest(
    out_dir: str | Path,
    config: ExperimentConfig,
    written: list[Path],
    has_report: bool,
    status: Mapping[str, AlgorithmStatus],
    stage_seconds: Mapping[str, float],
    started_at: str | None = None,
) -> RunManifest:
    """Atomic manifest.json; timings and timestamps live here alone.

    ``complete`` is false when any algorithm failed or no report was produced.
    """
    out_path = Path(out_dir)
    complete = has_report and all(s.success for s in status.values())
    files = sorted({Path(p).name for p in written} | {MANIFEST_FILE})
    manifest = RunManifest(
        config_hash=config.config_hash(),
        software_version=__version__,
        config=config.model_dump(mode="json"),
        stage_seconds=dict(stage_seconds),
        algorithm_status=dict(status),
        files=files,
        complete=complete,
        started_at=started_at,
        completed_at=utc_now(),
    )
    _atomic_write_text(out_path / MANIFEST_FILE, manifest.model_dump_json(indent=2))
    return manifest


def export_experiment(
    out_dir: str | Path,
    config: ExperimentConfig,
    matrices: Mapping[str, QuantileMatrix],
    report: EvaluationReport | None,
    stacked: Mapping[str, StackedModel],
    status: Mapping[str, AlgorithmStatus],
    stage_seconds: Mapping[str, float],
    started_at: str | None = None,
) -> RunManifest:
    written = write_results(out_dir, config, matrices, report, stacked)
    return write_manifest(out_dir, config, written, report is not None, status, stage_seconds, started_at)


__all__ = [
    "MANIFEST_FILE",
    "export_experiment",
    "quantile_file_name",
    "write_manifest",
    "write_report",
    "write_results",
]
