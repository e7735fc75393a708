import json
from pathlib import Path

import numpy as np

from src.api.v1.endpoints import AlgorithmStatus, ExperimentConfig
from src.ensemble.quantiles import QuantileMatrix, TauGrid
from src.exporter import MANIFEST_FILE, export_experiment, quantile_file_name, write_report
from src.metrics import evaluate

GRID = TauGrid((0.25, 0.5, 0.75))
ALGORITHMS = ["DRF-ZAIG", "DRF-ZAGA"]


def _inputs():
    rng = np.random.default_rng(0)
    y_test = rng.gamma(2.0, 2.0, size=8)
    y_train = rng.gamma(2.0, 2.0, size=16)
    matrices = {a: QuantileMatrix(np.sort(rng.gamma(2.0, 2.0, size=(8, 3)), axis=1), GRID) for a in ALGORITHMS}
    report = evaluate(matrices, y_test, y_train, GRID, order=ALGORITHMS)
    status = {a: AlgorithmStatus(algorithm=a, success=True) for a in ALGORITHMS}
    config = ExperimentConfig(taus=list(GRID.levels), algorithms=ALGORITHMS)
    return config, matrices, report, status


def test_exporter_writes_files_and_manifest(tmp_path: Path):
    config, matrices, report, status = _inputs()
    manifest = export_experiment(tmp_path, config, matrices, report, {}, status, {"load": 0.1})

    for a in ALGORITHMS:
        assert (tmp_path / quantile_file_name(a)).exists()
    saved = json.loads((tmp_path / MANIFEST_FILE).read_text(encoding="utf-8"))
    assert saved["complete"] is True
    assert saved["stage_seconds"] == {"load": 0.1}
    assert "report.json" in saved["files"]
    assert "fig5_scoring_rule_skill.csv" in saved["files"]
    assert manifest.files == saved["files"]
    assert not list(tmp_path.glob("*.tmp"))


def test_exporter_without_report_is_incomplete(tmp_path: Path):
    config, matrices, _, status = _inputs()
    manifest = export_experiment(tmp_path, config, matrices, None, {}, status, {})
    assert manifest.complete is False
    assert not (tmp_path / "report.json").exists()


def test_exporter_clears_previous_run(tmp_path: Path):
    config, matrices, report, status = _inputs()
    export_experiment(tmp_path, config, matrices, report, {}, status, {})
    (tmp_path / "notes.txt").write_text("keep me", encoding="utf-8")

    narrowed = config.model_copy(update={"algorithms": ["DRF-ZAGA"]})
    only = {"DRF-ZAGA": matrices["DRF-ZAGA"]}
    export_experiment(tmp_path, narrowed, only, None, {}, {"DRF-ZAGA": status["DRF-ZAGA"]}, {})
    assert not (tmp_path / quantile_file_name("DRF-ZAIG")).exists()
    assert not (tmp_path / "report.json").exists()
    assert (tmp_path / "notes.txt").exists()


def test_report_tables_are_deterministic(tmp_path: Path):
    _, _, report, _ = _inputs()
    a = write_report(report, tmp_path / "a")
    b = write_report(report, tmp_path / "b")
    for key in ("report", "fig5", "fig6", "fig7"):
        assert a[key].read_bytes() == b[key].read_bytes()
    header = a["fig6"].read_text(encoding="utf-8").splitlines()[0]
    assert header == "algorithm,tau,skill,rank"
