import json
from pathlib import Path

import pytest

from src import cli
from src.ensemble.roster import ALGORITHM_IDS
from src.exporter import quantile_file_name
from src.schema import CSV_COLUMNS
from src.services.io import load_csv, load_quantile_csv

SMALL_CONFIG = """
seed: 2
input:
  synthetic:
    n: 240
forest:
  n_trees: 3
splines:
  n_interior_knots: 3
"""


@pytest.fixture()
def small_config(tmp_path: Path) -> Path:
    path = tmp_path / "small.yaml"
    path.write_text(SMALL_CONFIG, encoding="utf-8")
    return path


def _result_bytes(out: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.name != "manifest.json"}


def test_no_command_is_usage_error():
    assert cli.main([]) == cli.EXIT_USAGE


def test_bad_config_exit_code(tmp_path: Path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("taus: [0.5, 2.0]\n", encoding="utf-8")
    assert cli.main(["experiment", "--config", str(bad), "--out", str(tmp_path / "out")]) == cli.EXIT_CONFIG
    assert cli.main(["synth", "--config", str(tmp_path / "absent.yaml")]) == cli.EXIT_CONFIG


def test_corrupt_csv_is_data_error(tmp_path: Path):
    corrupt = tmp_path / "corrupt.csv"
    corrupt.write_text("target,pr_p1\n1,2\n", encoding="utf-8")
    config = tmp_path / "csv.yaml"
    config.write_text(f"input:\n  csv: {corrupt}\n", encoding="utf-8")
    out = tmp_path / "out"
    assert cli.main(["experiment", "--config", str(config), "--out", str(out)]) == cli.EXIT_DATA
    assert not (out / "manifest.json").exists()


def test_synth_writes_dataset(tmp_path: Path, small_config: Path):
    out = tmp_path / "synthetic.csv"
    assert cli.main(["synth", "--config", str(small_config), "--n", "50", "--out", str(out)]) == cli.EXIT_OK
    assert len(load_csv(out)) == 50


def test_fit_predict_evaluate_round_trip(tmp_path: Path, small_config: Path):
    train, test = tmp_path / "train.csv", tmp_path / "test.csv"
    common = ["--config", str(small_config)]
    assert cli.main(["synth", *common, "--n", "200", "--out", str(train)]) == cli.EXIT_OK
    assert cli.main(["synth", *common, "--seed", "9", "--n", "60", "--out", str(test)]) == cli.EXIT_OK

    names = []
    for learner in ("GAMLSS-ZAIG", "DRF-ZAGA"):
        model = tmp_path / f"{learner}.json"
        quantiles = tmp_path / f"quantiles_{learner}.csv"
        assert cli.main(["fit", *common, "--data", str(train), "--learner", learner, "--model", str(model)]) == 0
        assert json.loads(model.read_text(encoding="utf-8"))["learner_id"] == learner
        assert cli.main(["predict", *common, "--model", str(model), "--data", str(test), "--out", str(quantiles)]) == 0
        assert load_quantile_csv(quantiles).shape == (60, 17)
        names.append(str(quantiles))

    report_dir = tmp_path / "report"
    code = cli.main(
        ["evaluate", "--quantiles", *names, "--test", str(test), "--train", str(train), "--out", str(report_dir)]
    )
    assert code == cli.EXIT_OK
    report = json.loads((report_dir / "report.json").read_text(encoding="utf-8"))
    assert report["algorithms"] == ["GAMLSS-ZAIG", "DRF-ZAGA"]


def test_predict_with_missing_model_is_data_error(tmp_path: Path, small_config: Path):
    data = tmp_path / "d.csv"
    assert cli.main(["synth", "--config", str(small_config), "--out", str(data)]) == 0
    args = ["predict", "--model", str(tmp_path / "none.json"), "--data", str(data), "--out", str(tmp_path / "q.csv")]
    code = cli.main(args)
    assert code == cli.EXIT_DATA


def test_fit_failure_exit_code(tmp_path: Path, small_config: Path):
    data = tmp_path / "tiny.csv"
    assert cli.main(["synth", "--config", str(small_config), "--n", "12", "--out", str(data)]) == 0
    code = cli.main(["fit", "--data", str(data), "--learner", "DRF-ZAIG", "--model", str(tmp_path / "m.json")])
    assert code == cli.EXIT_FIT


def test_header_only_csv_is_data_error(tmp_path: Path):
    data = tmp_path / "header.csv"
    data.write_text(",".join(CSV_COLUMNS) + "\n", encoding="utf-8")
    code = cli.main(["fit", "--data", str(data), "--learner", "DRF-ZAIG", "--model", str(tmp_path / "m.json")])
    assert code == cli.EXIT_DATA
    config = tmp_path / "csv.yaml"
    config.write_text(f"input:\n  csv: {data}\n", encoding="utf-8")
    assert cli.main(["experiment", "--config", str(config), "--out", str(tmp_path / "out")]) == cli.EXIT_DATA


def test_small_experiment_is_reproducible(tmp_path: Path, small_config: Path):
    subset = "GAMLSS-ZAIG,DRF-ZAIG,DRF-ZAGA,Median(GAMLSS-ZAIG-Splines,GAMLSS-ZAGA-Splines,DRF-ZAIG,DRF-ZAGA)"
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        args = ["experiment", "--config", str(small_config), "--out", str(out), "--algorithms", subset]
        assert cli.main(args) == cli.EXIT_OK
        runs.append(out)
    assert _result_bytes(runs[0]) == _result_bytes(runs[1])
    manifest = json.loads((runs[0] / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["complete"] is True
    assert len(manifest["algorithm_status"]) == 4


@pytest.mark.slow
def test_quick_experiment_writes_all_algorithms(tmp_path: Path):
    out = tmp_path / "quick"
    assert cli.main(["experiment", "--quick", "--seed", "1", "--out", str(out)]) == cli.EXIT_OK
    for algorithm_id in ALGORITHM_IDS:
        assert (out / quantile_file_name(algorithm_id)).exists()
    for name in ("report.json", "fig5_scoring_rule_skill.csv", "fig6_skill_and_ranks.csv", "fig7_coverage.csv"):
        assert (out / name).exists()
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["complete"] is True
    assert manifest["config"]["quick"] is True
    report = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert len(report["algorithms"]) == 17
    for j in range(17):
        column = [report["ranks"][a][j] for a in report["algorithms"]]
        assert sum(column) == pytest.approx(153.0)


@pytest.mark.slow
def test_full_experiment_output_structure(tmp_path: Path):
    out = tmp_path / "full"
    assert cli.main(["experiment", "--seed", "3", "--out", str(out)]) == cli.EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["config"]["input"]["synthetic"]["n"] == 6000
    assert set(manifest["algorithm_status"]) == set(ALGORITHM_IDS)
    assert len(list(out.glob("quantiles_*.csv"))) == 17
    for algorithm_id in ALGORITHM_IDS:
        matrix = load_quantile_csv(out / quantile_file_name(algorithm_id))
        assert matrix.shape == (2000, 17)
        assert matrix.is_noncrossing()
        assert (matrix.values >= 0.0).all()
