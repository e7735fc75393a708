"""Unified CLI entrypoint for the zero-adjusted regression toolkit."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline
from .api.v1.endpoints import ExperimentConfig, ProcessResult
from .api.v1.engine import ExperimentEngine
from .core.config_loader import parse_config
from .ensemble.roster import LEARNERS
from .errors import ConfigError, DataError, DomainError, FitError, ShapeError, ZadrError
from .exporter import write_report
from .services.io import load_csv, load_quantile_csv, write_csv, write_quantile_csv
from .services.synthetic import generate_synthetic

BASE_DIR = Path(__file__).resolve().parent.parent
DATA_DIR = BASE_DIR / "data"
OUTPUT_DIR = DATA_DIR / "output"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_FIT = 4


def setup_logging(log_file: str | None = None) -> None:
    log_format = "%(asctime)s - %(levelname)s - %(message)s"
    if log_file:
        logging.basicConfig(filename=log_file, level=logging.INFO, format=log_format, force=True)
    else:
        logging.basicConfig(level=logging.INFO, format=log_format, force=True)


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    overrides: dict = {"seed": args.seed}
    algorithms = getattr(args, "algorithms", None)
    if algorithms:
        overrides["algorithms"] = [a.strip() for a in algorithms.split(",") if a.strip()]
    if getattr(args, "n", None) is not None:
        overrides["input"] = {"synthetic": {"n": args.n}}
    return parse_config(args.config, overrides=overrides, quick=args.quick)


def _report(result: ProcessResult) -> None:
    log = logging.info if result.success else logging.error
    log("%s%s", result.message, f" -> {result.output_path}" if result.output_path else "")


def run_synth(args: argparse.Namespace) -> ProcessResult:
    config = _config_from_args(args)
    if config.input.synthetic is None:
        raise ConfigError("synth needs a synthetic input spec, not input.csv")
    d = generate_synthetic(config.input.synthetic, config.seed)
    path = write_csv(d, args.out)
    return ProcessResult(success=True, message="Synthetic dataset written", output_path=str(path), row_count=len(d))


def run_fit(args: argparse.Namespace) -> ProcessResult:
    config = _config_from_args(args)
    d = load_csv(args.data)
    try:
        model = pipeline.fit_model(d, args.learner, config)
    except (ConfigError, DataError, FitError):
        raise
    except (ZadrError, ArithmeticError) as exc:
        raise FitError(str(exc), args.learner) from exc
    path = pipeline.save_model(model, args.model, learner_id=args.learner)
    return ProcessResult(success=True, message=f"[{args.learner}] model fitted", output_path=str(path), row_count=len(d))


def run_predict(args: argparse.Namespace) -> ProcessResult:
    config = _config_from_args(args)
    model = pipeline.load_model(args.model)
    d = load_csv(args.data)
    matrix = pipeline.predict_quantiles(model, d, pipeline.grid_from(config))
    path = write_quantile_csv(matrix, args.out)
    return ProcessResult(success=True, message="Quantiles predicted", output_path=str(path), row_count=len(matrix))


def _algorithm_name(path: Path) -> str:
    stem = path.stem
    return stem[len("quantiles_"):] if stem.startswith("quantiles_") else stem


def run_evaluate(args: argparse.Namespace) -> ProcessResult:
    test = load_csv(args.test)
    train = load_csv(args.train)
    matrices = {}
    for raw in args.quantiles:
        path = Path(raw)
        matrices[_algorithm_name(path)] = load_quantile_csv(path)
    grids = {m.grid for m in matrices.values()}
    if len(grids) != 1:
        raise DataError("All quantile files must share one tau grid.")
    try:
        report = pipeline.evaluate_matrices(matrices, test, train, grids.pop())
    except (ShapeError, DomainError) as exc:
        raise DataError(str(exc)) from exc
    written = write_report(report, args.out)
    return ProcessResult(
        success=True,
        message=f"Evaluated {len(matrices)} quantile files",
        output_path=str(written["report"]),
        row_count=report.n_test,
        metrics={"scoring_rule_skill": report.to_dict()["scoring_rule_skill"]},
    )


def run_experiment(args: argparse.Namespace) -> ProcessResult:
    config = _config_from_args(args)
    out = args.out or config.output_dir
    manifest = ExperimentEngine(config).run(out)
    failed = [a for a, s in manifest.algorithm_status.items() if not s.success]
    return ProcessResult(
        success=manifest.complete,
        message="Experiment complete" if manifest.complete else f"Experiment incomplete; failed: {', '.join(failed)}",
        output_path=str(Path(out) / "manifest.json"),
        row_count=len(manifest.algorithm_status) - len(failed),
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="JSON or YAML experiment config")
    common.add_argument("--seed", type=int, default=None, help="Master seed (overrides the config)")
    common.add_argument("--quick", action="store_true", help="Smoke mode: n=600, 25 trees, fewer knots")
    common.add_argument("--log-file", type=str, default=None, help="Write logs to this file instead of stderr")

    parser = argparse.ArgumentParser(description="Zero-adjusted distributional regression toolkit")
    sub = parser.add_subparsers(dest="command")

    synth = sub.add_parser("synth", parents=[common], help="Generate a synthetic dataset CSV.")
    synth.add_argument("--n", type=int, default=None, help="Number of samples (overrides the config)")
    synth.add_argument("--out", type=str, default=str(OUTPUT_DIR / "synthetic.csv"))

    fit = sub.add_parser("fit", parents=[common], help="Fit one individual learner on a dataset CSV.")
    fit.add_argument("--data", type=str, required=True)
    fit.add_argument("--learner", choices=list(LEARNERS), required=True)
    fit.add_argument("--model", type=str, required=True, help="Output model JSON path")

    predict = sub.add_parser("predict", parents=[common], help="Predict a quantile matrix from a saved model.")
    predict.add_argument("--model", type=str, required=True)
    predict.add_argument("--data", type=str, required=True)
    predict.add_argument("--out", type=str, required=True, help="Output quantile CSV path")

    evaluate = sub.add_parser("evaluate", parents=[common], help="Score quantile CSVs against a test set.")
    evaluate.add_argument("--quantiles", nargs="+", required=True, help="Quantile CSVs, one per algorithm")
    evaluate.add_argument("--test", type=str, required=True, help="Test dataset CSV")
    evaluate.add_argument("--train", type=str, required=True, help="Training dataset CSV for the reference")
    evaluate.add_argument("--out", type=str, default=str(OUTPUT_DIR / "evaluation"))

    experiment = sub.add_parser("experiment", parents=[common], help="Run the full 17-algorithm protocol.")
    experiment.add_argument("--out", type=str, default=None, help="Output directory (overrides the config)")
    experiment.add_argument("--algorithms", type=str, default=None, help="Comma-separated algorithm ids")

    return parser


COMMANDS = {
    "synth": run_synth,
    "fit": run_fit,
    "predict": run_predict,
    "evaluate": run_evaluate,
    "experiment": run_experiment,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command not in COMMANDS:
        parser.print_help()
        return EXIT_USAGE

    setup_logging(args.log_file)
    try:
        result = COMMANDS[args.command](args)
    except ConfigError as exc:
        logging.error("Configuration error: %s", exc)
        return EXIT_CONFIG
    except DataError as exc:
        logging.error("Data error: %s", exc)
        return EXIT_DATA
    except FitError as exc:
        logging.error("Fit error: %s", exc)
        return EXIT_FIT
    except ZadrError as exc:
        logging.error("%s failed: %s", args.command, exc)
        return EXIT_FIT
    _report(result)
    return EXIT_OK if result.success else EXIT_FIT


if __name__ == "__main__":
    sys.exit(main())
